#include "qrm/circuit.hpp"

#include "qrm/rng.hpp"

#include <cassert>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace qrm {

void Circuit::add_init(uint32_t q, Basis b) {
    Layer l;
    l.kind = LayerKind::init;
    l.qubit = q;
    l.basis = b;
    layers.push_back(std::move(l));
}

void Circuit::add_cnot_layer(std::vector<std::pair<uint32_t, uint32_t>> pairs) {
    Layer l;
    l.kind = LayerKind::cnot;
    l.pairs = std::move(pairs);
    layers.push_back(std::move(l));
}

void Circuit::add_meas(uint32_t q, Basis b) {
    Layer l;
    l.kind = LayerKind::meas;
    l.qubit = q;
    l.basis = b;
    layers.push_back(std::move(l));
}

uint32_t Circuit::add_perm(std::vector<uint32_t> sigma) {
    perms.push_back(std::move(sigma));
    uint32_t id = uint32_t(perms.size() - 1);
    add_perm_ref(id);
    return id;
}

void Circuit::add_perm_ref(uint32_t id) {
    Layer l;
    l.kind = LayerKind::perm;
    l.perm_id = id;
    layers.push_back(std::move(l));
}

void Circuit::add_tick() {
    layers.push_back(Layer{});
}

void Circuit::add_depol1(std::vector<uint32_t> qubits, bool corr) {
    Layer l;
    l.kind = LayerKind::depol1;
    l.corr = corr;
    l.qubits = std::move(qubits);
    layers.push_back(std::move(l));
}

size_t Circuit::count_cnots() const {
    size_t c = 0;
    for (const Layer& l : layers)
        if (l.kind == LayerKind::cnot) c += l.pairs.size();
    return c;
}

size_t Circuit::count_inits(Basis b) const {
    size_t c = 0;
    for (const Layer& l : layers)
        if (l.kind == LayerKind::init && l.basis == b) c++;
    return c;
}

size_t Circuit::count_meas() const {
    size_t c = 0;
    for (const Layer& l : layers)
        if (l.kind == LayerKind::meas) c++;
    return c;
}

void Circuit::validate() const {
    auto in_range = [&](uint32_t q) {
        if (q >= n_qubits) throw std::invalid_argument("circuit: qubit out of range");
    };
    std::unordered_set<uint32_t> measured;
    for (const Layer& l : layers) {
        switch (l.kind) {
        case LayerKind::init:
            in_range(l.qubit);
            break;
        case LayerKind::meas:
            in_range(l.qubit);
            if (!measured.insert(l.qubit).second)
                throw std::invalid_argument("circuit: qubit measured twice");
            break;
        case LayerKind::cnot: {
            std::unordered_set<uint32_t> used;
            for (auto [c, t] : l.pairs) {
                in_range(c);
                in_range(t);
                if (c == t || !used.insert(c).second || !used.insert(t).second)
                    throw std::invalid_argument("circuit: qubit reused within a cnot layer");
            }
            break;
        }
        case LayerKind::perm:
            if (l.perm_id >= perms.size())
                throw std::invalid_argument("circuit: dangling perm id");
            if (perms[l.perm_id].size() != n_qubits)
                throw std::invalid_argument("circuit: perm size mismatch");
            break;
        case LayerKind::depol1:
            for (uint32_t q : l.qubits) in_range(q);
            break;
        case LayerKind::tick:
            break;
        }
    }
}

std::string Circuit::to_text() const {
    std::string out;
    for (const Layer& l : layers) {
        switch (l.kind) {
        case LayerKind::init:
            out += "INIT " + std::to_string(l.qubit) + (l.basis == Basis::Z ? " Z" : " X");
            break;
        case LayerKind::meas:
            out += "MEAS " + std::to_string(l.qubit) + (l.basis == Basis::Z ? " Z" : " X");
            break;
        case LayerKind::cnot: {
            out += "CNOT";
            for (auto [c, t] : l.pairs)
                out += " " + std::to_string(c) + " " + std::to_string(t);
            break;
        }
        case LayerKind::perm:
            out += "PERM " + std::to_string(l.perm_id);
            break;
        case LayerKind::tick:
            out += "TICK";
            break;
        case LayerKind::depol1: {
            out += l.corr ? "DEPOL1 C" : "DEPOL1 S";
            for (uint32_t q : l.qubits) out += " " + std::to_string(q);
            break;
        }
        }
        out += '\n';
    }
    return out;
}

Circuit Circuit::from_text(const std::string& text) {
    Circuit c;
    uint32_t max_q = 0;
    uint32_t max_perm = 0;
    bool any_perm = false;
    std::istringstream in(text);
    std::string line;
    auto parse_basis = [](const std::string& tok) {
        if (tok == "Z") return Basis::Z;
        if (tok == "X") return Basis::X;
        throw std::invalid_argument("circuit text: bad basis " + tok);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string op;
        ls >> op;
        if (op == "TICK") {
            c.add_tick();
        } else if (op == "INIT" || op == "MEAS") {
            uint32_t q;
            std::string b;
            if (!(ls >> q >> b)) throw std::invalid_argument("circuit text: bad line " + line);
            if (op == "INIT") c.add_init(q, parse_basis(b));
            else c.add_meas(q, parse_basis(b));
            max_q = std::max(max_q, q + 1);
        } else if (op == "CNOT") {
            std::vector<std::pair<uint32_t, uint32_t>> pairs;
            uint32_t a, b;
            while (ls >> a) {
                if (!(ls >> b)) throw std::invalid_argument("circuit text: odd cnot list");
                pairs.emplace_back(a, b);
                max_q = std::max(max_q, std::max(a, b) + 1);
            }
            c.add_cnot_layer(std::move(pairs));
        } else if (op == "PERM") {
            uint32_t id;
            if (!(ls >> id)) throw std::invalid_argument("circuit text: bad perm line");
            c.add_perm_ref(id);
            max_perm = std::max(max_perm, id + 1);
            any_perm = true;
        } else if (op == "DEPOL1") {
            std::string which;
            if (!(ls >> which) || (which != "S" && which != "C"))
                throw std::invalid_argument("circuit text: bad depol1 line");
            std::vector<uint32_t> qs;
            uint32_t q;
            while (ls >> q) {
                qs.push_back(q);
                max_q = std::max(max_q, q + 1);
            }
            c.add_depol1(std::move(qs), which == "C");
        } else {
            throw std::invalid_argument("circuit text: unknown op " + op);
        }
    }
    c.n_qubits = max_q;
    if (any_perm) c.perms.resize(max_perm); // placeholders; table travels separately
    return c;
}

Circuit hypercube_encoder(int r_x, int r_z, int m, PrepState state, bool punctured) {
    assert(r_x >= 0 && r_z >= 0 && r_x + r_z < m);
    uint32_t n = uint32_t(1) << m;
    Circuit c(n);
    for (uint32_t q = punctured ? 1 : 0; q < n; q++) {
        bool x_init = (state == PrepState::zero)
                          ? popcount64(q) <= r_x
                          : popcount64(q) > r_z;
        c.add_init(q, x_init ? Basis::X : Basis::Z);
    }
    for (int t = 1; t <= m; t++) {
        uint32_t bit = uint32_t(1) << (t - 1);
        std::vector<std::pair<uint32_t, uint32_t>> pairs;
        for (uint32_t j = 0; j < n; j++) {
            if (j & bit) continue;
            if (punctured && j == 0) continue;
            if (state == PrepState::zero) pairs.emplace_back(j, j | bit);
            else pairs.emplace_back(j | bit, j);
        }
        c.add_tick();
        c.add_cnot_layer(std::move(pairs));
    }
    return c;
}

void append_transversal_meas(Circuit& c, Basis b) {
    std::vector<uint32_t> qs;
    for (const Layer& l : c.layers)
        if (l.kind == LayerKind::init) qs.push_back(l.qubit);
    std::sort(qs.begin(), qs.end());
    c.add_tick();
    for (uint32_t q : qs) c.add_meas(q, b);
}

namespace {

void apply_fault_masks(const Circuit& c, const FaultEvent& f, F2Vector& x, F2Vector& z) {
    if (f.slot < 0) {
        if (f.pauli & 1) x.flip(f.wire);
        if (f.pauli & 2) z.flip(f.wire);
        return;
    }
    const Layer& l = c.layers.at(f.layer);
    if (l.kind != LayerKind::cnot || size_t(f.slot) >= l.pairs.size())
        throw std::invalid_argument("fault: gate address is not a cnot pair");
    auto [ctl, tgt] = l.pairs[f.slot];
    if (f.pauli & 1) x.flip(ctl);
    if (f.pauli & 2) z.flip(ctl);
    if (f.pauli & 4) x.flip(tgt);
    if (f.pauli & 8) z.flip(tgt);
}

} // namespace

ResidualError propagate_fault_set(const Circuit& c, const std::vector<FaultEvent>& fs,
                                  std::vector<uint8_t>* meas_flips) {
    F2Vector x(c.n_qubits), z(c.n_qubits);
    if (meas_flips) meas_flips->clear();
    for (uint32_t li = 0; li < c.layers.size(); li++) {
        const Layer& l = c.layers[li];
        bool is_meas = l.kind == LayerKind::meas;
        if (is_meas)
            for (const FaultEvent& f : fs)
                if (f.layer == li) apply_fault_masks(c, f, x, z);
        switch (l.kind) {
        case LayerKind::init:
            x.set(l.qubit, false);
            z.set(l.qubit, false);
            break;
        case LayerKind::cnot:
            for (auto [ctl, tgt] : l.pairs) {
                if (x.get(ctl)) x.flip(tgt);
                if (z.get(tgt)) z.flip(ctl);
            }
            break;
        case LayerKind::perm: {
            const auto& sigma = c.perms.at(l.perm_id);
            x = permute_scatter(x, sigma);
            z = permute_scatter(z, sigma);
            break;
        }
        case LayerKind::meas:
            if (meas_flips)
                meas_flips->push_back(l.basis == Basis::Z ? x.get(l.qubit) : z.get(l.qubit));
            x.set(l.qubit, false);
            z.set(l.qubit, false);
            break;
        default:
            break;
        }
        if (!is_meas)
            for (const FaultEvent& f : fs)
                if (f.layer == li) apply_fault_masks(c, f, x, z);
    }
    return ResidualError{std::move(x), std::move(z)};
}

ResidualError propagate_fault(const Circuit& c, const FaultEvent& f,
                              std::vector<uint8_t>* meas_flips) {
    return propagate_fault_set(c, {f}, meas_flips);
}

std::vector<FaultSite> fault_sites(const Circuit& c) {
    std::vector<FaultSite> sites;
    for (uint32_t li = 0; li < c.layers.size(); li++) {
        const Layer& l = c.layers[li];
        if (l.kind == LayerKind::cnot) {
            for (uint32_t s = 0; s < l.pairs.size(); s++)
                sites.push_back({li, int32_t(s), LayerKind::cnot,
                                 l.pairs[s].first, l.pairs[s].second});
        } else if (l.kind == LayerKind::init || l.kind == LayerKind::meas) {
            sites.push_back({li, -1, l.kind, l.qubit, 0});
        }
    }
    return sites;
}

BatchResult flip_simulate(const Circuit& c, const NoiseModel& noise,
                          uint64_t seed, uint64_t batch, bool randomize_inits) {
    if (c.n_qubits > 128) throw std::invalid_argument("flip_simulate: at most 128 wires");
    SplitMix64 rng = stream_rng(seed, batch);
    BatchResult out;

    // Single-shot-bit flips to fold in around each layer's execution.
    struct Pend {
        uint32_t q;
        uint64_t xbits, zbits;
    };
    std::vector<std::vector<Pend>> pre(c.layers.size()), post(c.layers.size());

    // cnot sites: 15-way two-qubit depolarizing after the gate.
    {
        std::vector<std::pair<uint32_t, uint32_t>> gates; // (layer, slot)
        for (uint32_t li = 0; li < c.layers.size(); li++)
            if (c.layers[li].kind == LayerKind::cnot)
                for (uint32_t s = 0; s < c.layers[li].pairs.size(); s++)
                    gates.emplace_back(li, s);
        BernoulliSkip skip(noise.p_cnot);
        uint64_t total = uint64_t(gates.size()) * 64, pos = skip.next_gap(rng);
        while (pos < total) {
            auto [li, s] = gates[pos / 64];
            uint64_t bit = uint64_t(1) << (pos % 64);
            auto [ctl, tgt] = c.layers[li].pairs[s];
            uint8_t pat = uint8_t(1 + rng.below(15));
            post[li].push_back({ctl, (pat & 1) ? bit : 0, (pat & 2) ? bit : 0});
            post[li].push_back({tgt, (pat & 4) ? bit : 0, (pat & 8) ? bit : 0});
            out.cnot_faults++;
            uint64_t gap = skip.next_gap(rng);
            if (gap == ~uint64_t(0)) break;
            pos += 1 + gap;
        }
    }

    // SPAM sites: state flip after init, readout flip before meas.
    {
        std::vector<uint32_t> lines;
        for (uint32_t li = 0; li < c.layers.size(); li++)
            if (c.layers[li].kind == LayerKind::init || c.layers[li].kind == LayerKind::meas)
                lines.push_back(li);
        BernoulliSkip skip(noise.p_spam);
        uint64_t total = uint64_t(lines.size()) * 64, pos = skip.next_gap(rng);
        while (pos < total) {
            uint32_t li = lines[pos / 64];
            const Layer& l = c.layers[li];
            uint64_t bit = uint64_t(1) << (pos % 64);
            // A flip in the measured/prepared basis: X-type against Z, Z-type
            // against X.
            Pend p{l.qubit, l.basis == Basis::Z ? bit : 0, l.basis == Basis::X ? bit : 0};
            (l.kind == LayerKind::meas ? pre : post)[li].push_back(p);
            out.spam_flips++;
            uint64_t gap = skip.next_gap(rng);
            if (gap == ~uint64_t(0)) break;
            pos += 1 + gap;
        }
    }

    // depol1 sites, gate rate then correction rate.
    for (bool corr : {false, true}) {
        std::vector<std::pair<uint32_t, uint32_t>> spots; // (layer, qubit)
        for (uint32_t li = 0; li < c.layers.size(); li++)
            if (c.layers[li].kind == LayerKind::depol1 && c.layers[li].corr == corr)
                for (uint32_t q : c.layers[li].qubits) spots.emplace_back(li, q);
        BernoulliSkip skip(corr ? noise.p_corr : noise.p_single);
        uint64_t total = uint64_t(spots.size()) * 64, pos = skip.next_gap(rng);
        while (pos < total) {
            auto [li, q] = spots[pos / 64];
            uint64_t bit = uint64_t(1) << (pos % 64);
            uint64_t pat = rng.below(3); // X, Y, Z
            post[li].push_back({q, pat != 2 ? bit : 0, pat != 0 ? bit : 0});
            out.single_faults++;
            uint64_t gap = skip.next_gap(rng);
            if (gap == ~uint64_t(0)) break;
            pos += 1 + gap;
        }
    }

    // Word-parallel frame pass: bit s of xw[q]/zw[q] is shot s.
    std::vector<uint64_t> xw(c.n_qubits, 0), zw(c.n_qubits, 0);
    for (uint32_t li = 0; li < c.layers.size(); li++) {
        const Layer& l = c.layers[li];
        for (const Pend& p : pre[li]) {
            xw[p.q] ^= p.xbits;
            zw[p.q] ^= p.zbits;
        }
        switch (l.kind) {
        case LayerKind::init:
            xw[l.qubit] = 0;
            zw[l.qubit] = 0;
            if (randomize_inits) {
                if (l.basis == Basis::X) xw[l.qubit] = rng.next();
                else zw[l.qubit] = rng.next();
            }
            break;
        case LayerKind::cnot:
            for (auto [ctl, tgt] : l.pairs) {
                xw[tgt] ^= xw[ctl];
                zw[ctl] ^= zw[tgt];
            }
            break;
        case LayerKind::perm: {
            const auto& sigma = c.perms.at(l.perm_id);
            std::vector<uint64_t> nx(c.n_qubits, 0), nz(c.n_qubits, 0);
            for (uint32_t q = 0; q < c.n_qubits; q++) {
                nx[sigma[q]] = xw[q];
                nz[sigma[q]] = zw[q];
            }
            xw = std::move(nx);
            zw = std::move(nz);
            break;
        }
        case LayerKind::meas:
            out.meas.push_back({l.qubit, l.basis,
                                l.basis == Basis::Z ? xw[l.qubit] : zw[l.qubit]});
            xw[l.qubit] = 0;
            zw[l.qubit] = 0;
            break;
        default:
            break;
        }
        for (const Pend& p : post[li]) {
            xw[p.q] ^= p.xbits;
            zw[p.q] ^= p.zbits;
        }
    }

    for (uint32_t q = 0; q < c.n_qubits; q++) {
        for (uint64_t w = xw[q]; w; w &= w - 1) out.x_res[__builtin_ctzll(w)].set(q);
        for (uint64_t w = zw[q]; w; w &= w - 1) out.z_res[__builtin_ctzll(w)].set(q);
    }
    return out;
}

} // namespace qrm
