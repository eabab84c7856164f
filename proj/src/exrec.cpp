#include "qrm/exrec.hpp"

#include "json.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qrm {

namespace {

// Punctured word over labels 1..n for the decoder front end.
F2Vector mask_to_pword(const Mask128& e, int m) {
    size_t n = (size_t(1) << m) - 1;
    F2Vector w(n);
    for (size_t i = 0; i < n; i++)
        if (e.get(unsigned(i + 1))) w.set(i, true);
    return w;
}

// Decode w against `code`, return the residual w ^ nearest and the coset of
// the nearest codeword.  Skips the decoder when w is within half the code
// distance of zero: no other codeword can be closer.
struct DecodeOut {
    Mask128 residual;
    CosetDecision decision = CosetDecision::trivial;
};

DecodeOut nearest_residual(const Mask128& w, const RmCode& code, SclDecoder& dec) {
    DecodeOut out;
    if (w.weight() <= (code.distance() - 1) / 2) {
        out.residual = w;
        return out;
    }
    DecodeResult r = dec.decode(SoftInput::from_word(mask_to_pword(w, code.m), code.m), code);
    size_t n = (size_t(1) << code.m) - 1;
    out.residual = w;
    for (size_t l = 1; l <= n; l++)
        if (r.codeword.get(l)) out.residual.flip(unsigned(l));
    if (!code.shortened && r.coset_bit == CosetBit::one_plus)
        out.decision = CosetDecision::logical;
    return out;
}

// Coset decision alone, same half-distance shortcut.
CosetDecision coset_of(const Mask128& w, const RmCode& code, SclDecoder& dec) {
    if (w.weight() <= (code.distance() - 1) / 2) return CosetDecision::trivial;
    DecodeResult r = dec.decode(SoftInput::from_word(mask_to_pword(w, code.m), code.m), code);
    return r.coset_bit == CosetBit::one_plus ? CosetDecision::logical
                                             : CosetDecision::trivial;
}

// Transversal two-qubit depolarizing layer across wires 1..n.  Pattern bits
// follow the simulator convention: 1 x_ctl, 2 z_ctl, 4 x_tgt, 8 z_tgt.
struct CnotNoise {
    Mask128 x_ctl, z_ctl, x_tgt, z_tgt;
};

CnotNoise sample_cnot_layer(int n, double p, SplitMix64& rng) {
    CnotNoise f;
    if (p <= 0) return f;
    BernoulliSkip skip(p);
    uint64_t pos = skip.next_gap(rng);
    while (pos < uint64_t(n)) {
        unsigned q = unsigned(pos) + 1;
        uint8_t pat = uint8_t(1 + rng.below(15));
        if (pat & 1) f.x_ctl.flip(q);
        if (pat & 2) f.z_ctl.flip(q);
        if (pat & 4) f.x_tgt.flip(q);
        if (pat & 8) f.z_tgt.flip(q);
        uint64_t gap = skip.next_gap(rng);
        if (gap == ~uint64_t(0)) break;
        pos += 1 + gap;
    }
    return f;
}

Mask128 ones_mask(int m) {
    Mask128 w;
    for (int l = 1; l < (1 << m); l++) w.set(unsigned(l));
    return w;
}

Mask128 sample_flip_layer(int n, double p, SplitMix64& rng) {
    Mask128 f{};
    if (p <= 0) return f;
    BernoulliSkip skip(p);
    uint64_t pos = skip.next_gap(rng);
    while (pos < uint64_t(n)) {
        f.flip(unsigned(pos) + 1);
        uint64_t gap = skip.next_gap(rng);
        if (gap == ~uint64_t(0)) break;
        pos += 1 + gap;
    }
    return f;
}

// Single-qubit depolarizing on every wire: 0 X, 1 Y, 2 Z.
void depol_all(Frame& f, int n, double p, SplitMix64& rng) {
    if (p <= 0) return;
    BernoulliSkip skip(p);
    uint64_t pos = skip.next_gap(rng);
    while (pos < uint64_t(n)) {
        unsigned q = unsigned(pos) + 1;
        uint64_t pat = rng.below(3);
        if (pat != 2) f.x.flip(q);
        if (pat != 0) f.z.flip(q);
        uint64_t gap = skip.next_gap(rng);
        if (gap == ~uint64_t(0)) break;
        pos += 1 + gap;
    }
}

} // namespace

Mask128 reduce_by_group(const Mask128& r, const RmCode& group, SclDecoder& dec) {
    return nearest_residual(r, group, dec).residual;
}

EcResult steane_ec(Frame& data, const AncillaResidual& anc, EcDirection dir,
                   const RmCode& decision, const NoiseModel& noise,
                   SclDecoder& dec, SplitMix64& rng) {
    int n = (1 << decision.m) - 1;
    CnotNoise f = sample_cnot_layer(n, noise.p_cnot, rng);
    Mask128 w;
    if (dir == EcDirection::correct_z) {
        // |0>-type ancilla as control: its X residual copies onto the data,
        // the data's Z residual copies onto the ancilla and is read out in
        // the X basis.  x_ctl stays on the measured block and vanishes.
        // The correction applies the measured word directly, which cancels
        // the data's own Z term exactly, so the outgoing residual does not
        // depend on the incoming one.  The coset decision is only recorded:
        // it belongs to the logical frame, not to the pattern.
        w = anc.z ^ data.z ^ f.z_ctl ^ sample_flip_layer(n, noise.p_spam, rng);
        CosetDecision d = coset_of(w, decision, dec);
        data.z ^= w ^ f.z_tgt;
        data.x ^= anc.x ^ f.x_tgt;
        return {d, w.weight()};
    }
    // |+>-type ancilla as target: the data's X residual copies onto it and
    // is read out in the Z basis; the ancilla's Z residual copies back onto
    // the data.  z_tgt stays on the measured block and vanishes.
    w = anc.x ^ data.x ^ f.x_tgt ^ sample_flip_layer(n, noise.p_spam, rng);
    CosetDecision d = coset_of(w, decision, dec);
    data.x ^= w ^ f.x_ctl;
    data.z ^= anc.z ^ f.z_ctl;
    return {d, w.weight()};
}

EcResult code_switch(Frame& data, SwitchDirection dir, const AncillaResidual& anc,
                     const PqrmCode& high, const PqrmCode& low,
                     const NoiseModel& noise, SclDecoder& dec, SplitMix64& rng) {
    if (high.m != low.m || high.r_x <= low.r_x)
        throw std::invalid_argument("code_switch: incompatible code pair");
    int m = high.m, n = (1 << m) - 1;
    CnotNoise f = sample_cnot_layer(n, noise.p_cnot, rng);
    Mask128 w;
    CosetDecision d;
    if (dir == SwitchDirection::forward) {
        // One-bit teleport onto a |+> block of the low code: the ancilla is
        // the control, the old block is measured in the Z basis, and the
        // decoded parity picks the X byproduct.  The old block's X residual
        // dies into that decision; its Z residual rides along.  A wrong
        // parity leaves a logical X on the new block.
        RmCode decision{high.r_x, m, true, false};
        w = data.x ^ anc.x ^ f.x_tgt ^ sample_flip_layer(n, noise.p_spam, rng);
        d = coset_of(w, decision, dec);
        data.x = anc.x ^ f.x_ctl;
        data.z = data.z ^ anc.z ^ f.z_ctl;
        if (d == CosetDecision::logical) data.x ^= ones_mask(m);
    } else {
        // Teleport back onto a |0> block of the high code: the old block is
        // the control and is measured in the X basis for the Z byproduct.
        // The short decision distance of the low code makes this the
        // error-prone step of the rectangle.
        RmCode decision{low.r_z, m, true, false};
        w = data.z ^ anc.z ^ f.z_ctl ^ sample_flip_layer(n, noise.p_spam, rng);
        d = coset_of(w, decision, dec);
        data.x = data.x ^ anc.x ^ f.x_tgt;
        data.z = anc.z ^ f.z_tgt;
        if (d == CosetDecision::logical) data.z ^= ones_mask(m);
    }
    return {d, w.weight()};
}

Mask128 twirl_t(const Mask128& x_mask, SplitMix64& rng) {
    Mask128 z;
    z.lo = x_mask.lo & rng.next();
    z.hi = x_mask.hi & rng.next();
    return z;
}

double estimate_clifford_rate(double mean_wz, double mean_wx) {
    static const double coeff =
        double(binomial(15, 8)) * double(min_weight_count(3, 7, true));
    double qz = mean_wz / 127.0, qx = mean_wx / 127.0;
    return coeff * (std::pow(qz, 8) + std::pow(qx, 8));
}

// --- ancilla pool ---

namespace {

void put_varint(std::string& out, uint64_t v) {
    while (v >= 0x80) {
        out.push_back(char(uint8_t(v) | 0x80));
        v >>= 7;
    }
    out.push_back(char(uint8_t(v)));
}

struct VarReader {
    const uint8_t* p;
    const uint8_t* end;
    uint64_t get() {
        uint64_t v = 0;
        int shift = 0;
        while (p < end) {
            uint8_t b = *p++;
            v |= uint64_t(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
            if (shift >= 64) break;
        }
        throw std::runtime_error("pool file: truncated varint");
    }
};

const char* state_name(PrepState s) { return s == PrepState::zero ? "zero" : "plus"; }
const char* order_name(CheckOrder o) {
    return o == CheckOrder::x_pairs_first ? "x_pairs_first" : "z_pairs_first";
}

struct ShotSampler {
    const NoiseTables& t;
    size_t sites;
    BernoulliSkip cnot_skip, spam_skip;

    ShotSampler(const NoiseTables& tables, const NoiseModel& noise)
        : t(tables), sites(tables.cnot.size() / 15),
          cnot_skip(noise.p_cnot), spam_skip(noise.p_spam) {}

    // Fires fault entries for one shot into `ids`; returns the XOR of their
    // check words (accept = all zero).
    std::array<Mask128, 3> shot(SplitMix64& rng, std::vector<uint32_t>& ids) {
        ids.clear();
        std::array<Mask128, 3> checks{};
        auto fire = [&](size_t id) {
            ids.push_back(uint32_t(id));
            const FaultAction& a =
                id < t.cnot.size() ? t.cnot[id] : t.spam[id - t.cnot.size()];
            checks[0] ^= a.checks[0];
            checks[1] ^= a.checks[1];
            checks[2] ^= a.checks[2];
        };
        uint64_t pos = cnot_skip.next_gap(rng);
        while (pos < sites) {
            fire(pos * 15 + rng.below(15));
            uint64_t gap = cnot_skip.next_gap(rng);
            if (gap == ~uint64_t(0)) break;
            pos += 1 + gap;
        }
        pos = spam_skip.next_gap(rng);
        while (pos < t.spam.size()) {
            fire(t.cnot.size() + pos);
            uint64_t gap = spam_skip.next_gap(rng);
            if (gap == ~uint64_t(0)) break;
            pos += 1 + gap;
        }
        return checks;
    }
};

} // namespace

AcceptanceEstimate measure_acceptance(const PrepProtocol& p, const NoiseModel& noise,
                                      uint64_t shots, uint64_t seed) {
    NoiseTables t = protocol_noise_tables(p);
    ShotSampler sampler(t, noise);
    SplitMix64 rng = stream_rng(seed, 0);
    std::vector<uint32_t> ids;
    AcceptanceEstimate est;
    est.shots = shots;
    for (uint64_t s = 0; s < shots; s++) {
        auto checks = sampler.shot(rng, ids);
        if (!checks[0].any() && !checks[1].any() && !checks[2].any()) est.accepted++;
    }
    est.rate = shots ? double(est.accepted) / double(shots) : 0.0;
    return est;
}

void AncillaPool::finalize(const NoiseTables& tables) {
    int m = code_.m;
    size_t n = (size_t(1) << m) - 1;
    SclDecoder dec(m, 32);
    RmCode gx = reduction_group(code_, state_, PauliType::X);
    RmCode gz = reduction_group(code_, state_, PauliType::Z);

    residuals_.assign(singles_.size() + multis_.size(), {});
    for (size_t k = 0; k < singles_.size(); k++) {
        unsigned q = unsigned(k / 3) + 1;
        int pauli = int(k % 3);
        if (pauli != 1) residuals_[k].x.set(q);
        if (pauli != 0) residuals_[k].z.set(q);
    }
    for (size_t i = 0; i < multis_.size(); i++) {
        Mask128 ox, oz;
        for (uint32_t id : multis_[i]) {
            const FaultAction& a = id < tables.cnot.size()
                                       ? tables.cnot[id]
                                       : tables.spam[id - tables.cnot.size()];
            ox ^= a.out_x;
            oz ^= a.out_z;
        }
        residuals_[singles_.size() + i] = {reduce_by_group(ox, gx, dec),
                                           reduce_by_group(oz, gz, dec)};
    }

    cum_.assign(singles_.size() + 1, 0);
    cum_[0] = clean_;
    for (size_t k = 0; k < singles_.size(); k++) cum_[k + 1] = cum_[k] + singles_[k];
    multi_base_ = cum_.back();
    if (multi_base_ + multis_.size() != accepted_)
        throw std::runtime_error("pool: counters disagree with accepted total");
    (void)n;
}

AncillaPool AncillaPool::generate(const PrepProtocol& p, const NoiseModel& noise,
                                  uint64_t target_accepted, uint64_t seed,
                                  uint64_t max_attempts) {
    AncillaPool pool;
    pool.code_ = p.code;
    pool.state_ = p.state;
    pool.order_ = p.order;
    pool.sched_ = p.schedule;
    pool.noise_ = noise;
    pool.seed_ = seed;
    int m = p.code.m;
    size_t n = (size_t(1) << m) - 1;
    pool.singles_.assign(3 * n, 0);

    NoiseTables t = protocol_noise_tables(p);
    ShotSampler sampler(t, noise);
    SplitMix64 rng = stream_rng(seed, 0);
    SclDecoder dec(m, 32);
    RmCode gx = reduction_group(p.code, p.state, PauliType::X);
    RmCode gz = reduction_group(p.code, p.state, PauliType::Z);

    // -2 unknown, -1 folds into clean, -3 keeps its record, else class id
    std::vector<int32_t> klass(t.cnot.size() + t.spam.size(), -2);
    auto classify = [&](uint32_t id) {
        const FaultAction& a =
            id < t.cnot.size() ? t.cnot[id] : t.spam[id - t.cnot.size()];
        Mask128 rx = reduce_by_group(a.out_x, gx, dec);
        Mask128 rz = reduce_by_group(a.out_z, gz, dec);
        if (!rx.any() && !rz.any()) return int32_t(-1);
        if (rx.weight() > 1 || rz.weight() > 1) return int32_t(-3);
        unsigned qx = 0, qz = 0;
        for (unsigned q = 1; q <= n; q++) {
            if (rx.get(q)) qx = q;
            if (rz.get(q)) qz = q;
        }
        if (qx && qz && qx != qz) return int32_t(-3);
        unsigned q = qx ? qx : qz;
        int pauli = qx && qz ? 2 : (qx ? 0 : 1);
        return int32_t((q - 1) * 3 + pauli);
    };

    std::vector<uint32_t> ids;
    while (pool.accepted_ < target_accepted) {
        if (max_attempts && pool.attempts_ >= max_attempts)
            throw PoolFloorError(pool.acceptance_rate(), pool.attempts_);
        pool.attempts_++;
        auto checks = sampler.shot(rng, ids);
        if (checks[0].any() || checks[1].any() || checks[2].any()) continue;
        pool.accepted_++;
        if (ids.empty()) {
            pool.clean_++;
        } else if (ids.size() == 1) {
            int32_t& k = klass[ids[0]];
            if (k == -2) k = classify(ids[0]);
            if (k == -1)
                pool.clean_++;
            else if (k == -3)
                pool.multis_.push_back(ids);
            else
                pool.singles_[size_t(k)]++;
        } else {
            pool.multis_.push_back(ids);
        }
    }
    pool.finalize(t);
    return pool;
}

const AncillaResidual& AncillaPool::draw(SplitMix64& rng) const {
    static const AncillaResidual clean_residual{};
    assert(accepted_ > 0);
    uint64_t u = rng.below(accepted_);
    if (u >= multi_base_) return residuals_[singles_.size() + size_t(u - multi_base_)];
    if (u < clean_) return clean_residual;
    size_t k = size_t(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin()) - 1;
    return residuals_[k];
}

std::string AncillaPool::header_json() const {
    nlohmann::json j{{"rx", code_.r_x},
                     {"rz", code_.r_z},
                     {"m", code_.m},
                     {"state", state_name(state_)},
                     {"check_order", order_name(order_)},
                     {"schedule", sched_.serialize()},
                     {"p_cnot", noise_.p_cnot},
                     {"p_spam", noise_.p_spam},
                     {"seed", seed_},
                     {"attempts", attempts_},
                     {"accepted", accepted_}};
    return j.dump();
}

void AncillaPool::save(const std::string& path) const {
    std::string body;
    put_varint(body, clean_);
    for (uint64_t c : singles_) put_varint(body, c);
    put_varint(body, multis_.size());
    for (const auto& rec : multis_) {
        put_varint(body, rec.size());
        for (uint32_t id : rec) put_varint(body, id);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("pool: cannot write " + path);
    f << header_json() << '\n' << body;
    if (!f) throw std::runtime_error("pool: short write to " + path);
}

// File-level codec shared by load and load_merged.
struct PoolCodec {
    static void read_into(const std::string& path, AncillaPool& pool, bool first) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("pool: cannot read " + path);
        std::string header;
        std::getline(f, header);
        std::stringstream rest;
        rest << f.rdbuf();
        std::string body = rest.str();

        auto j = nlohmann::json::parse(header);
        PqrmCode code{j.at("rx").get<int>(), j.at("rz").get<int>(), j.at("m").get<int>()};
        PrepState state =
            j.at("state").get<std::string>() == "zero" ? PrepState::zero : PrepState::plus;
        CheckOrder order = j.at("check_order").get<std::string>() == "x_pairs_first"
                               ? CheckOrder::x_pairs_first
                               : CheckOrder::z_pairs_first;
        PermutationSchedule sched =
            PermutationSchedule::parse(j.at("schedule").get<std::string>());
        NoiseModel noise;
        noise.p_cnot = j.at("p_cnot").get<double>();
        noise.p_spam = j.at("p_spam").get<double>();

        if (first) {
            pool.code_ = code;
            pool.state_ = state;
            pool.order_ = order;
            pool.sched_ = sched;
            pool.noise_ = noise;
            pool.seed_ = j.at("seed").get<uint64_t>();
            pool.singles_.assign(3 * ((size_t(1) << code.m) - 1), 0);
        } else if (code.r_x != pool.code_.r_x || code.r_z != pool.code_.r_z ||
                   code.m != pool.code_.m || state != pool.state_ ||
                   order != pool.order_ ||
                   sched.serialize() != pool.sched_.serialize() ||
                   noise.p_cnot != pool.noise_.p_cnot ||
                   noise.p_spam != pool.noise_.p_spam) {
            throw std::runtime_error("pool: chunk " + path + " belongs to a different pool");
        }

        VarReader r{reinterpret_cast<const uint8_t*>(body.data()),
                    reinterpret_cast<const uint8_t*>(body.data()) + body.size()};
        uint64_t accepted = j.at("accepted").get<uint64_t>();
        pool.attempts_ += j.at("attempts").get<uint64_t>();
        pool.accepted_ += accepted;
        uint64_t total = r.get();
        pool.clean_ += total;
        for (auto& c : pool.singles_) {
            uint64_t v = r.get();
            c += v;
            total += v;
        }
        uint64_t n_multi = r.get();
        for (uint64_t i = 0; i < n_multi; i++) {
            uint64_t k = r.get();
            std::vector<uint32_t> rec(k);
            for (auto& id : rec) id = uint32_t(r.get());
            pool.multis_.push_back(std::move(rec));
        }
        if (total + n_multi != accepted)
            throw std::runtime_error("pool: chunk " + path + " is inconsistent");
    }
};

AncillaPool AncillaPool::load(const std::string& path) {
    return load_merged({path});
}

AncillaPool AncillaPool::load_merged(const std::vector<std::string>& paths) {
    if (paths.empty()) throw std::invalid_argument("pool: no chunk files given");
    AncillaPool pool;
    for (size_t i = 0; i < paths.size(); i++)
        PoolCodec::read_into(paths[i], pool, i == 0);
    PrepProtocol p = build_protocol(pool.code_, pool.state_, pool.sched_, pool.order_);
    NoiseTables t = protocol_noise_tables(p);
    pool.finalize(t);
    return pool;
}

// --- extended rectangles ---

namespace {

const char* gate_name(LogicalGate g) {
    switch (g) {
    case LogicalGate::gate_cnot: return "cnot";
    case LogicalGate::gate_h: return "h";
    case LogicalGate::gate_s: return "s";
    default: return "t";
    }
}

void check_pool(const AncillaPool* pool, const PqrmCode& code, PrepState state,
                const NoiseModel& noise, const char* role) {
    if (!pool)
        throw std::invalid_argument(std::string("exrec: missing ") + role + " pool");
    if (pool->accepted() == 0)
        throw std::invalid_argument(std::string("exrec: empty ") + role + " pool");
    const PqrmCode& c = pool->code();
    if (c.r_x != code.r_x || c.r_z != code.r_z || c.m != code.m ||
        pool->state() != state)
        throw std::invalid_argument(std::string("exrec: ") + role +
                                    " pool prepares the wrong state");
    if (pool->noise().p_cnot != noise.p_cnot || pool->noise().p_spam != noise.p_spam)
        throw std::invalid_argument(std::string("exrec: ") + role +
                                    " pool was generated at a different noise point");
}

struct ClassCounter {
    const char* label;
    uint64_t errors = 0;
};

} // namespace

std::string ExRecResult::to_json() const {
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& c : classes)
        cls.push_back({{"class", c.label},
                       {"errors", c.errors},
                       {"rate", c.rate},
                       {"stderr", c.stderr_}});
    nlohmann::json j{{"gate", gate_name(gate)},
                     {"trials", trials},
                     {"failures", failures},
                     {"rate", rate},
                     {"stderr", stderr_},
                     {"classes", cls},
                     {"mean_seen_z", mean_seen_z},
                     {"mean_seen_x", mean_seen_x},
                     {"lec_anomalies", lec_anomalies}};
    return j.dump();
}

ExRecResult run_exrec(const ExRecSpec& spec, const PoolSet& pools,
                      uint64_t trials, uint64_t seed) {
    const PqrmCode& code = spec.code;
    int m = code.m, n = (1 << m) - 1;
    if (code.r_z != m - code.r_x - 1)
        throw std::invalid_argument("exrec: code does not carry one logical qubit");

    check_pool(pools.zero_main, code, PrepState::zero, spec.noise, "|0> main");
    check_pool(pools.plus_main, code, PrepState::plus, spec.noise, "|+> main");
    if (spec.gate == LogicalGate::gate_t)
        check_pool(pools.plus_switch, spec.switch_code, PrepState::plus, spec.noise,
                   "|+> switch");

    RmCode dec_z{code.r_z, m, true, false};
    RmCode dec_x{code.r_x, m, true, false};
    SclDecoder dec(m, spec.list_size);
    SplitMix64 rng = stream_rng(seed, 0);

    std::vector<ClassCounter> classes;
    if (spec.gate == LogicalGate::gate_cnot)
        classes = {{"ZI"}, {"XI"}, {"IZ"}, {"IX"}};
    else
        classes = {{"Z"}, {"X"}};

    ExRecResult out;
    out.gate = spec.gate;
    out.trials = trials;
    uint64_t seen_z_sum = 0, seen_x_sum = 0, seen_z_n = 0, seen_x_n = 0;

    auto lec = [&](Frame& f, EcResult r) {
        (void)f;
        if (r.decision == CosetDecision::logical) out.lec_anomalies++;
    };
    // Seen-weight means track the dominant channels only: for the two-block
    // gate those are the control-side Z decoder and the target-side X
    // decoder, the ones fed by propagation from the other leg.
    auto tec = [&](size_t cls, EcResult r, bool z_side, bool track) -> bool {
        if (track) {
            if (z_side) {
                seen_z_sum += uint64_t(r.seen_weight);
                seen_z_n++;
            } else {
                seen_x_sum += uint64_t(r.seen_weight);
                seen_x_n++;
            }
        }
        if (r.decision != CosetDecision::logical) return false;
        classes[cls].errors++;
        return true;
    };

    for (uint64_t trial = 0; trial < trials; trial++) {
        bool failed = false;
        if (spec.gate == LogicalGate::gate_cnot) {
            Frame a{}, b{};
            lec(a, steane_ec(a, pools.zero_main->draw(rng), EcDirection::correct_z,
                             dec_z, spec.noise, dec, rng));
            lec(a, steane_ec(a, pools.plus_main->draw(rng), EcDirection::correct_x,
                             dec_x, spec.noise, dec, rng));
            lec(b, steane_ec(b, pools.zero_main->draw(rng), EcDirection::correct_z,
                             dec_z, spec.noise, dec, rng));
            lec(b, steane_ec(b, pools.plus_main->draw(rng), EcDirection::correct_x,
                             dec_x, spec.noise, dec, rng));
            b.x ^= a.x;
            a.z ^= b.z;
            CnotNoise f = sample_cnot_layer(n, spec.noise.p_cnot, rng);
            a.x ^= f.x_ctl;
            a.z ^= f.z_ctl;
            b.x ^= f.x_tgt;
            b.z ^= f.z_tgt;
            failed |= tec(0, steane_ec(a, pools.zero_main->draw(rng), EcDirection::correct_z,
                                       dec_z, spec.noise, dec, rng), true, true);
            failed |= tec(1, steane_ec(a, pools.plus_main->draw(rng), EcDirection::correct_x,
                                       dec_x, spec.noise, dec, rng), false, false);
            failed |= tec(2, steane_ec(b, pools.zero_main->draw(rng), EcDirection::correct_z,
                                       dec_z, spec.noise, dec, rng), true, false);
            failed |= tec(3, steane_ec(b, pools.plus_main->draw(rng), EcDirection::correct_x,
                                       dec_x, spec.noise, dec, rng), false, true);
        } else if (spec.gate == LogicalGate::gate_t) {
            Frame f{};
            lec(f, steane_ec(f, pools.zero_main->draw(rng), EcDirection::correct_z,
                             dec_z, spec.noise, dec, rng));
            lec(f, code_switch(f, SwitchDirection::forward, pools.plus_switch->draw(rng),
                               code, spec.switch_code, spec.noise, dec, rng));
            // the X byproduct correction is applied physically before the
            // transversal T; Z corrections afterwards stay in the frame
            depol_all(f, n, spec.noise.p_corr, rng);
            f.z ^= twirl_t(f.x, rng);
            depol_all(f, n, spec.noise.p_single, rng);
            failed |= tec(0, code_switch(f, SwitchDirection::reverse,
                                         pools.zero_main->draw(rng), code,
                                         spec.switch_code, spec.noise, dec, rng), true, true);
            if (spec.both_corrections) depol_all(f, n, spec.noise.p_corr, rng);
            failed |= tec(1, steane_ec(f, pools.plus_main->draw(rng), EcDirection::correct_x,
                                       dec_x, spec.noise, dec, rng), false, true);
        } else {
            Frame f{};
            lec(f, steane_ec(f, pools.zero_main->draw(rng), EcDirection::correct_z,
                             dec_z, spec.noise, dec, rng));
            lec(f, steane_ec(f, pools.plus_main->draw(rng), EcDirection::correct_x,
                             dec_x, spec.noise, dec, rng));
            if (spec.gate == LogicalGate::gate_h)
                std::swap(f.x, f.z);
            else
                f.z ^= f.x;
            depol_all(f, n, spec.noise.p_single, rng);
            failed |= tec(0, steane_ec(f, pools.zero_main->draw(rng), EcDirection::correct_z,
                                       dec_z, spec.noise, dec, rng), true, true);
            failed |= tec(1, steane_ec(f, pools.plus_main->draw(rng), EcDirection::correct_x,
                                       dec_x, spec.noise, dec, rng), false, true);
        }
        if (failed) out.failures++;
    }

    out.rate = trials ? double(out.failures) / double(trials) : 0.0;
    out.stderr_ = trials ? std::sqrt(double(out.failures)) / double(trials) : 0.0;
    for (const auto& c : classes) {
        double r = trials ? double(c.errors) / double(trials) : 0.0;
        double s = trials ? std::sqrt(double(c.errors)) / double(trials) : 0.0;
        out.classes.push_back({c.label, c.errors, r, s});
    }
    out.mean_seen_z = seen_z_n ? double(seen_z_sum) / double(seen_z_n) : 0.0;
    out.mean_seen_x = seen_x_n ? double(seen_x_sum) / double(seen_x_n) : 0.0;
    return out;
}

} // namespace qrm
