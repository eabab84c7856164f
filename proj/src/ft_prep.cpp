#include "qrm/ft_prep.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <random>
#include <unordered_map>
#include <utility>

namespace qrm {

namespace {

int label_weight(int j) { return popcount64(uint64_t(j)); }

uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct MaskHash {
    size_t operator()(const Mask128& v) const { return size_t(v.hash()); }
};

double binom_d(size_t n, int k) {
    double r = 1;
    for (int i = 0; i < k; i++) r = r * double(n - i) / double(i + 1);
    return r < 0 ? 0 : r;
}

} // namespace

Mask128 DetectorMap::apply(Mask128 word) const {
    word.lo &= ~uint64_t(1); // the removed label never carries signal
    Mask128 t = use_zeta ? zeta128(word, m) : mu128(word, m);
    return t & selector;
}

// The zero-state encoder acts on Pauli masks as zeta for X and mu for Z;
// the plus-state encoder reverses every CNOT and so swaps the two roles.
// Unencoding a readout word with the matching transform turns each input
// wire back into one coordinate; the detector keeps the coordinates whose
// input wire was prepared in the readout basis, since those are the only
// deterministic ones on a noiseless run.
DetectorMap detector_map(const PqrmCode& code, PrepState state, PauliType type) {
    DetectorMap d;
    d.m = code.m;
    const int n = 1 << code.m;
    const bool zero = state == PrepState::zero;
    d.use_zeta = (type == PauliType::X) == zero;
    for (int j = 1; j < n; j++) {
        int w = label_weight(j);
        bool keep;
        if (type == PauliType::X)
            keep = zero ? w > code.r_x : w <= code.r_z;
        else
            keep = zero ? w <= code.r_x : w > code.r_z;
        if (keep) d.selector.set(unsigned(j));
    }
    return d;
}

// Residual patterns that act trivially on the prepared logical state: the
// stabilizers of that type together with the logical operator when the
// state is its eigenstate.  Equivalently, the span of single input-wire
// flips that commute with the preparation, pushed through the encoder.
RmCode reduction_group(const PqrmCode& code, PrepState state, PauliType type) {
    if (type == PauliType::X)
        return state == PrepState::zero
                   ? RmCode{code.r_x, code.m, true, true}
                   : RmCode{code.m - code.r_z - 1, code.m, true, false};
    return state == PrepState::zero
               ? RmCode{code.m - code.r_x - 1, code.m, true, false}
               : RmCode{code.r_z, code.m, true, true};
}

namespace {

// Wiring of the two-stage transversal check, patches 0..3, output patch 0.
// x_pairs_first: stage one couples (0 -> 1) and (2 -> 3) and reads patches
// 1, 3 in the Z basis; stage two couples (2 -> 0) and reads patch 2 in the
// X basis.  z_pairs_first mirrors every arrow and basis.
struct VerifyNet {
    std::array<std::pair<int, int>, 2> v1;
    std::pair<int, int> v2;
    std::array<Basis, 3> slot_basis; // readout slots = patches 1, 2, 3
};

VerifyNet net_of(CheckOrder order) {
    if (order == CheckOrder::x_pairs_first)
        return {{{{0, 1}, {2, 3}}}, {2, 0}, {Basis::Z, Basis::X, Basis::Z}};
    return {{{{1, 0}, {3, 2}}}, {0, 2}, {Basis::X, Basis::Z, Basis::X}};
}

// Where each patch's residual ends up once the checks run: the readout
// patch that sees its X and Z parts, and whether each part survives onto
// the output patch.  Derived by pushing single-patch masks through net_of;
// kept as a table because the fault search walks it in the inner loop.
std::array<PatchGlue, 4> glue_table(CheckOrder order) {
    if (order == CheckOrder::x_pairs_first)
        return {{{2, 3, true, true}, {2, 3, false, true}, {4, 3, true, false}, {4, 3, false, false}}};
    return {{{3, 2, true, true}, {3, 2, true, false}, {3, 4, false, true}, {3, 4, false, false}}};
}

} // namespace

PrepProtocol build_protocol(const PqrmCode& code, PrepState state,
                            const PermutationSchedule& schedule, CheckOrder order) {
    if (code.m > 7)
        throw std::invalid_argument("mask-backed propagation caps m at 7");
    if (code.r_z != code.m - code.r_x - 1)
        throw std::invalid_argument("four-patch verification needs a one-qubit code");
    if (schedule.columns.size() != 4)
        throw std::invalid_argument("need one swap column per patch");
    schedule.validate(code.m);

    PrepProtocol p;
    p.code = code;
    p.state = state;
    p.order = order;
    p.schedule = schedule;
    const F2Matrix ident = F2Matrix::identity(size_t(code.m));
    for (size_t c = 0; c < 4; c++) {
        p.perms[c] = schedule.column_matrix(c, code.m);
        p.patches[c] = hypercube_encoder(code, state);
        if (!(p.perms[c] == ident))
            p.patches[c].add_perm(coordinate_map(p.perms[c], 0));
    }
    p.glue = glue_table(order);
    p.det_x = detector_map(code, state, PauliType::X);
    p.det_z = detector_map(code, state, PauliType::Z);
    const VerifyNet net = net_of(order);
    for (int s = 0; s < 3; s++)
        p.readout_det[s] = net.slot_basis[s] == Basis::Z ? p.det_x : p.det_z;
    p.reduce_x = reduction_group(code, state, PauliType::X);
    p.reduce_z = reduction_group(code, state, PauliType::Z);
    return p;
}

ProtocolRun run_with_faults(const PrepProtocol& p,
                            const std::array<std::vector<FaultEvent>, 4>& faults) {
    ProtocolRun r;
    std::array<Mask128, 3> raw{};
    for (int c = 0; c < 4; c++) {
        ResidualError res = propagate_fault_set(p.patches[c], faults[c]);
        Mask128 x = to_mask128(res.x_mask);
        Mask128 z = to_mask128(res.z_mask);
        const PatchGlue& g = p.glue[c];
        raw[g.x_meas - 2] ^= x;
        raw[g.z_meas - 2] ^= z;
        if (g.x_out) r.out_x ^= x;
        if (g.z_out) r.out_z ^= z;
    }
    for (int s = 0; s < 3; s++) r.checks[s] = p.readout_det[s].apply(raw[s]);
    return r;
}

namespace {

// Calls cb(site, pauli_pattern, mask) for every single fault of one type a
// patch circuit can host, with `mask` the residual of that type at the end
// of the patch.  CNOT sites contribute their two single-leg patterns and
// the both-legs pattern; a state flip only matters on wires prepared in
// the conjugate basis.
template <class CB>
void for_each_typed_fault(const Circuit& c, PauliType t, CB&& cb) {
    const bool x = t == PauliType::X;
    for (const FaultSite& s : fault_sites(c)) {
        if (s.kind == LayerKind::init) {
            Basis b = c.layers[s.layer].basis;
            if (x ? b != Basis::Z : b != Basis::X) continue;
            ResidualError r = propagate_fault(c, FaultEvent::on_wire(s.layer, s.q0, x, !x));
            cb(s, uint8_t(x ? 1 : 2), to_mask128(x ? r.x_mask : r.z_mask));
        } else if (s.kind == LayerKind::cnot) {
            const uint8_t cbit = x ? 1 : 2, tbit = x ? 4 : 8;
            ResidualError rc =
                propagate_fault(c, FaultEvent::on_gate(s.layer, uint32_t(s.slot), cbit));
            ResidualError rt =
                propagate_fault(c, FaultEvent::on_gate(s.layer, uint32_t(s.slot), tbit));
            Mask128 ec = to_mask128(x ? rc.x_mask : rc.z_mask);
            Mask128 et = to_mask128(x ? rt.x_mask : rt.z_mask);
            cb(s, cbit, ec);
            cb(s, tbit, et);
            cb(s, uint8_t(cbit | tbit), ec ^ et);
        }
    }
}

struct FaultClass {
    Mask128 syn, res;
    uint32_t mult = 1;
    FaultRef rep;
};

// One independent accept test: the fault classes feeding one readout word.
struct Lane {
    std::vector<FaultClass> classes;
    uint64_t dropped = 0; // zero-syndrome classes, harmless by construction
};

void add_patch_classes(Lane& lane, const Circuit& circ, int patch, PauliType t,
                       const DetectorMap& det, bool keep_res) {
    // Classes merge on syndrome alone: equal syndromes put two residuals in
    // the same reduction-group coset, and both acceptance and reduced weight
    // only see the coset, so one representative residual stands for all.
    std::unordered_map<Mask128, size_t, MaskHash> seen;
    for_each_typed_fault(circ, t, [&](const FaultSite& s, uint8_t pat, const Mask128& eff) {
        Mask128 syn = det.apply(eff);
        if (!syn.any()) {
            // zero syndrome means the residual lies in the reduction group:
            // undetectable but also weight-reducible to nothing
            lane.dropped++;
            return;
        }
        Mask128 res = keep_res ? eff : Mask128{};
        auto [it, fresh] = seen.try_emplace(syn, lane.classes.size());
        if (fresh)
            lane.classes.push_back({syn, res, 1, FaultRef{uint8_t(patch), s, pat}});
        else
            lane.classes[it->second].mult++;
    });
}

// Groups the four patches by the readout that would catch this fault type.
// Faults whose syndromes land in different lanes can never cancel, so each
// lane is searched independently and the malignant counts add.
std::vector<Lane> build_lanes(const PrepProtocol& p, PauliType t) {
    std::array<int, 4> slot_of{};
    std::vector<int> slots;
    for (int c = 0; c < 4; c++) {
        const PatchGlue& g = p.glue[c];
        slot_of[c] = (t == PauliType::X ? g.x_meas : g.z_meas) - 2;
        if (std::find(slots.begin(), slots.end(), slot_of[c]) == slots.end())
            slots.push_back(slot_of[c]);
    }
    std::sort(slots.begin(), slots.end());
    std::vector<Lane> lanes(slots.size());
    for (int c = 0; c < 4; c++) {
        size_t li = size_t(std::find(slots.begin(), slots.end(), slot_of[c]) - slots.begin());
        const PatchGlue& g = p.glue[c];
        bool keep = t == PauliType::X ? g.x_out : g.z_out;
        add_patch_classes(lanes[li], p.patches[c], c, t, p.readout_det[slot_of[c]], keep);
    }
    return lanes;
}

} // namespace

ReducedWeightTester::ReducedWeightTester(const RmCode& group, int m) : m_(m) {
    // Parity rows: monomial evaluation vectors spanning the dual code.
    // Shortening the group frees the all-ones check; a group that keeps
    // the logical word does not admit it.
    const int dual_r = m - group.r - 1;
    const int lo = group.shortened ? 0 : 1;
    const int n = 1 << m;
    for (int i = 0; i < n; i++) {
        int w = label_weight(i);
        if (w < lo || w > dual_r) continue;
        Mask128 row;
        for (int j = 1; j < n; j++)
            if ((i & j) == i) row.set(unsigned(j));
        rows_.push_back(row);
    }
    col_.assign(size_t(n), Mask128{});
    for (int q = 1; q < n; q++) {
        Mask128 s;
        for (size_t k = 0; k < rows_.size(); k++)
            if (rows_[k].get(unsigned(q))) s.set(unsigned(k));
        col_[size_t(q)] = s;
    }
}

Mask128 ReducedWeightTester::syndrome(const Mask128& w) const {
    Mask128 s;
    for (size_t k = 0; k < rows_.size(); k++) {
        Mask128 a = rows_[k] & w;
        if (a.weight() & 1) s.set(unsigned(k));
    }
    return s;
}

void ReducedWeightTester::grow(int j) {
    const int n = 1 << m_;
    while (int(balls_.size()) <= j) {
        int d = int(balls_.size());
        double expect = 0;
        for (int i = 0; i <= d; i++) expect += binom_d(size_t(n) - 1, i);
        std::vector<std::pair<uint64_t, uint64_t>> ball;
        ball.reserve(size_t(expect) + 1);
        // every syndrome reachable by at most d coordinate flips
        std::function<void(int, int, Mask128)> fill = [&](int left, int start, Mask128 acc) {
            ball.emplace_back(acc.lo, acc.hi);
            if (!left) return;
            for (int q = start; q < n; q++) fill(left - 1, q + 1, acc ^ col_[size_t(q)]);
        };
        fill(d, 1, Mask128{});
        std::sort(ball.begin(), ball.end());
        ball.erase(std::unique(ball.begin(), ball.end()), ball.end());
        balls_.push_back(std::move(ball));
    }
}

bool ReducedWeightTester::leq(const Mask128& residual, int t) {
    if (t < 0) return false;
    if (t > 7) throw std::invalid_argument("reduced-weight targets above 7 are not supported");
    Mask128 r = residual;
    r.lo &= ~uint64_t(1); // coordinate 0 does not exist on the punctured block
    if (r.weight() <= t) return true;
    // r reduces to weight <= t iff some e with |e| <= t lands r back in the
    // group.  Split e in half and meet in the middle on syndromes: probe
    // every |e1| <= ceil(t/2) against the ball of |e2| <= floor(t/2).
    const int d1 = (t + 1) / 2, d0 = t / 2;
    grow(d0);
    const auto& ball = balls_[size_t(d0)];
    const int n = 1 << m_;
    std::function<bool(int, int, Mask128)> probe = [&](int left, int start, Mask128 s) {
        if (std::binary_search(ball.begin(), ball.end(), std::pair(s.lo, s.hi))) return true;
        if (!left) return false;
        for (int q = start; q < n; q++)
            if (probe(left - 1, q + 1, s ^ col_[size_t(q)])) return true;
        return false;
    };
    return probe(d1, 1, syndrome(r));
}

int ReducedWeightTester::exact(const Mask128& residual, int t_max) {
    if (t_max > 7) throw std::invalid_argument("reduced-weight targets above 7 are not supported");
    for (int t = 0; t <= t_max; t++)
        if (leq(residual, t)) return t;
    return t_max + 1;
}

namespace {

// XOR-linear 64-bit signature of a syndrome; a set of classes whose
// syndromes cancel has matching signatures on any split, so one signature
// prefix can shard the search without missing a candidate.
struct SigMap {
    std::array<Mask128, 64> r;
    explicit SigMap(uint64_t seed) {
        std::mt19937_64 g(seed);
        for (auto& v : r) {
            v.lo = g();
            v.hi = g();
        }
    }
    uint64_t of(const Mask128& w) const {
        uint64_t s = 0;
        for (int k = 0; k < 64; k++) {
            Mask128 a = r[k] & w;
            s |= uint64_t(a.weight() & 1) << k;
        }
        return s;
    }
};

struct ClassArrays {
    std::vector<Mask128> syn, res;
    std::vector<uint64_t> sig;
    std::vector<uint32_t> mult;
    size_t size() const { return syn.size(); }
};

ClassArrays make_arrays(const Lane& lane, const SigMap& sm) {
    ClassArrays a;
    a.syn.reserve(lane.classes.size());
    for (const FaultClass& c : lane.classes) {
        a.syn.push_back(c.syn);
        a.res.push_back(c.res);
        a.sig.push_back(sm.of(c.syn));
        a.mult.push_back(c.mult);
    }
    return a;
}

// Classifies a candidate residual against the fault order: 0 reduces below
// the order, 1 sits exactly at it, 2 exceeds it.  Memoized per residual;
// the weight shortcut answers most candidates without touching the tester.
class RwMemo {
public:
    RwMemo(ReducedWeightTester& t, int order) : t_(&t), k_(order) {}
    int classify(const Mask128& res) {
        if (res.weight() <= k_ - 1) return 0;
        auto [it, fresh] = memo_.try_emplace(res, int8_t(-1));
        if (!fresh) return it->second;
        int cls = t_->leq(res, k_ - 1) ? 0 : (t_->leq(res, k_) ? 1 : 2);
        it->second = int8_t(cls);
        return cls;
    }

private:
    ReducedWeightTester* t_;
    int k_;
    std::unordered_map<Mask128, int8_t, MaskHash> memo_;
};

struct OrderAccum {
    int order = 0;
    uint64_t strict = 0, strict_w = 0;
    uint64_t supp = 0, supp_w = 0;
    std::vector<MalignantSample> samples;
    size_t cap = 0;
    RwMemo memo;
    OrderAccum(int k, size_t sample_cap, ReducedWeightTester& t)
        : order(k), cap(sample_cap), memo(t, k) {}
};

void consider(OrderAccum& acc, const Lane& lane, const Mask128& res_tot,
              uint64_t weight, const uint32_t* ids) {
    int cls = acc.memo.classify(res_tot);
    if (cls == 0) return;
    acc.supp++;
    acc.supp_w += weight;
    if (cls != 2) return;
    acc.strict++;
    acc.strict_w += weight;
    if (acc.samples.size() < acc.cap) {
        MalignantSample s;
        s.order = acc.order;
        s.residual = res_tot;
        s.residual_weight = size_t(res_tot.weight());
        for (int i = 0; i < acc.order; i++) s.sites.push_back(lane.classes[ids[i]].rep);
        acc.samples.push_back(std::move(s));
    }
}

// Dictionary half of the meet in the middle: ascending id tuples keyed by
// their total syndrome.  Linear probing with duplicate keys kept; lookup
// enumerates the whole cluster.
struct DictEntry {
    Mask128 syn, res;
    std::array<uint32_t, 3> ids;
    uint32_t mult;
};

class MitmDict {
public:
    void reset(size_t expected) {
        entries_.clear();
        entries_.reserve(expected + expected / 8 + 16);
        size_t want = 64;
        while (want < expected * 2) want <<= 1;
        slots_.assign(want, 0);
        mask_ = want - 1;
    }
    void insert(const Mask128& syn, const Mask128& res, std::array<uint32_t, 3> ids,
                uint32_t mult) {
        if (entries_.size() + 1 > slots_.size() - slots_.size() / 4) rehash();
        entries_.push_back({syn, res, ids, mult});
        place(syn, uint32_t(entries_.size()));
    }
    template <class F>
    void find(const Mask128& syn, F&& f) const {
        size_t i = size_t(syn.hash()) & mask_;
        while (slots_[i]) {
            const DictEntry& e = entries_[slots_[i] - 1];
            if (e.syn == syn) f(e);
            i = (i + 1) & mask_;
        }
    }

private:
    void place(const Mask128& syn, uint32_t idx1) {
        size_t i = size_t(syn.hash()) & mask_;
        while (slots_[i]) i = (i + 1) & mask_;
        slots_[i] = idx1;
    }
    void rehash() {
        slots_.assign(slots_.size() * 2, 0);
        mask_ = slots_.size() - 1;
        for (size_t k = 0; k < entries_.size(); k++) place(entries_[k].syn, uint32_t(k + 1));
    }
    std::vector<DictEntry> entries_;
    std::vector<uint32_t> slots_;
    size_t mask_ = 63;
};

// Candidate sets of k distinct classes with cancelling syndromes, counted
// exactly once: the dictionary holds the first ceil(k/2) ids of the sorted
// set, the probe stream supplies the rest, and the max-below-min guard
// fixes the split point.  Sharding by a signature prefix keeps one pass's
// dictionary inside the memory budget; a candidate's two halves share the
// signature (their syndromes are equal), so exactly one pass sees it.
struct ProbeJob {
    OrderAccum* acc;
    int q; // probe tuple size, order - dict size
};

void run_mitm(const Lane& lane, const ClassArrays& A, int h, std::vector<ProbeJob> jobs,
              const MitmBudget& budget) {
    const uint32_t F = uint32_t(A.size());
    int max_order = 0;
    for (const ProbeJob& j : jobs) max_order = std::max(max_order, h + j.q);
    const double per_entry = double(sizeof(DictEntry)) + 2.5 * sizeof(uint32_t);
    uint64_t shards = 1;
    while (binom_d(F, h) * per_entry / double(shards) > double(budget.dict_bytes)) {
        shards <<= 1;
        if (shards > uint64_t(budget.max_shards)) throw MitmResourceError(max_order);
    }
    const int shift = 64 - std::countr_zero(shards);

    MitmDict dict;
    uint32_t ids[6];
    for (uint64_t pass = 0; pass < shards; pass++) {
        auto in_shard = [&](uint64_t g) { return shards == 1 || (g >> shift) == pass; };
        dict.reset(size_t(binom_d(F, h) / double(shards)) + 64);
        if (h == 1) {
            for (uint32_t a = 0; a < F; a++)
                if (in_shard(A.sig[a])) dict.insert(A.syn[a], A.res[a], {a, 0, 0}, A.mult[a]);
        } else if (h == 2) {
            for (uint32_t a = 0; a < F; a++)
                for (uint32_t b = a + 1; b < F; b++)
                    if (in_shard(A.sig[a] ^ A.sig[b]))
                        dict.insert(A.syn[a] ^ A.syn[b], A.res[a] ^ A.res[b], {a, b, 0},
                                    A.mult[a] * A.mult[b]);
        } else {
            for (uint32_t a = 0; a < F; a++)
                for (uint32_t b = a + 1; b < F; b++) {
                    const uint64_t gab = A.sig[a] ^ A.sig[b];
                    const Mask128 sab = A.syn[a] ^ A.syn[b];
                    const Mask128 rab = A.res[a] ^ A.res[b];
                    const uint32_t mab = A.mult[a] * A.mult[b];
                    for (uint32_t c = b + 1; c < F; c++)
                        if (in_shard(gab ^ A.sig[c]))
                            dict.insert(sab ^ A.syn[c], rab ^ A.res[c], {a, b, c},
                                        mab * A.mult[c]);
                }
        }
        for (const ProbeJob& job : jobs) {
            OrderAccum& acc = *job.acc;
            auto hit = [&](const DictEntry& e, uint32_t lead, const Mask128& res,
                           uint64_t mult) {
                if (e.ids[h - 1] >= lead) return;
                for (int i = 0; i < h; i++) ids[i] = e.ids[size_t(i)];
                Mask128 tot = e.res ^ res;
                consider(acc, lane, tot, uint64_t(e.mult) * mult, ids);
            };
            if (job.q == 1) {
                for (uint32_t d = 0; d < F; d++) {
                    if (!in_shard(A.sig[d])) continue;
                    ids[h] = d;
                    dict.find(A.syn[d],
                              [&](const DictEntry& e) { hit(e, d, A.res[d], A.mult[d]); });
                }
            } else if (job.q == 2) {
                for (uint32_t d = 0; d < F; d++) {
                    ids[h] = d;
                    for (uint32_t e2 = d + 1; e2 < F; e2++) {
                        if (!in_shard(A.sig[d] ^ A.sig[e2])) continue;
                        ids[h + 1] = e2;
                        const Mask128 key = A.syn[d] ^ A.syn[e2];
                        const Mask128 res = A.res[d] ^ A.res[e2];
                        const uint64_t mult = uint64_t(A.mult[d]) * A.mult[e2];
                        dict.find(key, [&](const DictEntry& e) { hit(e, d, res, mult); });
                    }
                }
            } else {
                for (uint32_t d = 0; d < F; d++) {
                    ids[h] = d;
                    for (uint32_t e2 = d + 1; e2 < F; e2++) {
                        ids[h + 1] = e2;
                        const uint64_t gde = A.sig[d] ^ A.sig[e2];
                        const Mask128 sde = A.syn[d] ^ A.syn[e2];
                        const Mask128 rde = A.res[d] ^ A.res[e2];
                        const uint64_t mde = uint64_t(A.mult[d]) * A.mult[e2];
                        for (uint32_t f = e2 + 1; f < F; f++) {
                            if (!in_shard(gde ^ A.sig[f])) continue;
                            ids[h + 2] = f;
                            dict.find(sde ^ A.syn[f], [&](const DictEntry& e) {
                                hit(e, d, rde ^ A.res[f], mde * A.mult[f]);
                            });
                        }
                    }
                }
            }
        }
    }
}

// All requested orders on one lane.  Order 1 is structurally clean (every
// surviving class has a nonzero syndrome); orders 5 and 6 share their
// triple dictionary when both are wanted.
std::vector<OrderAccum> run_lane(const Lane& lane, ReducedWeightTester& tester,
                                 const std::vector<int>& orders, const MitmBudget& budget) {
    SigMap sm(0x51a3c0de5eedULL);
    ClassArrays A = make_arrays(lane, sm);
    std::vector<OrderAccum> accs;
    accs.reserve(orders.size());
    for (int k : orders) accs.emplace_back(k, size_t(budget.sample_cap), tester);
    OrderAccum* five = nullptr;
    OrderAccum* six = nullptr;
    for (size_t i = 0; i < orders.size(); i++) {
        const int k = orders[i];
        if (k <= 1) continue;
        if (k == 5) five = &accs[i];
        else if (k == 6) six = &accs[i];
        else run_mitm(lane, A, (k + 1) / 2, {{&accs[i], k / 2}}, budget);
    }
    if (five || six) {
        std::vector<ProbeJob> jobs;
        if (five) jobs.push_back({five, 2});
        if (six) jobs.push_back({six, 3});
        run_mitm(lane, A, 3, jobs, budget);
    }
    return accs;
}

std::vector<int> order_range(int max_order) {
    std::vector<int> v;
    for (int k = 1; k <= max_order; k++) v.push_back(k);
    return v;
}

void check_order_args(int order) {
    if (order < 1 || order > 6)
        throw std::invalid_argument("fault order must lie in 1..6");
}

} // namespace

FtVerdict check_strict_ft(const PrepProtocol& p, PauliType type, int max_order,
                          bool suppression, const MitmBudget& budget) {
    check_order_args(max_order);
    FtVerdict v;
    v.type = type;
    v.max_order = max_order;
    v.suppression = suppression;
    v.orders.resize(size_t(max_order));
    for (int k = 1; k <= max_order; k++) v.orders[size_t(k - 1)].order = k;

    ReducedWeightTester tester(type == PauliType::X ? p.reduce_x : p.reduce_z, p.code.m);
    for (const Lane& lane : build_lanes(p, type)) {
        std::vector<OrderAccum> accs = run_lane(lane, tester, order_range(max_order), budget);
        for (size_t i = 0; i < accs.size(); i++) {
            OrderReport& rep = v.orders[i];
            const OrderAccum& a = accs[i];
            rep.count += suppression ? a.supp : a.strict;
            rep.weighted += suppression ? a.supp_w : a.strict_w;
            rep.suppression_ok = rep.suppression_ok && a.supp == 0;
            for (const MalignantSample& s : a.samples)
                if (rep.samples.size() < size_t(budget.sample_cap)) rep.samples.push_back(s);
        }
    }
    v.strict_ft = std::all_of(v.orders.begin(), v.orders.end(),
                              [](const OrderReport& r) { return r.count == 0; });
    return v;
}

uint64_t count_malignant(const PrepProtocol& p, PauliType type, int order,
                         const MitmBudget& budget) {
    check_order_args(order);
    ReducedWeightTester tester(type == PauliType::X ? p.reduce_x : p.reduce_z, p.code.m);
    uint64_t total = 0;
    for (const Lane& lane : build_lanes(p, type))
        total += run_lane(lane, tester, {order}, budget)[0].strict;
    return total;
}

uint64_t count_malignant_naive(const PrepProtocol& p, PauliType type, int order) {
    check_order_args(order);
    ReducedWeightTester tester(type == PauliType::X ? p.reduce_x : p.reduce_z, p.code.m);
    uint64_t total = 0;
    for (const Lane& lane : build_lanes(p, type)) {
        const size_t F = lane.classes.size();
        // bare depth-first walk over ascending class ids, no cancellation
        // tricks; this is the oracle the dictionary search is checked against
        std::function<void(size_t, int, Mask128, Mask128)> walk =
            [&](size_t start, int left, Mask128 syn, Mask128 res) {
                if (!left) {
                    if (!syn.any() && !tester.leq(res, order)) total++;
                    return;
                }
                for (size_t i = start; i + size_t(left) <= F; i++)
                    walk(i + 1, left - 1, syn ^ lane.classes[i].syn,
                         res ^ lane.classes[i].res);
            };
        walk(0, order, Mask128{}, Mask128{});
    }
    return total;
}

bool necessary_condition(const F2Matrix& A, const F2Matrix& B) {
    if (A.rows != A.cols || B.rows != B.cols || A.rows != B.rows)
        throw std::invalid_argument("coordinate transforms must be square and equal-sized");
    auto inv = A.inverse();
    if (!inv) throw std::invalid_argument("coordinate transform is singular");
    F2Matrix rel = inv->mul(B);
    // a column with a single one maps some coordinate line of one patch
    // onto a coordinate line of the other, and aligned lines admit a
    // cancelling fault pair
    for (size_t j = 0; j < rel.cols; j++) {
        int ones = 0;
        for (size_t i = 0; i < rel.rows; i++) ones += rel.get(i, j) ? 1 : 0;
        if (ones < 2) return false;
    }
    return true;
}

bool pair_check(const F2Matrix& A, const F2Matrix& B, const PqrmCode& code, PrepState state,
                PauliType type, int order, const MitmBudget& budget) {
    check_order_args(order);
    if (code.r_z != code.m - code.r_x - 1)
        throw std::invalid_argument("pair checks need a one-qubit code");
    const F2Matrix ident = F2Matrix::identity(size_t(code.m));
    auto make_patch = [&](const F2Matrix& M) {
        Circuit c = hypercube_encoder(code, state);
        if (!(M == ident)) c.add_perm(coordinate_map(M, 0));
        return c;
    };
    const Circuit ca = make_patch(A);
    const Circuit cb = make_patch(B);
    const DetectorMap det = detector_map(code, state, type);

    // One transversal CNOT and one readout: the measured patch reports both
    // residuals of the tested type, the surviving patch keeps its own; for
    // the X test only the first patch's residual survives (its partner is
    // consumed by the readout), for the Z test both land on the survivor.
    Lane lane;
    add_patch_classes(lane, ca, 0, type, det, true);
    add_patch_classes(lane, cb, 1, type, det, type == PauliType::Z);
    ReducedWeightTester tester(reduction_group(code, state, type), code.m);
    for (const OrderAccum& a : run_lane(lane, tester, order_range(order), budget))
        if (a.strict) return false;
    return true;
}

std::vector<PermutationSchedule> search_schedules(const SearchConstraints& cons, uint64_t seed,
                                                  uint64_t budget) {
    const int m = cons.code.m;
    if (cons.columns.size() != 2 && cons.columns.size() != 4)
        throw std::invalid_argument("search wants two or four columns");
    if (m < 2) throw std::invalid_argument("coordinate swaps need at least two axes");
    check_order_args(cons.order);
    bool all_fixed = true;
    for (const ColumnConstraint& cc : cons.columns) {
        if (cc.sample_length < int(cc.require_j.size()))
            throw std::invalid_argument("column too short for its required axes");
        for (int j : cc.require_j) {
            if (j < 0 || j >= m) throw std::invalid_argument("required axis out of range");
            if (std::find(cc.forbid_j.begin(), cc.forbid_j.end(), j) != cc.forbid_j.end())
                throw std::invalid_argument("an axis is both required and forbidden");
        }
        if (cc.sample_length > 0) all_fixed = false;
    }

    std::mt19937_64 rng(seed);
    std::vector<PermutationSchedule> found;
    // fully pinned constraints describe a single candidate, so one trial
    // settles them no matter the budget
    const uint64_t trials = all_fixed ? std::min<uint64_t>(budget, 1) : budget;
    for (uint64_t trial = 0; trial < trials; trial++) {
        PermutationSchedule sch;
        sch.columns.resize(cons.columns.size());
        for (size_t c = 0; c < cons.columns.size(); c++) {
            const ColumnConstraint& cc = cons.columns[c];
            std::vector<int> allowed;
            for (int j = 0; j < m; j++)
                if (std::find(cc.forbid_j.begin(), cc.forbid_j.end(), j) == cc.forbid_j.end())
                    allowed.push_back(j);
            if (allowed.empty() && cc.sample_length > 0)
                throw std::invalid_argument("every axis of a sampled column is forbidden");
            std::vector<int> js = cc.require_j;
            while (int(js.size()) < cc.sample_length)
                js.push_back(allowed[rng() % allowed.size()]);
            std::shuffle(js.begin(), js.end(), rng);
            std::vector<SwapToken> col = cc.prefix;
            for (int j : js) {
                int i = int(rng() % uint64_t(m - 1));
                if (i >= j) i++;
                col.push_back(SwapToken{i, j});
            }
            sch.columns[c] = std::move(col);
        }
        std::vector<F2Matrix> mats(sch.columns.size());
        for (size_t c = 0; c < mats.size(); c++) mats[c] = sch.column_matrix(c, m);
        bool ok = true;
        for (size_t a = 0; a < mats.size() && ok; a++)
            for (size_t b = a + 1; b < mats.size() && ok; b++)
                ok = necessary_condition(mats[a], mats[b]);
        // Z first: it is the cheaper test and rejects most survivors.  The
        // X test runs both orientations because its residual bookkeeping
        // is not symmetric under swapping the pair.
        for (size_t a = 0; a < mats.size() && ok; a++)
            for (size_t b = a + 1; b < mats.size() && ok; b++)
                ok = pair_check(mats[a], mats[b], cons.code, cons.state, PauliType::Z,
                                cons.order);
        for (size_t a = 0; a < mats.size() && ok; a++)
            for (size_t b = a + 1; b < mats.size() && ok; b++)
                ok = pair_check(mats[a], mats[b], cons.code, cons.state, PauliType::X,
                                cons.order) &&
                     pair_check(mats[b], mats[a], cons.code, cons.state, PauliType::X,
                                cons.order);
        if (ok) found.push_back(std::move(sch));
    }
    return found;
}

namespace {

FaultAction fa_xor(FaultAction a, const FaultAction& b) {
    for (int s = 0; s < 3; s++) a.checks[s] ^= b.checks[s];
    a.out_x ^= b.out_x;
    a.out_z ^= b.out_z;
    return a;
}

// Pushes a Pauli frame sitting on the four patches through the remaining
// verification stages.  Stages: 0 couples the first-round pairs, 1 reads
// patches 1 and 3, 2 couples the second-round pair, 3 reads patch 2; the
// output is whatever remains on patch 0.
FaultAction eval_verify(const PrepProtocol& p, int from_stage, std::array<Mask128, 4> x,
                        std::array<Mask128, 4> z) {
    const VerifyNet net = net_of(p.order);
    FaultAction a{};
    auto gate = [&](std::pair<int, int> g) {
        x[size_t(g.second)] ^= x[size_t(g.first)];
        z[size_t(g.first)] ^= z[size_t(g.second)];
    };
    auto readout = [&](int patch) {
        const int slot = patch - 1;
        Mask128 w = net.slot_basis[size_t(slot)] == Basis::Z ? x[size_t(patch)]
                                                             : z[size_t(patch)];
        a.checks[slot] ^= p.readout_det[slot].apply(w);
        x[size_t(patch)] = Mask128{};
        z[size_t(patch)] = Mask128{};
    };
    for (int stage = from_stage; stage < 4; stage++) {
        if (stage == 0) {
            gate(net.v1[0]);
            gate(net.v1[1]);
        } else if (stage == 1) {
            // both variants read patches 1 and 3 after the first round
            readout(1);
            readout(3);
        } else if (stage == 2) {
            gate(net.v2);
        } else {
            readout(2);
        }
    }
    a.out_x ^= x[0];
    a.out_z ^= z[0];
    return a;
}

} // namespace

NoiseTables protocol_noise_tables(const PrepProtocol& p) {
    NoiseTables t;
    const int n = p.n_wires();
    const VerifyNet net = net_of(p.order);

    auto from_patch = [&](int patch, const Mask128& xm, const Mask128& zm) {
        std::array<Mask128, 4> x{}, z{};
        x[size_t(patch)] = xm;
        z[size_t(patch)] = zm;
        return eval_verify(p, 0, x, z);
    };

    // patch circuits: every cnot carries the 15 two-qubit patterns, every
    // init line one state flip
    for (int c = 0; c < 4; c++) {
        const Circuit& circ = p.patches[c];
        for (const FaultSite& s : fault_sites(circ)) {
            if (s.kind == LayerKind::cnot) {
                std::array<Mask128, 4> cx{}, cz{};
                for (int b = 0; b < 4; b++) {
                    ResidualError r = propagate_fault(
                        circ, FaultEvent::on_gate(s.layer, uint32_t(s.slot), uint8_t(1 << b)));
                    cx[size_t(b)] = to_mask128(r.x_mask);
                    cz[size_t(b)] = to_mask128(r.z_mask);
                }
                for (int pat = 1; pat < 16; pat++) {
                    Mask128 xm, zm;
                    for (int b = 0; b < 4; b++)
                        if (pat >> b & 1) {
                            xm ^= cx[size_t(b)];
                            zm ^= cz[size_t(b)];
                        }
                    t.cnot.push_back(from_patch(c, xm, zm));
                }
            } else if (s.kind == LayerKind::init) {
                Basis b = circ.layers[s.layer].basis;
                ResidualError r = propagate_fault(
                    circ, FaultEvent::on_wire(s.layer, s.q0, b == Basis::Z, b == Basis::X));
                t.spam.push_back(from_patch(c, to_mask128(r.x_mask), to_mask128(r.z_mask)));
            }
        }
    }

    // verification cnots, transversal over the non-punctured wires; each
    // fault acts after its own gate
    auto verify_gate = [&](std::pair<int, int> g, int next_stage) {
        for (int q = 1; q < n; q++) {
            Mask128 e;
            e.set(unsigned(q));
            std::array<FaultAction, 4> comp{};
            for (int b = 0; b < 4; b++) {
                std::array<Mask128, 4> x{}, z{};
                int patch = (b == 0 || b == 1) ? g.first : g.second;
                (b == 0 || b == 2 ? x : z)[size_t(patch)] = e;
                comp[size_t(b)] = eval_verify(p, next_stage, x, z);
            }
            for (int pat = 1; pat < 16; pat++) {
                FaultAction a{};
                for (int b = 0; b < 4; b++)
                    if (pat >> b & 1) a = fa_xor(a, comp[size_t(b)]);
                t.cnot.push_back(a);
            }
        }
    };
    verify_gate(net.v1[0], 1);
    verify_gate(net.v1[1], 1);
    verify_gate(net.v2, 3);

    // readout flips, one per measured wire per readout
    for (int slot = 0; slot < 3; slot++)
        for (int q = 1; q < n; q++) {
            Mask128 e;
            e.set(unsigned(q));
            FaultAction a{};
            a.checks[slot] = p.readout_det[slot].apply(e);
            t.spam.push_back(a);
        }
    return t;
}

std::string FtVerdict::to_json() const {
    nlohmann::json j;
    j["type"] = type == PauliType::X ? "X" : "Z";
    j["max_order"] = max_order;
    j["suppression"] = suppression;
    j["strict_ft"] = strict_ft;
    nlohmann::json arr = nlohmann::json::array();
    for (const OrderReport& r : orders) {
        nlohmann::json o;
        o["order"] = r.order;
        o["count"] = r.count;
        o["weighted"] = r.weighted;
        o["suppression_ok"] = r.suppression_ok;
        nlohmann::json ss = nlohmann::json::array();
        for (const MalignantSample& s : r.samples) {
            nlohmann::json e;
            e["residual_weight"] = s.residual_weight;
            nlohmann::json coords = nlohmann::json::array();
            for (unsigned q = 0; q < 128; q++)
                if (s.residual.get(q)) coords.push_back(q);
            e["residual"] = coords;
            nlohmann::json sites = nlohmann::json::array();
            for (const FaultRef& f : s.sites) {
                nlohmann::json site;
                site["patch"] = f.patch;
                site["layer"] = f.site.layer;
                site["slot"] = f.site.slot;
                site["kind"] = f.site.kind == LayerKind::init ? "init" : "cnot";
                site["q0"] = f.site.q0;
                site["q1"] = f.site.q1;
                site["pauli"] = f.pauli;
                sites.push_back(site);
            }
            e["sites"] = sites;
            ss.push_back(e);
        }
        o["samples"] = ss;
        arr.push_back(o);
    }
    j["orders"] = arr;
    return j.dump(2);
}

} // namespace qrm
