#include "qrm/decoder.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace qrm {

namespace {
constexpr int kLlrScale = 256;
}

// Path state is kept in flat slabs indexed by slot: intermediate LLRs for
// depths 1..m (offset n - 2^(m-d+1) for depth d), two partial-sum bit words
// per depth, the decision mask in schedule order, and the penalty metric.
struct SclDecoder::Impl {
    int m = 0, n = 0, L = 0;
    int slots = 0;

    std::vector<int32_t> chan;  // shared channel LLRs, schedule order
    std::vector<int32_t> pbuf;  // slots * (n - 1)
    std::vector<uint64_t> bbuf; // slots * 2 * (m + 1)
    std::vector<Mask128> ubuf;
    std::vector<int64_t> metric;
    std::vector<uint32_t> order;

    std::vector<int> active, spare;

    struct Cand {
        int64_t pm;
        uint32_t ord;
        int slot;
        uint8_t bit;
    };
    std::vector<Cand> cands;

    Impl(int m_, int L_) : m(m_), n(1 << m_), L(L_), slots(2 * L_) {
        if (m < 1 || m > 7) throw std::invalid_argument("scl: 1 <= m <= 7");
        if (L < 1) throw std::invalid_argument("scl: list size >= 1");
        chan.resize(n);
        pbuf.assign(size_t(slots) * (n - 1), 0);
        bbuf.assign(size_t(slots) * 2 * (m + 1), 0);
        ubuf.assign(slots, Mask128{});
        metric.assign(slots, 0);
        order.assign(slots, 0);
    }

    int32_t* P(int slot) { return pbuf.data() + size_t(slot) * (n - 1); }
    uint64_t* B(int slot) { return bbuf.data() + size_t(slot) * 2 * (m + 1); }
    int off(int d) const { return n - (2 << (m - d)); }

    void copy_slot(int dst, int src) {
        std::memcpy(P(dst), P(src), sizeof(int32_t) * (n - 1));
        std::memcpy(B(dst), B(src), sizeof(uint64_t) * 2 * (m + 1));
        ubuf[dst] = ubuf[src];
        metric[dst] = metric[src];
    }

    void f_update(int slot, int d) {
        const int32_t* src = d == 1 ? chan.data() : P(slot) + off(d - 1);
        int32_t* dst = P(slot) + off(d);
        int h = 1 << (m - d);
        for (int j = 0; j < h; j++) {
            int32_t a = src[j], b = src[j + h];
            int32_t mag = std::min(std::abs(a), std::abs(b));
            dst[j] = ((a < 0) != (b < 0)) ? -mag : mag;
        }
    }

    void g_update(int slot, int d) {
        const int32_t* src = d == 1 ? chan.data() : P(slot) + off(d - 1);
        int32_t* dst = P(slot) + off(d);
        uint64_t left = B(slot)[2 * d];
        int h = 1 << (m - d);
        for (int j = 0; j < h; j++)
            dst[j] = src[j + h] + (((left >> j) & 1) ? -src[j] : src[j]);
    }

    void refresh(int slot, uint32_t phase) {
        if (phase == 0) {
            for (int d = 1; d <= m; d++) f_update(slot, d);
        } else {
            int t = __builtin_ctz(phase);
            int d0 = m - t;
            g_update(slot, d0);
            for (int d = d0 + 1; d <= m; d++) f_update(slot, d);
        }
    }

    void push_bit(int slot, uint32_t phase, bool bit) {
        if (bit) ubuf[slot].set(phase);
        uint64_t bits = bit ? 1 : 0;
        uint64_t* b = B(slot);
        int d = m;
        uint32_t node = phase;
        b[2 * d + (node & 1)] = bits;
        while (d > 1 && (node & 1)) {
            uint64_t leftw = b[2 * d];
            int h = 1 << (m - d);
            bits = (leftw ^ bits) | (bits << h);
            d--;
            node >>= 1;
            b[2 * d + (node & 1)] = bits;
        }
    }

    DecodeResult run(const SoftInput& in, const RmCode& code) {
        if (code.m != m) throw std::invalid_argument("scl: code order mismatch");
        if (in.llr.size() != size_t(n)) throw std::invalid_argument("scl: llr length");
        // Schedule position p carries the wire at label n-1-p.
        for (int p = 0; p < n; p++) {
            double v = in.llr[n - 1 - p] * kLlrScale;
            chan[p] = int32_t(std::lround(v));
        }

        active.assign(1, 0);
        spare.clear();
        for (int s = slots - 1; s >= 1; s--) spare.push_back(s);
        metric[0] = 0;
        order[0] = 0;
        ubuf[0] = Mask128{};
        std::memset(B(0), 0, sizeof(uint64_t) * 2 * (m + 1));

        for (uint32_t phase = 0; phase < uint32_t(n); phase++) {
            // Wire label of this position; frozen wires carry more than r
            // ones.  The shortened code also pins the coset wire (label 0).
            uint32_t label = uint32_t(n) - 1 - phase;
            bool frozen = popcount64(label) > uint32_t(code.r) ||
                          (code.shortened && label == 0);
            for (int s : active) refresh(s, phase);
            if (frozen) {
                for (int s : active) {
                    int32_t llr = P(s)[off(m)];
                    if (llr < 0) metric[s] += -llr;
                    push_bit(s, phase, false);
                }
                continue;
            }
            cands.clear();
            for (int s : active) {
                int32_t llr = P(s)[off(m)];
                int64_t pen0 = llr < 0 ? -int64_t(llr) : 0;
                int64_t pen1 = llr > 0 ? int64_t(llr) : 0;
                cands.push_back({metric[s] + pen0, order[s], s, 0});
                cands.push_back({metric[s] + pen1, order[s], s, 1});
            }
            std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
                if (a.pm != b.pm) return a.pm < b.pm;
                if (a.ord != b.ord) return a.ord < b.ord;
                return a.bit < b.bit;
            });
            size_t keep = std::min(size_t(L), cands.size());

            // Survivors: one child may stay in its parent's slot, the other
            // clones into a spare.
            std::vector<int> taken(slots, 0);
            for (size_t i = 0; i < keep; i++) taken[cands[i].slot]++;
            for (int s : active)
                if (!taken[s]) spare.push_back(s);
            std::vector<int> next;
            for (size_t i = 0; i < keep; i++) {
                const Cand& c = cands[i];
                int slot = c.slot;
                if (--taken[c.slot] > 0) {
                    slot = spare.back();
                    spare.pop_back();
                    copy_slot(slot, c.slot);
                }
                metric[slot] = c.pm;
                order[slot] = uint32_t(i);
                push_bit(slot, phase, c.bit);
                next.push_back(slot);
            }
            active = std::move(next);
        }

        int best = active[0];
        for (int s : active)
            if (metric[s] < metric[best] || (metric[s] == metric[best] && order[s] < order[best]))
                best = s;

        DecodeResult res;
        res.info_bits = F2Vector(n);
        for (int ell = 0; ell < n; ell++)
            if (ubuf[best].get(uint32_t(n - 1 - ell))) res.info_bits.set(ell, true);
        res.codeword = res.info_bits;
        zeta_transform(res.codeword, m);
        res.coset_bit = res.info_bits.get(0) ? CosetBit::one_plus : CosetBit::shortened;
        res.path_metric = double(metric[best]) / kLlrScale;
        return res;
    }
};

SclDecoder::SclDecoder(int m, int list_size) : impl(new Impl(m, list_size)) {}
SclDecoder::~SclDecoder() = default;
SclDecoder::SclDecoder(SclDecoder&&) noexcept = default;
SclDecoder& SclDecoder::operator=(SclDecoder&&) noexcept = default;
int SclDecoder::m() const { return impl->m; }
int SclDecoder::list_size() const { return impl->L; }

DecodeResult SclDecoder::decode(const SoftInput& in, const RmCode& code) {
    return impl->run(in, code);
}

DecodeResult scl_decode(const SoftInput& in, const RmCode& code, int list_size) {
    SclDecoder dec(code.m, list_size);
    return dec.decode(in, code);
}

CosetDecision coset_decide(const F2Vector& word, const RmCode& code, int list_size) {
    size_t n = size_t(1) << code.m;
    if (word.n != n - 1) throw std::invalid_argument("coset_decide: punctured word expected");
    RmCode both = code;
    both.shortened = false; // the decision needs the coset wire free
    both.punctured = true;
    DecodeResult r = scl_decode(SoftInput::from_word(word, code.m), both, list_size);
    return r.coset_bit == CosetBit::one_plus ? CosetDecision::logical : CosetDecision::trivial;
}

namespace {

// Distance between the residual and a codeword over the visible
// coordinates.
size_t visible_distance(const F2Vector& residual, const F2Vector& cw, bool punctured) {
    size_t d = 0;
    for (size_t i = punctured ? 1 : 0; i < cw.n; i++) {
        bool r = residual.n == cw.n ? residual.get(i)
                                    : (i ? residual.get(i - 1) : false);
        if (r != cw.get(i)) d++;
    }
    return d;
}

F2Vector normalize_residual(const F2Vector& residual, const RmCode& stabs, bool punctured) {
    size_t n = size_t(1) << stabs.m;
    if (residual.n == n && punctured) {
        F2Vector w(n - 1);
        for (size_t i = 1; i < n; i++) w.set(i - 1, residual.get(i));
        return w;
    }
    if (residual.n == (punctured ? n - 1 : n)) return residual;
    throw std::invalid_argument("reduced_weight: residual length mismatch");
}

} // namespace

size_t reduced_weight(const F2Vector& residual, const RmCode& stabs, int list_size) {
    bool punctured = stabs.punctured || stabs.shortened;
    F2Vector w = normalize_residual(residual, stabs, punctured);
    DecodeResult r = scl_decode(SoftInput::from_word(w, stabs.m), stabs, list_size);
    return visible_distance(w, r.codeword, punctured);
}

size_t reduced_weight_exact(const F2Vector& residual, const RmCode& stabs) {
    bool punctured = stabs.punctured || stabs.shortened;
    F2Vector w = normalize_residual(residual, stabs, punctured);
    size_t n = size_t(1) << stabs.m;
    std::vector<uint32_t> labels = generator_rows(stabs.r, stabs.m);
    if (stabs.shortened) labels.erase(labels.begin());
    if (labels.size() > 26) throw std::invalid_argument("reduced_weight_exact: code too large");

    F2Matrix e = encoding_matrix(stabs.m);
    std::vector<F2Vector> gens;
    for (uint32_t lab : labels) gens.push_back(e.row_vector(lab));

    // Gray-code walk over the code.
    F2Vector cw(n);
    size_t best = visible_distance(w, cw, punctured);
    uint64_t count = uint64_t(1) << gens.size();
    uint64_t state = 0;
    for (uint64_t i = 1; i < count; i++) {
        uint64_t g = i ^ (i >> 1);
        cw ^= gens[__builtin_ctzll(state ^ g)];
        state = g;
        best = std::min(best, visible_distance(w, cw, punctured));
    }
    return best;
}

} // namespace qrm
