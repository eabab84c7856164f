#pragma once
// Successive-cancellation list decoding over the hypercube transform, the
// coset decision used by teleportation-style correction, and reduced-weight
// computation of residual errors against a state's stabilizer group.

#include "qrm/gf2.hpp"
#include "qrm/rm.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace qrm {

// Per-coordinate log-likelihood ratios in label order, positive favoring 0.
// Hard words map to +1/-1; a punctured coordinate carries exactly 0.
struct SoftInput {
    std::vector<double> llr;

    static SoftInput from_word(const F2Vector& w, int m) {
        size_t n = size_t(1) << m;
        SoftInput in;
        in.llr.assign(n, 0.0);
        if (w.n == n) {
            for (size_t i = 0; i < n; i++) in.llr[i] = w.get(i) ? -1.0 : 1.0;
        } else if (w.n == n - 1) {
            for (size_t i = 1; i < n; i++) in.llr[i] = w.get(i - 1) ? -1.0 : 1.0;
        } else {
            throw std::invalid_argument("soft input: word length fits neither code");
        }
        return in;
    }
};

enum class CosetBit : uint8_t { shortened, one_plus };
enum class CosetDecision : uint8_t { trivial, logical };

struct DecodeResult {
    F2Vector codeword;  // full length 2^m; the deleted coordinate is refilled
    F2Vector info_bits; // unencoded wires, support on labels with <= r ones
    CosetBit coset_bit = CosetBit::shortened;
    double path_metric = 0.0;
};

// List decoder with preallocated path buffers; one instance per worker.
// Decoding runs the standard successive schedule on the reversed-label
// order, so the wire at label 0 (the coset indicator) is decided last with
// every other decision in view.  Hard +1/-1 inputs make the path metric the
// Hamming distance to the decoded codeword over the non-punctured
// coordinates.  Metric ties break toward the older path, then bit 0.
class SclDecoder {
public:
    SclDecoder(int m, int list_size);
    ~SclDecoder();
    SclDecoder(SclDecoder&&) noexcept;
    SclDecoder& operator=(SclDecoder&&) noexcept;

    int m() const;
    int list_size() const;

    // code.m must match; code.shortened freezes the coset wire to the even
    // subcode.
    DecodeResult decode(const SoftInput& in, const RmCode& code);

private:
    struct Impl;
    std::unique_ptr<Impl> impl;
};

DecodeResult scl_decode(const SoftInput& in, const RmCode& code, int list_size);

// Decodes a punctured word and reports which coset the nearest codeword
// lies in: the correction selector for teleportation-style error
// correction and code switching.
CosetDecision coset_decide(const F2Vector& word, const RmCode& code, int list_size);

// Smallest weight of residual xor s over stabilizers s of the prepared
// state, approximated from above by list decoding (exact when the list
// covers the full code).  stabs is the punctured order-r code, shortened
// when the logical operator is not a stabilizer of the state.  The residual
// may be passed full-length, in which case the deleted coordinate is
// ignored.
size_t reduced_weight(const F2Vector& residual, const RmCode& stabs, int list_size = 32);

// Exhaustive coset minimization; dimension capped at 26.
size_t reduced_weight_exact(const F2Vector& residual, const RmCode& stabs);

} // namespace qrm
