#pragma once
// Reed-Muller code descriptors (classical and CSS) plus the membership,
// weight-counting and divisibility machinery built on the hypercube matrix.

#include "qrm/gf2.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrm {

uint64_t binomial(int n, int k);

// Classical RM(r,m) and its punctured / shortened relatives.  Puncturing
// always deletes the all-zero coordinate (the only point where no nonempty
// monomial evaluates to one); shortening keeps the even-weight subcode of
// the punctured code.
struct RmCode {
    int r = 0, m = 0;
    bool punctured = false;
    bool shortened = false;

    size_t length() const {
        size_t n = size_t(1) << m;
        return (punctured || shortened) ? n - 1 : n;
    }
    size_t dimension() const {
        size_t k = 0;
        for (int i = 0; i <= r; i++) k += binomial(m, i);
        return shortened ? k - 1 : k;
    }
    size_t distance() const {
        size_t d = size_t(1) << (m - r);
        if (shortened) return d;
        return punctured ? d - 1 : d;
    }
    std::string to_json() const;
};

// CSS code on all 2^m coordinates: X stabilizers RM(r_x,m), Z stabilizers
// RM(r_z,m), valid when r_x + r_z < m.
struct QrmCode {
    int r_x = 0, r_z = 0, m = 0;

    size_t length() const { return size_t(1) << m; }
    size_t dimension() const {
        size_t k = 0;
        for (int i = r_x + 1; i <= m - r_z - 1; i++) k += binomial(m, i);
        return k;
    }
    size_t x_distance() const { return size_t(1) << (r_z + 1); }
    size_t z_distance() const { return size_t(1) << (r_x + 1); }
    std::string to_json() const;
};

// The same construction punctured at the all-zero coordinate.  Stabilizers
// become the shortened codes and the code gains one logical qubit; with
// r_x + r_z + 1 = m that single logical pair is transversal (all-ones).
struct PqrmCode {
    int r_x = 0, r_z = 0, m = 0;

    size_t length() const { return (size_t(1) << m) - 1; }
    size_t dimension() const {
        size_t k = 1;
        for (int i = r_x + 1; i <= m - r_z - 1; i++) k += binomial(m, i);
        return k;
    }
    size_t x_distance() const { return (size_t(1) << (r_z + 1)) - 1; }
    size_t z_distance() const { return (size_t(1) << (r_x + 1)) - 1; }
    RmCode x_stabilizers() const { return RmCode{r_x, m, true, true}; }
    RmCode z_stabilizers() const { return RmCode{r_z, m, true, true}; }
    std::string to_json() const;
};

// Labels (row indices of the encoding matrix) with at most r ones; the
// corresponding rows generate RM(r,m).  Ascending order.
std::vector<uint32_t> generator_rows(int r, int m);

enum class Membership {
    not_in_code,     // word is outside RM(r,m) (or its punctured image)
    in_shortened,    // word is in the even-weight subcode
    in_coset_1_plus, // word is all-ones plus an even-weight codeword
};

// Runs the word backward through the encoding circuit and inspects the
// frozen wires.  Accepts full-length words (2^m) or punctured ones
// (2^m - 1); a punctured word is completed at the deleted coordinate with
// its own parity, the unique even-weight extension.  The wire at label 0
// then reads off which coset the word sits in.
Membership unencode_check(const F2Vector& word, const RmCode& code);
// Basis 'X' checks against the X-stabilizer family (order r_x), 'Z'
// against the Z family (order r_z).
Membership unencode_check(const F2Vector& word, const QrmCode& code, char basis);
Membership unencode_check(const F2Vector& word, const PqrmCode& code, char basis);

// Number of minimum-weight codewords.  Punctured: count of weight
// 2^(m-r) - 1 words; otherwise weight 2^(m-r).  Exact integer.
uint64_t min_weight_count(int r, int m, bool punctured);

// Generalized divisibility test on the generator rows: every overlap of t
// distinct generators (t = 1..nu) must have weight divisible by
// 2^(nu - t + 1).  nu = 2 is doubly-even, nu = 3 triply-even.  On failure
// the witness holds the labels of the first violating tuple.
struct DivisibilityResult {
    bool pass = false;
    std::vector<uint32_t> witness;
};
DivisibilityResult divisibility_check(const RmCode& code, int nu);

// Closed-form floor on the coset-error rate of a length 2^m - 1 code of
// order r on a binary symmetric channel: the contribution of errors that
// cover half of a minimum-weight odd-coset word.
double logical_lower_bound(double p, int r, int m);

} // namespace qrm
