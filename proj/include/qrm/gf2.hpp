#pragma once
// Bit-packed linear algebra over GF(2) plus the subset/superset transforms
// that implement the hypercube encoding circuit as a butterfly.

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qrm {

inline int popcount64(uint64_t x) { return __builtin_popcountll(x); }

// Dynamically sized bit vector, index 0 is the least significant coordinate.
struct F2Vector {
    size_t n = 0;
    std::vector<uint64_t> w;

    F2Vector() = default;
    explicit F2Vector(size_t n_) : n(n_), w((n_ + 63) / 64, 0) {}

    bool get(size_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    void set(size_t i, bool v) {
        uint64_t m = uint64_t(1) << (i & 63);
        if (v) w[i >> 6] |= m; else w[i >> 6] &= ~m;
    }
    void flip(size_t i) { w[i >> 6] ^= uint64_t(1) << (i & 63); }

    size_t weight() const {
        size_t s = 0;
        for (uint64_t x : w) s += popcount64(x);
        return s;
    }
    bool parity() const { return weight() & 1; }
    bool any() const {
        for (uint64_t x : w) if (x) return true;
        return false;
    }
    void clear() { std::fill(w.begin(), w.end(), 0); }

    F2Vector& operator^=(const F2Vector& o) {
        for (size_t i = 0; i < w.size(); i++) w[i] ^= o.w[i];
        return *this;
    }
    friend F2Vector operator^(F2Vector a, const F2Vector& b) { return a ^= b; }
    F2Vector& operator&=(const F2Vector& o) {
        for (size_t i = 0; i < w.size(); i++) w[i] &= o.w[i];
        return *this;
    }
    friend F2Vector operator&(F2Vector a, const F2Vector& b) { return a &= b; }
    bool operator==(const F2Vector&) const = default;

    // Highest index printed first, like a binary literal.
    std::string to_string() const {
        std::string s(n, '0');
        for (size_t i = 0; i < n; i++) if (get(i)) s[n - 1 - i] = '1';
        return s;
    }
    static F2Vector from_string(const std::string& s) {
        F2Vector v(s.size());
        for (size_t i = 0; i < s.size(); i++)
            if (s[s.size() - 1 - i] == '1') v.set(i, true);
        return v;
    }
};

// Row-major packed matrix.
struct F2Matrix {
    size_t rows = 0, cols = 0, wpr = 0;
    std::vector<uint64_t> w;

    F2Matrix() = default;
    F2Matrix(size_t r, size_t c) : rows(r), cols(c), wpr((c + 63) / 64), w(r * wpr, 0) {}

    static F2Matrix identity(size_t n) {
        F2Matrix m(n, n);
        for (size_t i = 0; i < n; i++) m.set(i, i, true);
        return m;
    }

    const uint64_t* row(size_t r) const { return w.data() + r * wpr; }
    uint64_t* row(size_t r) { return w.data() + r * wpr; }

    bool get(size_t r, size_t c) const { return (row(r)[c >> 6] >> (c & 63)) & 1; }
    void set(size_t r, size_t c, bool v) {
        uint64_t m = uint64_t(1) << (c & 63);
        if (v) row(r)[c >> 6] |= m; else row(r)[c >> 6] &= ~m;
    }
    void xor_row(size_t dst, size_t src) {
        uint64_t* d = row(dst);
        const uint64_t* s = row(src);
        for (size_t k = 0; k < wpr; k++) d[k] ^= s[k];
    }
    void swap_rows(size_t a, size_t b) {
        if (a == b) return;
        uint64_t* pa = row(a);
        uint64_t* pb = row(b);
        for (size_t k = 0; k < wpr; k++) std::swap(pa[k], pb[k]);
    }

    F2Vector row_vector(size_t r) const {
        F2Vector v(cols);
        std::copy(row(r), row(r) + wpr, v.w.begin());
        return v;
    }
    void set_row(size_t r, const F2Vector& v) {
        std::copy(v.w.begin(), v.w.end(), row(r));
    }

    F2Matrix mul(const F2Matrix& b) const;      // this * b
    F2Vector mul(const F2Vector& v) const;      // column action: out = M v
    F2Vector mul_left(const F2Vector& v) const; // row action: out = v M
    F2Matrix transpose() const;
    size_t rank() const;
    std::optional<F2Matrix> inverse() const;
    bool is_symmetric() const;
    bool operator==(const F2Matrix&) const = default;

    std::string to_string() const;
};

// n x n identity with an extra one at (i, j).  Self-inverse.
F2Matrix elementary_matrix(size_t n, size_t i, size_t j);

// Permutation matrix exchanging i and j, as the product E_ij E_ji E_ij.
F2Matrix swap_matrix(size_t n, size_t i, size_t j);

// Transfer matrix of the m-layer hypercube CNOT circuit on 2^m wires.
// Entry (i, j) is 1 iff the support of i is contained in the support of j,
// so row i is the evaluation vector of the monomial on the variables of i.
// Reading rows/columns in descending label order gives the familiar
// lower-triangular Kronecker power of [[1,0],[1,1]].  Self-inverse.
F2Matrix encoding_matrix(int m);

// Affine coordinate permutation of the 2^m labels.  A is m x m invertible
// over GF(2), b is a label.  A label packs as the column vector
// (x_m, ..., x_1)^T, x_1 least significant, so matrix row 0 acts on x_m.
// Returns sigma with sigma[l] = A*l + b.
std::vector<uint32_t> coordinate_map(const F2Matrix& A, uint32_t b);

// out[c] = in[sigma[c]]: substitution of coordinates into an evaluation
// vector (a polynomial pulled back through the map).
F2Vector permute_gather(const F2Vector& v, const std::vector<uint32_t>& sigma);
// out[sigma[c]] = in[c]: relabeling of wires, used when a circuit is
// rewritten with every qubit index mapped through sigma.
F2Vector permute_scatter(const F2Vector& v, const std::vector<uint32_t>& sigma);

// In-place butterflies over the subset lattice of m-bit labels.
// zeta: out[j] = xor of in[i] over i subset of j (the forward encoder).
// mu:   out[j] = xor of in[i] over i superset of j (the reversed encoder).
// Both are involutions over GF(2).
void zeta_transform(F2Vector& v, int m);
void mu_transform(F2Vector& v, int m);

// Fixed 128-bit mask: the hot-path representation for m <= 7 codes.
struct Mask128 {
    uint64_t lo = 0, hi = 0;

    bool get(unsigned i) const {
        return ((i < 64 ? lo >> i : hi >> (i - 64)) & 1) != 0;
    }
    void set(unsigned i) { (i < 64 ? lo : hi) |= uint64_t(1) << (i & 63); }
    void flip(unsigned i) { (i < 64 ? lo : hi) ^= uint64_t(1) << (i & 63); }

    Mask128& operator^=(const Mask128& o) { lo ^= o.lo; hi ^= o.hi; return *this; }
    friend Mask128 operator^(Mask128 a, const Mask128& b) { return a ^= b; }
    Mask128& operator&=(const Mask128& o) { lo &= o.lo; hi &= o.hi; return *this; }
    friend Mask128 operator&(Mask128 a, const Mask128& b) { return a &= b; }
    bool operator==(const Mask128&) const = default;

    int weight() const { return popcount64(lo) + popcount64(hi); }
    bool any() const { return (lo | hi) != 0; }
    uint64_t hash() const {
        uint64_t x = lo * 0x9e3779b97f4a7c15ULL ^ (hi + 0xbf58476d1ce4e5b9ULL);
        x ^= x >> 31; x *= 0x94d049bb133111ebULL; x ^= x >> 29;
        return x;
    }
};

Mask128 zeta128(Mask128 v, int m);
Mask128 mu128(Mask128 v, int m);
Mask128 scatter128(const Mask128& v, const std::vector<uint32_t>& sigma);

F2Vector to_f2vector(const Mask128& v, size_t n);
Mask128 to_mask128(const F2Vector& v);

} // namespace qrm
