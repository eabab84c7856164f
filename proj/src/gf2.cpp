#include "qrm/gf2.hpp"

#include <cassert>
#include <stdexcept>

namespace qrm {

F2Matrix F2Matrix::mul(const F2Matrix& b) const {
    assert(cols == b.rows);
    F2Matrix out(rows, b.cols);
    for (size_t i = 0; i < rows; i++) {
        uint64_t* dst = out.row(i);
        const uint64_t* a = row(i);
        for (size_t k = 0; k < cols; k++) {
            if ((a[k >> 6] >> (k & 63)) & 1) {
                const uint64_t* src = b.row(k);
                for (size_t t = 0; t < b.wpr; t++) dst[t] ^= src[t];
            }
        }
    }
    return out;
}

F2Vector F2Matrix::mul(const F2Vector& v) const {
    assert(cols == v.n);
    F2Vector out(rows);
    for (size_t i = 0; i < rows; i++) {
        uint64_t acc = 0;
        const uint64_t* a = row(i);
        for (size_t k = 0; k < wpr; k++) acc ^= a[k] & v.w[k];
        out.set(i, popcount64(acc) & 1);
    }
    return out;
}

F2Vector F2Matrix::mul_left(const F2Vector& v) const {
    assert(rows == v.n);
    F2Vector out(cols);
    for (size_t i = 0; i < rows; i++)
        if (v.get(i))
            for (size_t k = 0; k < wpr; k++) out.w[k] ^= row(i)[k];
    return out;
}

F2Matrix F2Matrix::transpose() const {
    F2Matrix out(cols, rows);
    for (size_t i = 0; i < rows; i++)
        for (size_t j = 0; j < cols; j++)
            if (get(i, j)) out.set(j, i, true);
    return out;
}

size_t F2Matrix::rank() const {
    F2Matrix a = *this;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; c++) {
        size_t p = r;
        while (p < rows && !a.get(p, c)) p++;
        if (p == rows) continue;
        a.swap_rows(p, r);
        for (size_t i = 0; i < rows; i++)
            if (i != r && a.get(i, c)) a.xor_row(i, r);
        r++;
    }
    return r;
}

std::optional<F2Matrix> F2Matrix::inverse() const {
    if (rows != cols) return std::nullopt;
    F2Matrix a = *this;
    F2Matrix inv = identity(rows);
    for (size_t c = 0; c < cols; c++) {
        size_t p = c;
        while (p < rows && !a.get(p, c)) p++;
        if (p == rows) return std::nullopt;
        a.swap_rows(p, c);
        inv.swap_rows(p, c);
        for (size_t i = 0; i < rows; i++) {
            if (i != c && a.get(i, c)) {
                a.xor_row(i, c);
                inv.xor_row(i, c);
            }
        }
    }
    return inv;
}

bool F2Matrix::is_symmetric() const {
    if (rows != cols) return false;
    for (size_t i = 0; i < rows; i++)
        for (size_t j = i + 1; j < cols; j++)
            if (get(i, j) != get(j, i)) return false;
    return true;
}

std::string F2Matrix::to_string() const {
    std::string s;
    for (size_t i = 0; i < rows; i++) {
        for (size_t j = 0; j < cols; j++) s += get(i, j) ? '1' : '0';
        s += '\n';
    }
    return s;
}

F2Matrix elementary_matrix(size_t n, size_t i, size_t j) {
    assert(i < n && j < n && i != j);
    F2Matrix m = F2Matrix::identity(n);
    m.set(i, j, true);
    return m;
}

F2Matrix swap_matrix(size_t n, size_t i, size_t j) {
    return elementary_matrix(n, i, j).mul(elementary_matrix(n, j, i)).mul(elementary_matrix(n, i, j));
}

F2Matrix encoding_matrix(int m) {
    size_t n = size_t(1) << m;
    F2Matrix e(n, n);
    for (size_t i = 0; i < n; i++)
        for (size_t j = 0; j < n; j++)
            if ((i & ~j) == 0) e.set(i, j, true);
    return e;
}

std::vector<uint32_t> coordinate_map(const F2Matrix& A, uint32_t b) {
    size_t m = A.rows;
    if (A.cols != m || m == 0 || m > 31) throw std::invalid_argument("coordinate_map: bad matrix shape");
    size_t n = size_t(1) << m;
    // Column j of A holds the image of input bit x_{m-j}; collect it as a label.
    std::vector<uint32_t> image(m, 0);
    for (size_t j = 0; j < m; j++)
        for (size_t i = 0; i < m; i++)
            if (A.get(i, j)) image[j] |= uint32_t(1) << (m - 1 - i);
    std::vector<uint32_t> sigma(n);
    for (uint32_t l = 0; l < n; l++) {
        uint32_t out = b;
        for (size_t j = 0; j < m; j++)
            if ((l >> (m - 1 - j)) & 1) out ^= image[j];
        sigma[l] = out;
    }
    return sigma;
}

F2Vector permute_gather(const F2Vector& v, const std::vector<uint32_t>& sigma) {
    F2Vector out(v.n);
    for (size_t c = 0; c < v.n; c++) if (v.get(sigma[c])) out.set(c, true);
    return out;
}

F2Vector permute_scatter(const F2Vector& v, const std::vector<uint32_t>& sigma) {
    F2Vector out(v.n);
    for (size_t c = 0; c < v.n; c++) if (v.get(c)) out.set(sigma[c], true);
    return out;
}

void zeta_transform(F2Vector& v, int m) {
    for (int t = 0; t < m; t++) {
        size_t step = size_t(1) << t;
        for (size_t j = 0; j < v.n; j++)
            if (j & step)
                if (v.get(j ^ step)) v.flip(j);
    }
}

void mu_transform(F2Vector& v, int m) {
    for (int t = 0; t < m; t++) {
        size_t step = size_t(1) << t;
        for (size_t j = 0; j < v.n; j++)
            if (!(j & step))
                if (v.get(j | step)) v.flip(j);
    }
}

namespace {
// Positions whose bit t is clear, within one 64-bit word (t < 6).
constexpr uint64_t kClear[6] = {
    0x5555555555555555ULL, 0x3333333333333333ULL, 0x0f0f0f0f0f0f0f0fULL,
    0x00ff00ff00ff00ffULL, 0x0000ffff0000ffffULL, 0x00000000ffffffffULL,
};
} // namespace

Mask128 zeta128(Mask128 v, int m) {
    for (int t = 0; t < m && t < 6; t++) {
        unsigned s = 1u << t;
        v.lo ^= (v.lo & kClear[t]) << s;
        v.hi ^= (v.hi & kClear[t]) << s;
    }
    if (m >= 7) v.hi ^= v.lo;
    return v;
}

Mask128 mu128(Mask128 v, int m) {
    for (int t = 0; t < m && t < 6; t++) {
        unsigned s = 1u << t;
        v.lo ^= (v.lo >> s) & kClear[t];
        v.hi ^= (v.hi >> s) & kClear[t];
    }
    if (m >= 7) v.lo ^= v.hi;
    return v;
}

Mask128 scatter128(const Mask128& v, const std::vector<uint32_t>& sigma) {
    Mask128 out;
    uint64_t x = v.lo;
    while (x) {
        unsigned i = __builtin_ctzll(x);
        x &= x - 1;
        out.flip(sigma[i]);
    }
    x = v.hi;
    while (x) {
        unsigned i = 64 + __builtin_ctzll(x);
        x &= x - 1;
        out.flip(sigma[i]);
    }
    return out;
}

F2Vector to_f2vector(const Mask128& v, size_t n) {
    F2Vector out(n);
    out.w[0] = v.lo;
    if (n > 64) out.w[1] = v.hi;
    return out;
}

Mask128 to_mask128(const F2Vector& v) {
    Mask128 out;
    if (!v.w.empty()) out.lo = v.w[0];
    if (v.w.size() > 1) out.hi = v.w[1];
    return out;
}

} // namespace qrm
