#include "qrm/rm.hpp"

#include "json.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qrm {

uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 c = 1;
    for (int i = 1; i <= k; i++) {
        c *= n - k + i;
        c /= i;
    }
    return uint64_t(c);
}

std::string RmCode::to_json() const {
    nlohmann::json j{{"family", "rm"}, {"r", r}, {"m", m},
                     {"punctured", punctured}, {"shortened", shortened},
                     {"n", length()}, {"k", dimension()}, {"d", distance()}};
    return j.dump();
}

std::string QrmCode::to_json() const {
    nlohmann::json j{{"family", "qrm"}, {"r_x", r_x}, {"r_z", r_z}, {"m", m},
                     {"punctured", false}, {"n", length()}, {"k", dimension()},
                     {"d_x", x_distance()}, {"d_z", z_distance()}};
    return j.dump();
}

std::string PqrmCode::to_json() const {
    nlohmann::json j{{"family", "pqrm"}, {"r_x", r_x}, {"r_z", r_z}, {"m", m},
                     {"punctured", true}, {"n", length()}, {"k", dimension()},
                     {"d_x", x_distance()}, {"d_z", z_distance()}};
    return j.dump();
}

std::vector<uint32_t> generator_rows(int r, int m) {
    assert(0 <= r && r <= m);
    std::vector<uint32_t> rows;
    for (uint32_t i = 0; i < (uint32_t(1) << m); i++)
        if (popcount64(i) <= r) rows.push_back(i);
    return rows;
}

namespace {

Membership unencode_order(const F2Vector& word, int r, int m) {
    size_t n = size_t(1) << m;
    F2Vector full(n);
    if (word.n == n) {
        full = word;
    } else if (word.n == n - 1) {
        // Coordinates 1..n-1 of the full word; the deleted coordinate is
        // fixed by overall even weight.
        for (size_t i = 0; i < n - 1; i++) full.set(i + 1, word.get(i));
        full.set(0, word.parity());
    } else {
        throw std::invalid_argument("unencode_check: word length fits neither code");
    }
    zeta_transform(full, m);
    for (size_t i = 0; i < n; i++)
        if (popcount64(i) > r && full.get(i)) return Membership::not_in_code;
    return full.get(0) ? Membership::in_coset_1_plus : Membership::in_shortened;
}

} // namespace

Membership unencode_check(const F2Vector& word, const RmCode& code) {
    return unencode_order(word, code.r, code.m);
}

Membership unencode_check(const F2Vector& word, const QrmCode& code, char basis) {
    return unencode_order(word, basis == 'X' ? code.r_x : code.r_z, code.m);
}

Membership unencode_check(const F2Vector& word, const PqrmCode& code, char basis) {
    return unencode_order(word, basis == 'X' ? code.r_x : code.r_z, code.m);
}

uint64_t min_weight_count(int r, int m, bool punctured) {
    assert(1 <= r && r < m);
    unsigned __int128 num = 1, den = 1;
    for (int i = 0; i < m - r; i++) {
        num *= (uint64_t(1) << (m - i)) - 1;
        den *= (uint64_t(1) << (m - r - i)) - 1;
    }
    unsigned __int128 a = num / den;
    assert(a * den == num);
    if (!punctured) a <<= r;
    return uint64_t(a);
}

DivisibilityResult divisibility_check(const RmCode& code, int nu) {
    size_t n = size_t(1) << code.m;
    std::vector<uint32_t> labels = generator_rows(code.r, code.m);
    if (code.shortened)
        labels.erase(labels.begin()); // drop the all-ones row (label 0)

    bool drop_zero = code.punctured || code.shortened;
    std::vector<F2Vector> gens;
    for (uint32_t lab : labels) {
        F2Vector row(n);
        for (size_t j = 0; j < n; j++)
            if ((lab & ~j) == 0) row.set(j, true);
        if (drop_zero) row.set(0, false); // the deleted coordinate never counts
        gens.push_back(row);
    }

    // Enumerate t-subsets in lexicographic order so the witness is stable.
    size_t g = gens.size();
    std::vector<size_t> idx;
    for (int t = 1; t <= nu; t++) {
        uint64_t need = uint64_t(1) << (nu - t + 1);
        idx.assign(t, 0);
        for (size_t i = 0; i < size_t(t); i++) idx[i] = i;
        if (size_t(t) > g) break;
        for (;;) {
            F2Vector overlap = gens[idx[0]];
            for (int i = 1; i < t; i++) overlap &= gens[idx[i]];
            if (overlap.weight() % need != 0) {
                DivisibilityResult res;
                res.pass = false;
                for (size_t i : idx) res.witness.push_back(labels[i]);
                return res;
            }
            int i = t - 1;
            while (i >= 0 && idx[i] == g - t + i) i--;
            if (i < 0) break;
            idx[i]++;
            for (int j = i + 1; j < t; j++) idx[j] = idx[j - 1] + 1;
        }
    }
    return {true, {}};
}

double logical_lower_bound(double p, int r, int m) {
    uint64_t d = (uint64_t(1) << (m - r)) - 1;
    uint64_t half = uint64_t(1) << (m - r - 1);
    double coeff = double(binomial(int(d), int(half))) * double(min_weight_count(r, m, true));
    size_t n = (size_t(1) << m) - 1;
    return coeff * std::pow(p, double(half)) * std::pow(1.0 - p, double(n - half));
}

} // namespace qrm
