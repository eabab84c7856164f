#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qrm/rm.hpp"

#include <random>
#include <set>
#include <unordered_set>

using namespace qrm;

namespace {

// Exhaustive codeword enumeration for small m, packed into an integer.
// Independent of zeta_transform: builds rows by the subset test directly.
std::vector<uint32_t> all_codewords(int r, int m) {
    size_t n = size_t(1) << m;
    std::vector<uint32_t> rows;
    for (uint32_t lab = 0; lab < n; lab++) {
        if (popcount64(lab) > size_t(r)) continue;
        uint32_t row = 0;
        for (uint32_t j = 0; j < n; j++)
            if ((lab & ~j) == 0) row |= uint32_t(1) << j;
        rows.push_back(row);
    }
    std::vector<uint32_t> words;
    for (uint32_t mask = 0; mask < (uint32_t(1) << rows.size()); mask++) {
        uint32_t w = 0;
        for (size_t i = 0; i < rows.size(); i++)
            if ((mask >> i) & 1) w ^= rows[i];
        words.push_back(w);
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

F2Vector unpack(uint32_t w, size_t n) {
    F2Vector v(n);
    for (size_t i = 0; i < n; i++) if ((w >> i) & 1) v.set(i, true);
    return v;
}

F2Vector random_codeword(std::mt19937_64& rng, int r, int m) {
    size_t n = size_t(1) << m;
    F2Vector u(n);
    for (uint32_t lab : generator_rows(r, m))
        if (rng() & 1) u.set(lab, true);
    zeta_transform(u, m); // encode: word = u * E
    return u;
}

} // namespace

TEST_CASE("generator row sets") {
    CHECK(generator_rows(1, 3) == std::vector<uint32_t>{0, 1, 2, 4});
    CHECK(generator_rows(3, 3).size() == 8);
    CHECK(generator_rows(2, 7).size() == 29);
    CHECK(generator_rows(0, 5) == std::vector<uint32_t>{0});
}

TEST_CASE("code parameter tables") {
    RmCode rm37{3, 7, false, false};
    CHECK(rm37.length() == 128);
    CHECK(rm37.dimension() == 64);
    CHECK(rm37.distance() == 16);

    RmCode rm37p{3, 7, true, false};
    CHECK(rm37p.length() == 127);
    CHECK(rm37p.dimension() == 64);
    CHECK(rm37p.distance() == 15);

    RmCode rm37s{3, 7, true, true};
    CHECK(rm37s.length() == 127);
    CHECK(rm37s.dimension() == 63);
    CHECK(rm37s.distance() == 16);

    PqrmCode d15{3, 3, 7};
    CHECK(d15.length() == 127);
    CHECK(d15.dimension() == 1);
    CHECK(d15.x_distance() == 15);
    CHECK(d15.z_distance() == 15);

    PqrmCode d7{2, 4, 7};
    CHECK(d7.length() == 127);
    CHECK(d7.dimension() == 1);
    CHECK(d7.x_distance() == 31);
    CHECK(d7.z_distance() == 7);
    CHECK(d7.x_stabilizers().dimension() == 28);
    CHECK(d7.z_stabilizers().dimension() == 98);

    QrmCode q{1, 1, 4};
    CHECK(q.length() == 16);
    CHECK(q.dimension() == 6);
    CHECK(q.x_distance() == 4);
    CHECK(q.z_distance() == 4);

    CHECK(d15.to_json().find("\"family\":\"pqrm\"") != std::string::npos);
    CHECK(d15.to_json().find("\"punctured\":true") != std::string::npos);
    CHECK(q.to_json().find("\"family\":\"qrm\"") != std::string::npos);
    CHECK(rm37s.to_json().find("\"family\":\"rm\"") != std::string::npos);
}

TEST_CASE("membership agrees with exhaustive enumeration") {
    std::mt19937_64 rng(41);
    for (int m = 2; m <= 4; m++) {
        size_t n = size_t(1) << m;
        for (int r = 1; r < m; r++) {
            auto words = all_codewords(r, m);
            std::unordered_set<uint32_t> in(words.begin(), words.end());
            RmCode code{r, m, false, false};

            for (uint32_t w : words) {
                F2Vector v = unpack(w, n);
                Membership got = unencode_check(v, code);
                // Wire 0 reads the deleted coordinate, which is the coset bit.
                CHECK(got == ((w & 1) ? Membership::in_coset_1_plus
                                      : Membership::in_shortened));

                // Punctured version of the same word classifies identically.
                F2Vector pv(n - 1);
                for (size_t i = 1; i < n; i++) pv.set(i - 1, (w >> i) & 1);
                CHECK(unencode_check(pv, code) == got);
            }
            for (int trial = 0; trial < 200; trial++) {
                uint32_t w = uint32_t(rng()) & ((uint32_t(1) << n) - 1);
                if (in.count(w)) continue;
                CHECK(unencode_check(unpack(w, n), code) == Membership::not_in_code);
            }
        }
    }
}

TEST_CASE("membership edge words") {
    RmCode code{3, 7, true, false};
    F2Vector zero(127);
    CHECK(unencode_check(zero, code) == Membership::in_shortened);

    F2Vector ones(127);
    for (size_t i = 0; i < 127; i++) ones.set(i, true);
    CHECK(unencode_check(ones, code) == Membership::in_coset_1_plus);

    // Any nonzero generator row, punctured, lands in the even subcode.
    F2Matrix e = encoding_matrix(7);
    for (uint32_t lab : generator_rows(3, 7)) {
        if (lab == 0) continue;
        F2Vector row = e.row_vector(lab);
        F2Vector pv(127);
        for (size_t i = 1; i < 128; i++) pv.set(i - 1, row.get(i));
        CHECK(unencode_check(pv, code) == Membership::in_shortened);
    }

    F2Vector bad(100);
    CHECK_THROWS_AS((void)unencode_check(bad, code), std::invalid_argument);
}

TEST_CASE("quantum membership picks the stabilizer family by basis") {
    PqrmCode d7{2, 4, 7};
    // A weight-16 generator row of RM(3,7) sits inside RM(4,7) but not RM(2,7).
    F2Matrix e = encoding_matrix(7);
    F2Vector row = e.row_vector(0b0000111);
    F2Vector pv(127);
    for (size_t i = 1; i < 128; i++) pv.set(i - 1, row.get(i));
    CHECK(unencode_check(pv, d7, 'Z') == Membership::in_shortened);
    CHECK(unencode_check(pv, d7, 'X') == Membership::not_in_code);

    QrmCode q{2, 4, 7};
    CHECK(unencode_check(row, q, 'Z') == Membership::in_shortened);
    CHECK(unencode_check(row, q, 'X') == Membership::not_in_code);
}

TEST_CASE("minimum weight counts match enumeration") {
    for (int m = 2; m <= 4; m++) {
        for (int r = 1; r < m; r++) {
            auto words = all_codewords(r, m);
            size_t d = size_t(1) << (m - r);
            size_t full = 0, punct = 0;
            for (uint32_t w : words) {
                size_t wt = popcount64(w);
                if (wt == d) full++;
                // Deleting coordinate 0 turns weight-d words through it into d-1.
                if (wt - (w & 1) == d - 1 && wt) punct++;
            }
            CHECK(min_weight_count(r, m, false) == full);
            CHECK(min_weight_count(r, m, true) == punct);
        }
    }
}

TEST_CASE("minimum weight counts, published instances") {
    CHECK(min_weight_count(4, 7, true) == 11811);
    CHECK(binomial(7, 4) * min_weight_count(4, 7, true) == 413385);
    CHECK(min_weight_count(3, 7, true) == 11811);
    CHECK(binomial(15, 8) * min_weight_count(3, 7, true) == 76003785);
    CHECK(min_weight_count(2, 7, true) == 2667);
    CHECK(binomial(31, 16) * min_weight_count(2, 7, true) == 801540700065ULL);
    CHECK(min_weight_count(1, 3, true) == 7);
    CHECK(min_weight_count(1, 3, false) == 14);
}

TEST_CASE("duality of complementary orders") {
    // Exhaustive for small m.
    for (int m = 2; m <= 4; m++) {
        for (int r = 0; r < m; r++) {
            auto a = all_codewords(r, m);
            auto b = all_codewords(m - r - 1, m);
            for (uint32_t u : a)
                for (uint32_t v : b)
                    CHECK(popcount64(u & v) % 2 == 0);
        }
    }
    // Sampled at m = 7.
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; trial++) {
        int r = 1 + int(rng() % 5);
        F2Vector u = random_codeword(rng, r, 7);
        F2Vector v = random_codeword(rng, 7 - r - 1, 7);
        CHECK((u & v).weight() % 2 == 0);
    }
}

TEST_CASE("affine coordinate maps preserve the code") {
    std::mt19937_64 rng(43);
    for (int m : {3, 4, 7}) {
        size_t n = size_t(1) << m;
        for (int trial = 0; trial < 50; trial++) {
            int r = 1 + int(rng() % (m - 1)); // 1 <= r <= m-2 guarantees closure
            if (r > m - 2) r = m - 2;
            if (r < 1) continue;
            F2Matrix a(m, m);
            do {
                for (int i = 0; i < m; i++)
                    for (int j = 0; j < m; j++) a.set(i, j, rng() & 1);
            } while (a.rank() != size_t(m));
            auto sigma = coordinate_map(a, uint32_t(rng() & (n - 1)));
            F2Vector c = random_codeword(rng, r, m);
            RmCode code{r, m, false, false};
            CHECK(unencode_check(permute_gather(c, sigma), code) != Membership::not_in_code);
            CHECK(unencode_check(permute_scatter(c, sigma), code) != Membership::not_in_code);
        }
    }
}

TEST_CASE("weight identities for sums of two and three vectors") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 100; trial++) {
        size_t n = 1 + rng() % 200;
        F2Vector u(n), v(n), w(n);
        for (size_t i = 0; i < n; i++) {
            u.set(i, rng() & 1);
            v.set(i, rng() & 1);
            w.set(i, rng() & 1);
        }
        long uv = long((u & v).weight()), uw = long((u & w).weight());
        long vw = long((v & w).weight()), uvw = long((u & v & w).weight());
        CHECK(long((u ^ v).weight()) == long(u.weight()) + long(v.weight()) - 2 * uv);
        CHECK(long((u ^ v ^ w).weight()) ==
              long(u.weight()) + long(v.weight()) + long(w.weight())
              - 2 * (uv + uw + vw) + 4 * uvw);
    }
}

TEST_CASE("divisibility of generator overlaps") {
    DivisibilityResult r1 = divisibility_check(RmCode{2, 7, true, true}, 3);
    CHECK(r1.pass);
    DivisibilityResult r2 = divisibility_check(RmCode{3, 7, true, true}, 2);
    CHECK(r2.pass);

    DivisibilityResult r3 = divisibility_check(RmCode{3, 7, true, true}, 3);
    CHECK(!r3.pass);
    REQUIRE(r3.witness.size() == 2);
    // The witness pair genuinely violates: overlap weight not divisible by 4.
    F2Matrix e = encoding_matrix(7);
    F2Vector o = e.row_vector(r3.witness[0]) & e.row_vector(r3.witness[1]);
    o.set(0, false);
    CHECK(o.weight() % 4 != 0);
}

TEST_CASE("coset-error floor") {
    double p = 0.01;
    CHECK(logical_lower_bound(p, 4, 7) ==
          doctest::Approx(413385.0 * std::pow(p, 4) * std::pow(1 - p, 123)).epsilon(1e-12));
    CHECK(logical_lower_bound(p, 3, 7) ==
          doctest::Approx(76003785.0 * std::pow(p, 8) * std::pow(1 - p, 119)).epsilon(1e-12));
    CHECK(logical_lower_bound(p, 2, 7) ==
          doctest::Approx(801540700065.0 * std::pow(p, 16) * std::pow(1 - p, 111)).epsilon(1e-12));

    // m = 3: the coefficient counts weight-2 halves of weight-3 odd words,
    // checked by direct enumeration of the punctured [7,4] code.
    auto words = all_codewords(1, 3);
    std::set<uint32_t> halves;
    size_t odd3 = 0;
    for (uint32_t w : words) {
        uint32_t pw = w >> 1; // drop coordinate 0
        if ((w & 1) && popcount64(pw) == 3) {
            odd3++;
            for (int a = 0; a < 7; a++)
                for (int b = a + 1; b < 7; b++) {
                    uint32_t sub = (uint32_t(1) << a) | (uint32_t(1) << b);
                    if ((sub & ~pw) == 0) halves.insert(sub);
                }
        }
    }
    CHECK(odd3 == min_weight_count(1, 3, true));
    CHECK(double(halves.size()) ==
          doctest::Approx(logical_lower_bound(p, 1, 3) / (std::pow(p, 2) * std::pow(1 - p, 5))));
}
