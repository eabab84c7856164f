#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qrm/decoder.hpp"

#include <random>

using namespace qrm;

namespace {

std::vector<F2Vector> full_codewords(int r, int m) {
    size_t n = size_t(1) << m;
    std::vector<uint32_t> labels = generator_rows(r, m);
    F2Matrix e = encoding_matrix(m);
    std::vector<F2Vector> words;
    words.reserve(size_t(1) << labels.size());
    for (uint64_t mask = 0; mask < (uint64_t(1) << labels.size()); mask++) {
        F2Vector w(n);
        for (size_t i = 0; i < labels.size(); i++)
            if ((mask >> i) & 1) w ^= e.row_vector(labels[i]);
        words.push_back(std::move(w));
    }
    return words;
}

size_t punct_distance(const F2Vector& punct, const F2Vector& full) {
    size_t d = 0;
    for (size_t i = 1; i < full.n; i++)
        if (punct.get(i - 1) != full.get(i)) d++;
    return d;
}

F2Vector puncture(const F2Vector& full) {
    F2Vector w(full.n - 1);
    for (size_t i = 1; i < full.n; i++) w.set(i - 1, full.get(i));
    return w;
}

F2Vector random_codeword(std::mt19937_64& rng, int r, int m) {
    size_t n = size_t(1) << m;
    F2Vector u(n);
    for (uint32_t lab : generator_rows(r, m))
        if (rng() & 1) u.set(lab, true);
    zeta_transform(u, m);
    return u;
}

} // namespace

TEST_CASE("noiseless punctured codewords decode to themselves") {
    RmCode code{1, 3, true, false};
    for (const F2Vector& cw : full_codewords(1, 3)) {
        DecodeResult r = scl_decode(SoftInput::from_word(puncture(cw), 3), code, 1);
        CHECK(r.codeword == cw);
        CHECK(r.path_metric == 0.0);
        CHECK((r.coset_bit == CosetBit::one_plus) == cw.get(0));
    }
}

TEST_CASE("full-list decoding is maximum likelihood") {
    struct Config {
        int r, m, L, trials;
    };
    std::mt19937_64 rng(61);
    for (Config cf : {Config{1, 2, 4, 1000}, Config{1, 3, 16, 3000}, Config{2, 3, 128, 2500},
                      Config{1, 4, 32, 3000}, Config{2, 4, 2048, 400}, Config{3, 4, 32768, 100}}) {
        auto words = full_codewords(cf.r, cf.m);
        size_t n = size_t(1) << cf.m;
        RmCode code{cf.r, cf.m, true, false};
        SclDecoder dec(cf.m, cf.L);
        for (int trial = 0; trial < cf.trials; trial++) {
            F2Vector w(n - 1);
            for (size_t i = 0; i < n - 1; i++)
                if (rng() % 100 < 5) w.set(i, true);
            // Oracle: nearest codeword by exhaustive scan.
            size_t best = n;
            for (const F2Vector& cw : words) best = std::min(best, punct_distance(w, cw));
            DecodeResult r = dec.decode(SoftInput::from_word(w, cf.m), code);
            CHECK(size_t(r.path_metric) == best);
            CHECK(punct_distance(w, r.codeword) == best);
        }
    }
}

TEST_CASE("decode result is self-consistent") {
    std::mt19937_64 rng(62);
    RmCode code{3, 7, true, false};
    SclDecoder dec(7, 8);
    for (int trial = 0; trial < 200; trial++) {
        F2Vector w(127);
        for (size_t i = 0; i < 127; i++)
            if (rng() % 10 == 0) w.set(i, true);
        DecodeResult r = dec.decode(SoftInput::from_word(w, 7), code);

        // Info bits occupy generator labels and re-encode to the codeword.
        F2Vector re = r.info_bits;
        zeta_transform(re, 7);
        CHECK(re == r.codeword);
        for (size_t i = 0; i < 128; i++)
            if (popcount64(i) > 3) CHECK(!r.info_bits.get(i));
        CHECK((r.coset_bit == CosetBit::one_plus) == r.info_bits.get(0));

        // Hard inputs make the metric the visible Hamming distance.
        CHECK(size_t(r.path_metric) == punct_distance(w, r.codeword));
    }
}

TEST_CASE("coset decisions") {
    RmCode code{4, 7, true, false};
    F2Vector zero(127);
    CHECK(coset_decide(zero, code, 8) == CosetDecision::trivial);

    F2Vector ones(127);
    for (size_t i = 0; i < 127; i++) ones.set(i, true);
    CHECK(coset_decide(ones, code, 8) == CosetDecision::logical);

    // A weight-4 error inside a weight-7 word of the odd coset decodes to
    // that word, not back to zero.
    std::mt19937_64 rng(63);
    for (int trial = 0; trial < 10; trial++) {
        uint32_t picks[7] = {0, 1, 2, 3, 4, 5, 6};
        for (int i = 6; i > 0; i--) std::swap(picks[i], picks[rng() % (i + 1)]);
        F2Vector e(127);
        // Positions 0..6 correspond to labels 1..7, the nonzero points of a
        // three-dimensional subspace, a weight-7 odd-coset word.
        for (int i = 0; i < 4; i++) e.set(picks[i], true);
        CHECK(coset_decide(e, code, 32) == CosetDecision::logical);
    }
}

TEST_CASE("reduced weight of stabilizers and small errors") {
    std::mt19937_64 rng(64);
    RmCode full{3, 7, true, false};
    RmCode even{3, 7, true, true};
    for (int trial = 0; trial < 50; trial++) {
        F2Vector cw = puncture(random_codeword(rng, 3, 7));
        CHECK(reduced_weight(cw, full, 32) == 0);

        F2Vector e(127);
        e.set(rng() % 127, true);
        CHECK(reduced_weight(e, full, 32) == 1);
        CHECK(reduced_weight(e, even, 32) == 1);
    }
}

TEST_CASE("reduced weight never exceeds the raw weight") {
    std::mt19937_64 rng(65);
    RmCode full{3, 7, true, false};
    for (int trial = 0; trial < 200; trial++) {
        F2Vector e(127);
        for (size_t i = 0; i < 127; i++)
            if (rng() % 4 == 0) e.set(i, true);
        CHECK(reduced_weight(e, full, 32) <= e.weight());
    }
}

TEST_CASE("list mode agrees with exhaustive coset minimization") {
    std::mt19937_64 rng(66);
    for (bool shortened : {false, true}) {
        RmCode code{1, 4, true, shortened};
        for (int trial = 0; trial < 500; trial++) {
            F2Vector e(15);
            int wt = 1 + int(rng() % 6);
            for (int i = 0; i < wt; i++) e.set(rng() % 15, true);
            CHECK(reduced_weight(e, code, 32) == reduced_weight_exact(e, code));
        }
    }
    RmCode wide{2, 4, true, false};
    for (int trial = 0; trial < 100; trial++) {
        F2Vector e(15);
        for (size_t i = 0; i < 15; i++)
            if (rng() & 1) e.set(i, true);
        CHECK(reduced_weight(e, wide, 2048) == reduced_weight_exact(e, wide));
    }
}

TEST_CASE("exact reduction is invariant under stabilizer shifts") {
    std::mt19937_64 rng(67);
    RmCode code{2, 4, true, true};
    F2Matrix enc = encoding_matrix(4);
    auto gens = generator_rows(2, 4);
    for (int trial = 0; trial < 50; trial++) {
        F2Vector e(15);
        for (size_t i = 0; i < 15; i++)
            if (rng() & 1) e.set(i, true);
        uint32_t lab = gens[1 + rng() % (gens.size() - 1)];
        F2Vector shifted = e ^ puncture(enc.row_vector(lab));
        CHECK(reduced_weight_exact(e, code) == reduced_weight_exact(shifted, code));
    }
}

TEST_CASE("larger lists rarely improve the reduction at full size") {
    std::mt19937_64 rng(68);
    RmCode code{3, 7, true, false};
    int disagreements = 0;
    for (int trial = 0; trial < 100; trial++) {
        F2Vector e(127);
        int wt = 1 + int(rng() % 10);
        for (int i = 0; i < wt; i++) e.set(rng() % 127, true);
        if (reduced_weight(e, code, 32) != reduced_weight(e, code, 256)) disagreements++;
    }
    CHECK(disagreements <= 2);
}

TEST_CASE("decoding is isotropic over transmitted codewords") {
    std::mt19937_64 rng(69);
    RmCode code{1, 4, true, false};
    SclDecoder dec(4, 8);
    const int trials = 100000;
    const double p = 0.05;

    auto run = [&](bool random_word) {
        int errors = 0;
        for (int t = 0; t < trials; t++) {
            F2Vector cw(16);
            if (random_word) cw = random_codeword(rng, 1, 4);
            bool sent_coset = cw.get(0);
            F2Vector w = puncture(cw);
            for (size_t i = 0; i < 15; i++)
                if (rng() % 10000 < p * 10000) w.flip(i);
            DecodeResult r = dec.decode(SoftInput::from_word(w, 4), code);
            bool got_coset = r.coset_bit == CosetBit::one_plus;
            if (got_coset != sent_coset) errors++;
        }
        return errors;
    };
    double e0 = run(false), e1 = run(true);
    double sd = std::sqrt(e0 + e1 + 1.0);
    CHECK(std::abs(e0 - e1) < 3 * sd);
}

TEST_CASE("measured coset-error rate sits above the closed-form floor") {
    std::mt19937_64 rng(70);
    RmCode code{1, 3, true, false};
    SclDecoder dec(3, 8);
    const int trials = 30000;
    const double p = 0.05;
    int errors = 0;
    for (int t = 0; t < trials; t++) {
        F2Vector w(7);
        for (size_t i = 0; i < 7; i++)
            if (rng() % 10000 < p * 10000) w.set(i, true);
        if (dec.decode(SoftInput::from_word(w, 3), code).coset_bit == CosetBit::one_plus)
            errors++;
    }
    double rate = double(errors) / trials;
    double floor = logical_lower_bound(p, 1, 3);
    double sd = std::sqrt(rate / trials + 1e-12);
    CHECK(rate > floor - 3 * sd);
}
