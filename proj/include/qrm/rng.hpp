#pragma once
// Small counter-friendly RNG (splitmix64) and a geometric-gap sampler for
// scanning long Bernoulli site sequences without drawing per site.

#include <cmath>
#include <cstdint>

namespace qrm {

struct SplitMix64 {
    uint64_t s = 0;

    SplitMix64() = default;
    explicit SplitMix64(uint64_t seed) : s(seed) {}

    uint64_t next() {
        uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    // Uniform integer in [0, bound) without modulo bias worth caring about
    // for bound far below 2^64.
    uint64_t below(uint64_t bound) { return next() % bound; }
};

// Mixes a seed and a stream index into an independent generator, so batches
// can run in any order or on any worker and still reproduce bit-exactly.
inline SplitMix64 stream_rng(uint64_t seed, uint64_t stream) {
    SplitMix64 mix(seed ^ 0x6a09e667f3bcc909ULL);
    mix.s ^= mix.next() + stream;
    mix.next();
    return SplitMix64(mix.next());
}

// Iterates the indices of successes in a Bernoulli(p) sequence by sampling
// geometric gaps.  next_gap returns the number of failures before the next
// success (0 means the current site fires).
struct BernoulliSkip {
    double log1m = 0.0;
    bool always = false, never = false;

    explicit BernoulliSkip(double p) {
        if (p <= 0.0) never = true;
        else if (p >= 1.0) always = true;
        else log1m = std::log1p(-p);
    }

    uint64_t next_gap(SplitMix64& rng) {
        if (never) return ~uint64_t(0);
        if (always) return 0;
        double u;
        do u = rng.uniform(); while (u <= 0.0);
        double g = std::floor(std::log(u) / log1m);
        if (g >= 9e18) return ~uint64_t(0);
        return uint64_t(g);
    }
};

} // namespace qrm
