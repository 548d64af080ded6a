#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ood {

// Deterministic RNG used everywhere. All transforms (uniform, normal) are
// implemented on top of the standardized mt19937_64 bit stream so that a
// given seed produces the same values on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        // 53 random mantissa bits
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    // standard normal via Box-Muller (no cached spare, keeps state minimal)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// splitmix64 mix; used to derive independent named substreams from one seed
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace ood
