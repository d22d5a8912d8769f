#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hawkesmm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// The helpers below are written out instead of using <random> distributions
// so that streams are reproducible across standard library implementations.

/// Uniform on [0, 1) with 53 random bits.
[[nodiscard]] inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential variate with the given rate (> 0).
[[nodiscard]] inline double exponential(Rng& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

[[nodiscard]] inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

/// Number of failures before the first success, success probability p in (0, 1].
[[nodiscard]] inline long geometric_failures(Rng& rng, double p) {
    if (p >= 1.0) {
        return 0;
    }
    const double u = uniform01(rng);
    return static_cast<long>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

/// Standard normal via Box-Muller (one variate per call).
[[nodiscard]] inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace hawkesmm
