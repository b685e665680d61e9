#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace schieber {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Circularly-symmetric complex Gaussian with E|x|^2 = variance.
inline std::complex<double> complex_normal(Rng& rng, double variance) {
    if (!(variance > 0.0)) return {0.0, 0.0};
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace schieber
