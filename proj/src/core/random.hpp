#pragma once

// Counter-based normal variates: the value for (seed, stream, index) does not
// depend on how many other values were drawn before it, so draws can be
// generated in any order or in parallel with identical results.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bbgp::random {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

/// Uniform in the open interval (0, 1) with 53 random bits.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return (static_cast<double>(hash(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; index 2k and 2k+1 share one uniform pair.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(seed, stream, 2 * pair);
    const double u2 = uniform(seed, stream, 2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

}  // namespace bbgp::random
