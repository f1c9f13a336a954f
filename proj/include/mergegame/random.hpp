#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace mergegame {

// All stochastic code draws from mt19937_64 through the helpers below instead
// of <random> distributions, whose output sequences are implementation
// defined. This keeps seeded runs byte-identical across standard libraries.
using RandomStream = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent stream seed for a named actor within a seeded scenario.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    return mix64(seed ^ fnv1a64(name));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ mix64(a)) ^ mix64(b));
}

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(RandomStream& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; always consumes exactly two draws.
inline double normal_sample(RandomStream& rng, double mean, double stddev) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(6.283185307179586476925286766559 * u2);
}

// Inverse-CDF sample over a probability vector; consumes one draw.
inline std::size_t sample_index(RandomStream& rng, std::span<const double> probs) {
    const double u = uniform01(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

}  // namespace mergegame
