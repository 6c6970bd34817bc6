#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace beamra {

// SplitMix64 step function (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline constexpr uint64_t splitmix64_next(uint64_t& state) noexcept {
    uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

// Stateless finalizer used for stream derivation.
inline constexpr uint64_t mix64(uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

inline constexpr uint64_t fnv1a64(std::string_view s) noexcept {
    uint64_t h = UINT64_C(0xCBF29CE484222325);
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= UINT64_C(0x100000001B3);
    }
    return h;
}

/// Deterministic random stream with labeled substream derivation.
///
/// A run is driven by one 64-bit seed; every consumer obtains its own
/// stream via `Rng::substream(seed, label, index)`. The derivation is
///     state = mix64(mix64(seed ^ fnv1a64(label)) + GOLDEN * index)
/// so streams for distinct (label, index) pairs are independent and
/// adding a new consumer never perturbs existing draw sequences.
class Rng {
public:
    explicit Rng(uint64_t state) noexcept : state_(state) {}

    static Rng substream(uint64_t seed, std::string_view label, uint64_t index = 0) noexcept {
        uint64_t x = mix64(seed ^ fnv1a64(label));
        x = mix64(x + UINT64_C(0x9E3779B97F4A7C15) * index);
        return Rng(x);
    }

    uint64_t next_u64() noexcept { return splitmix64_next(state_); }

    /// Uniform double in [0, 1), 53 significant bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection keeps the draw exactly uniform.
    uint64_t uniform_below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::uniform_below: bound must be positive");
        const uint64_t r = (0 - n) % n;  // 2^64 mod n
        uint64_t x = next_u64();
        while (x < r) x = next_u64();
        return (x - r) % n;
    }

    /// Standard normal deviate (Box-Muller). Always consumes exactly two
    /// uniforms so the stream layout does not depend on values drawn.
    double normal() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Poisson deviate via Knuth's product method; large means are split
    /// in halves (Poisson is additive) to keep exp(-lambda) in range.
    uint64_t poisson(double lambda) {
        if (!(lambda >= 0.0)) throw std::invalid_argument("Rng::poisson: mean must be non-negative");
        if (lambda == 0.0) return 0;
        if (lambda > 500.0) return poisson(0.5 * lambda) + poisson(lambda - 0.5 * lambda);
        const double limit = std::exp(-lambda);
        uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    uint64_t state_;
};

}  // namespace beamra
