#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace audscope {

// Deterministic PRNG used everywhere instead of <random>: the standard
// distributions are implementation-defined, which would break bit-identical
// worlds across toolchains.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    std::uint64_t s = seed ^ (value + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::string_view text) {
    std::uint64_t h = seed;
    for (unsigned char c : text) h = hash_combine(h, static_cast<std::uint64_t>(c) + 0x100);
    return h;
}

/// Counter-based deterministic random stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in (0, 1).
    double uniform01() {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {   // inclusive bounds
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Multiplicative log-normal factor with unit mean.
    double lognormal_factor(double sigma) {
        if (sigma <= 0.0) return 1.0;
        return std::exp(sigma * normal() - 0.5 * sigma * sigma);
    }

    /// Binomial draw. Exact Bernoulli counting for small n, normal
    /// approximation (rounded, clamped) for large n.
    std::int64_t binomial(std::int64_t n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (n <= 1024) {
            std::int64_t k = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                if (uniform01() < p) ++k;
            }
            return k;
        }
        double mean = static_cast<double>(n) * p;
        double sd = std::sqrt(mean * (1.0 - p));
        double draw = std::round(normal(mean, sd));
        if (draw < 0.0) draw = 0.0;
        if (draw > static_cast<double>(n)) draw = static_cast<double>(n);
        return static_cast<std::int64_t>(draw);
    }

private:
    std::uint64_t state_;
};

}  // namespace audscope
