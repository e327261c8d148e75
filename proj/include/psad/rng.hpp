#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psad {

// Stream tags used to derive stage-level seeds from one root seed.
namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kTrain = 2;
inline constexpr std::uint64_t kAblation = 3;
inline constexpr std::uint64_t kJitter = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kAnomaly = 6;
} // namespace streams

/// Deterministic RNG with portable distributions. std::mt19937_64 has a
/// standard-defined output sequence; the distribution helpers below avoid
/// the implementation-defined std::*_distribution types so that identical
/// seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], both ends inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p = 0.5) { return uniform() < p; }

    /// Standard normal via Box-Muller (explicit formula, portable).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Derives an independent child seed from (root, stream).
    static std::uint64_t derive(std::uint64_t root, std::uint64_t stream) {
        std::uint64_t state = root ^ (0x9E3779B97F4A7C15ull * (stream + 1));
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace psad
