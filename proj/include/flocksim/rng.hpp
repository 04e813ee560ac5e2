#pragma once

#include <cstdint>

namespace flocksim {

/// Counter-based 64-bit generator (splitmix64). The whole stream is a pure
/// function of the seed, so scenarios built from it are reproducible across
/// platforms and languages. Scenario files record the algorithm name
/// ("splitmix64") next to the seed.
class SplitMix64 {
  public:
    static constexpr const char* kAlgorithmName = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1); the zero outcome (probability 2^-53) is redrawn.
    double uniform01_positive() {
        for (;;) {
            const double u = uniform01();
            if (u > 0.0) return u;
        }
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in {0, ..., count-1} via floor(u * count).
    int uniform_index(int count) {
        const int k = static_cast<int>(uniform01() * static_cast<double>(count));
        return k >= count ? count - 1 : k;
    }

  private:
    std::uint64_t state_;
};

} // namespace flocksim
