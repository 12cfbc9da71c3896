#pragma once

#include <cstdint>

namespace rectify {

// SplitMix64 (Steele, Lea, Flood 2014): tiny, well-documented, and exactly
// reproducible across platforms and languages, which the seeded fixtures
// rely on. Distribution mapping is spelled out here rather than delegated
// to <random>, whose distributions are implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 bits of precision.
    double next_double() {
        return double(next() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound). Modulo bias is negligible for bound << 2^64.
    std::uint64_t next_below(std::uint64_t bound) {
        return bound == 0 ? 0 : next() % bound;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

// Derives an independent stream seed for item `index` of a run.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(seed ^ (0xD1B54A32D192ED03ULL * (index + 1))).next();
}

}  // namespace rectify
