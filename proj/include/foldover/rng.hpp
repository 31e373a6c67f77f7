#pragma once

#include <cstdint>

namespace foldover {

// Deterministic 64-bit generator (splitmix64). Used instead of <random>
// distributions so identical seeds give identical bytes on every platform
// and standard-library version.
struct SplitMix64 {
    std::uint64_t state = 0;
    bool has_spare = false;
    double spare = 0.0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive integer range.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next() % span);
    }

    // Standard normal via the Marsaglia polar method (no trig, so results
    // depend only on this generator, not libm sin/cos).
    double normal();
};

// Deterministically derives an independent stream from a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t tag) {
    SplitMix64 s(master ^ (tag * 0xBF58476D1CE4E5B9ULL) ^ 0x94D049BB133111EBULL);
    s.next();
    return s.next();
}

} // namespace foldover
