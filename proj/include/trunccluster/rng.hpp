// Portable random streams. The standard <random> distributions are
// implementation-defined, so every draw here is built directly on the raw
// 64-bit output of std::mt19937_64 or SplitMix64.

#pragma once

#include <cstdint>
#include <random>

namespace trunccluster {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent substream seed for (seed, stream) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Bias-free integer in [0, bound) from a 64-bit generator, by rejection.
template <typename Gen>
std::uint64_t bounded_draw(Gen& next, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % bound;
}

/// Lightweight counter-style generator for per-point draws inside parallel loops.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::uint64_t index(std::uint64_t bound) { return bounded_draw(*this, bound); }

private:
    std::uint64_t state_;
};

/// Sequential stream for seeding, initialization and data generation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t index(std::uint64_t bound) {
        auto next = [this] { return engine_(); };
        return bounded_draw(next, bound);
    }

    /// Standard normal via the Marsaglia polar transform; the spare value is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace trunccluster
