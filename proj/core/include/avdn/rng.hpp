#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace avdn {

// Seeded generator with platform-independent derived distributions.
// std::uniform_real_distribution and friends are implementation-defined, so
// every draw used in generated data goes through these helpers instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller.
    double normal();

    // Derive an independent stream for a sub-task.
    Rng fork(std::uint64_t salt) { return Rng(mix64(next_u64() ^ mix64(salt))); }

    static std::uint64_t mix64(std::uint64_t x);

private:
    std::mt19937_64 engine_;
};

}  // namespace avdn
