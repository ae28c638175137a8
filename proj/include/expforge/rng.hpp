#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace expforge {

/// Seeded random source with platform-independent draws.
///
/// std::mt19937_64 has a fully specified output sequence; the standard
/// distributions do not, so every draw is derived from raw engine output here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n);

    /// True with probability p. Consumes no randomness when p >= 1 or p <= 0.
    bool bernoulli(double p);

    /// Independent stream named by `name`, derived from this stream's seed.
    Rng substream(std::string_view name) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace expforge
