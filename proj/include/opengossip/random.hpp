#pragma once

#include <cstdint>
#include <random>

namespace opengossip {

/// Deterministic random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The real-valued transforms below are implemented here rather
/// than through <random> distributions, whose algorithms are left to the
/// standard library vendor; this keeps draw sequences identical across
/// toolchains as well as across runs and thread schedules.
class RandomSource {
public:
    RandomSource(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform integer on [0, n); n must be positive. Unbiased.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Exponential with the given rate (> 0).
    double exponential(double rate);

    /// Standard normal via the Marsaglia polar method.
    double standard_normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; used to derive engine seeds from (seed, stream).
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace opengossip
