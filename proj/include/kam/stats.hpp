#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace kam {

/// Counter-based splitmix64 stream. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform double in [0, 1) with 53 random bits; platform independent.
    double uniform();

private:
    std::uint64_t state_;
};

/// Seed of the sub-stream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Interval {
    double lo;
    double hi;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is visited once;
/// results must not depend on the schedule.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace kam
