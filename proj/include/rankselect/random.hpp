#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace rankselect {

using Rng = std::mt19937_64;

/// Purpose tags keep streams for different draws inside one replicate apart.
enum class StreamTag : std::uint64_t {
  kTailSpectrum = 1,
  kData = 2,
  kPermutation = 3,
  kLoadings = 4,
};

/// Deterministic stream derived from (seed, index, tag) through a splitmix64
/// mix, so that stream k is the same no matter which thread consumes it.
Rng make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag);

/// Worker count from RANKSELECT_THREADS (0 or unset = hardware concurrency).
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. If any
/// call throws, the exception from the lowest failing index is rethrown after
/// all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rankselect
