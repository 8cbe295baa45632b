#pragma once

#include <cstdint>
#include <random>

namespace fdpair {

using Rng = std::mt19937_64;

/// Purpose tags keep independent consumers of one drop from sharing a stream.
enum class StreamPurpose : std::uint32_t {
  Geometry = 1,
  RandomPairing = 2,
  Verify = 3,
};

/// Deterministic RNG stream for (seed, index, purpose). Streams for different
/// indices are statistically independent and identical across runs.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return Rng(seq);
}

}  // namespace fdpair
