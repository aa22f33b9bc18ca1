#pragma once

#include <cstdint>
#include <random>

namespace moneygas {

using Rng = std::mt19937_64;

/// Stable 64-bit mix of a master seed and a stream index (splitmix64 finalizer).
/// Used to derive replicate and sweep-point streams.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) via multiply-shift (bias at most n / 2^64).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

}  // namespace moneygas
