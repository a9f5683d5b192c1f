#pragma once

#include <cstdint>
#include <random>

namespace burstlab {

/// splitmix64 finalizer; used to turn (seed, index) pairs into stream seeds
/// so per-frame / per-iteration randomness is a pure function of the inputs.
inline std::uint64_t mix_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(seed ^ mix_seed(index + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(mix_seed(seed));
}

}  // namespace burstlab
