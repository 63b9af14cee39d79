#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace xmod {

using Rng = std::mt19937_64;

/// Mixes a master seed with stream coordinates (splitmix64 finalizer), so
/// task t of a run always sees the same stream regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  for (auto c : coords) h = mix(h ^ mix(c));
  return h;
}

// Stream tags.
inline constexpr std::uint64_t kStreamEpisode = 1;
inline constexpr std::uint64_t kStreamTrain = 2;
inline constexpr std::uint64_t kStreamInit = 3;
inline constexpr std::uint64_t kStreamAuxiliary = 4;
inline constexpr std::uint64_t kStreamJitter = 5;
inline constexpr std::uint64_t kStreamTheorem = 6;

}  // namespace xmod
