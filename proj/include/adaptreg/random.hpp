#pragma once

#include <cstdint>

namespace adaptreg {

/// One splitmix64 output for the given state.
constexpr std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-rollout seed: the index-th output of a splitmix64 stream started at
/// `master`. Depends only on (master, index), so adding rollouts never
/// changes the seeds of existing ones.
constexpr std::uint64_t expand_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + index * 0x9E3779B97F4A7C15ULL);
}

}  // namespace adaptreg
