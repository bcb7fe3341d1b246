#pragma once

#include <cstdint>

namespace minimax_lb {

// Counter-based random stream: every draw is a pure function of
// (seed, counter), so parallel replicas are independent and any call
// sequence is reproducible without shared state.

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed ^ mix64(counter));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(counter_bits(seed, counter) >> 11) * 0x1.0p-53;
}

inline bool counter_bernoulli(std::uint64_t seed, std::uint64_t counter, double p) {
  return counter_uniform(seed, counter) < p;
}

// Derives a child seed, e.g. one stream per (cell, replica).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(seed ^ (a * 0xd1342543de82ef95ULL)) ^ (b * 0xaf251af3b0f025b5ULL));
}

}  // namespace minimax_lb
