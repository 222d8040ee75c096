#pragma once
// Deterministic hierarchical seeding. Every random quantity in a run is
// derived from the single run seed through named streams:
//
//   run seed -> item -> sample / tie-break / aps-u / split / trial
//
// so that replaying a run with the same seed reproduces every draw.

#include <cstdint>
#include <random>
#include <string_view>

namespace relicert::rng {

// Stream tags for seed derivation. Values are arbitrary but frozen:
// changing them changes every derived stream.
enum class Stream : std::uint64_t {
  item = 0x49544d,       // per-item sub-seed
  sample = 0x53414d50,   // agent sample draws
  tie_break = 0x544945,  // consensus tie-break permutation
  aps_u = 0x415053,      // APS inclusion randomizer
  split = 0x53504c54,    // calibration/test partitioning
  trial = 0x5452,        // Monte Carlo replication
  bootstrap = 0x424f4f,  // bootstrap resampling
};

// splitmix64 finalizer; good avalanche for combining seed words.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive(std::uint64_t parent, Stream stream,
                            std::uint64_t index = 0) {
  std::uint64_t h = mix(parent ^ 0x243f6a8885a308d3ULL);
  h = mix(h ^ static_cast<std::uint64_t>(stream));
  h = mix(h ^ index);
  return h;
}

inline std::mt19937_64 engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// FNV-1a: stable 64-bit string hash (std::hash is not pinned by the
// standard, and item-derived seeds must be reproducible).
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n >= 1. Rejection keeps it unbiased.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

}  // namespace relicert::rng
