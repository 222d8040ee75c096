#pragma once
// Ranked consensus over K samples of one query: canonicalize, count,
// order by frequency with seeded uniform tie-breaking, and expose the
// diagnostics (strength, margin, entropy) used downstream.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "relicert/canonical.hpp"

namespace relicert {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

struct RawSample {
  std::string item_id;
  int index = 0;  // sample index within the item, >= 0
  std::string text;
};

struct AcceptabilitySpec {
  std::string item_id;
  std::vector<CanonicalClass> acceptable;  // non-empty
};

struct ClassCount {
  CanonicalClass cls;
  int count = 0;
};

struct RankedConsensus {
  std::string item_id;
  int k = 0;  // number of samples aggregated
  std::vector<ClassCount> classes;  // sorted by count desc, ties seeded-random
  std::uint64_t tie_seed = 0;
  double strength = 0.0;  // top-class frequency, in (0, 1]
  double margin = 0.0;    // gap between top two frequencies (= strength if one class)
  double entropy = 0.0;   // -sum p ln p, in [0, ln k]

  int count_of(const CanonicalClass& cls) const;
};

// Counts per class in canonical order (key-sorted), then applies the seeded
// tie-break permutation. Both aggregate() and the synthetic fast path go
// through here so ranking semantics cannot diverge.
RankedConsensus consensus_from_counts(std::string item_id,
                                      std::vector<ClassCount> counts,
                                      std::uint64_t tie_seed);

// Aggregates K raw samples. Requires a non-empty batch with one item_id;
// deterministic in (samples, tie_seed) and invariant to sample order.
RankedConsensus aggregate(const std::vector<RawSample>& samples,
                          const Canonicalizer& canon, std::uint64_t tie_seed);

// 1-based position of the class in the ranking; kInfinite when absent.
double rank_of(const RankedConsensus& consensus, const CanonicalClass& cls);

// Adjusted Rand index between two label partitions of the same slots.
// Returns 1.0 in the degenerate case where expected and maximum agree.
double adjusted_rand_index(const std::vector<int>& labels_a,
                           const std::vector<int>& labels_b);

struct StabilityReport {
  double mean_ari = 0.0;
  double min_ari = 0.0;
  int resamples = 0;
  bool unstable = false;  // mean ARI < 0.8
};

// Bootstrap diagnostic: resample the K answers with replacement B times,
// re-canonicalize, and compare the slot-wise class partition against the
// original one via ARI.
StabilityReport bootstrap_stability(const std::vector<RawSample>& samples,
                                    const Canonicalizer& canon, int resamples,
                                    std::uint64_t seed);

}  // namespace relicert
