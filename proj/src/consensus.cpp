#include "relicert/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "relicert/rng.hpp"

namespace relicert {

int RankedConsensus::count_of(const CanonicalClass& cls) const {
  for (const auto& entry : classes) {
    if (entry.cls == cls) return entry.count;
  }
  return 0;
}

RankedConsensus consensus_from_counts(std::string item_id,
                                      std::vector<ClassCount> counts,
                                      std::uint64_t tie_seed) {
  if (counts.empty()) {
    throw std::invalid_argument("consensus requires at least one class count");
  }
  int k = 0;
  for (const auto& entry : counts) {
    if (entry.count < 1) {
      throw std::invalid_argument("class counts must be >= 1");
    }
    k += entry.count;
  }

  // Canonical pre-order (count desc, then class) makes the result independent
  // of the caller's ordering; the seeded shuffle then randomizes tie groups.
  std::sort(counts.begin(), counts.end(),
            [](const ClassCount& a, const ClassCount& b) {
              if (a.count != b.count) return a.count > b.count;
              return a.cls < b.cls;
            });
  auto gen = rng::engine(rng::derive(tie_seed, rng::Stream::tie_break));
  std::size_t group_begin = 0;
  while (group_begin < counts.size()) {
    std::size_t group_end = group_begin + 1;
    while (group_end < counts.size() &&
           counts[group_end].count == counts[group_begin].count) {
      ++group_end;
    }
    // Fisher-Yates over the tie group: uniform over permutations (Eq-style
    // "ties broken uniformly at random", but replayable from tie_seed).
    for (std::size_t i = group_end - 1; i > group_begin; --i) {
      std::size_t j =
          group_begin + rng::uniform_below(gen, i - group_begin + 1);
      std::swap(counts[i], counts[j]);
    }
    group_begin = group_end;
  }

  RankedConsensus out;
  out.item_id = std::move(item_id);
  out.k = k;
  out.classes = std::move(counts);
  out.tie_seed = tie_seed;
  out.strength = static_cast<double>(out.classes.front().count) / k;
  out.margin = out.classes.size() < 2
                   ? out.strength
                   : static_cast<double>(out.classes[0].count -
                                         out.classes[1].count) /
                         k;
  double h = 0.0;
  for (const auto& entry : out.classes) {
    const double p = static_cast<double>(entry.count) / k;
    h -= p * std::log(p);
  }
  out.entropy = std::max(0.0, h);  // single class gives exactly 0
  return out;
}

RankedConsensus aggregate(const std::vector<RawSample>& samples,
                          const Canonicalizer& canon, std::uint64_t tie_seed) {
  if (samples.empty()) {
    throw std::invalid_argument("aggregate requires a non-empty sample batch");
  }
  const std::string& item_id = samples.front().item_id;
  std::map<CanonicalClass, int> counts;
  for (const auto& sample : samples) {
    if (sample.item_id != item_id) {
      throw std::invalid_argument("aggregate received mixed item_ids: '" +
                                  item_id + "' vs '" + sample.item_id + "'");
    }
    ++counts[canon(sample.text)];
  }
  std::vector<ClassCount> list;
  list.reserve(counts.size());
  for (auto& [cls, count] : counts) list.push_back({cls, count});
  return consensus_from_counts(item_id, std::move(list), tie_seed);
}

double rank_of(const RankedConsensus& consensus, const CanonicalClass& cls) {
  for (std::size_t i = 0; i < consensus.classes.size(); ++i) {
    if (consensus.classes[i].cls == cls) return static_cast<double>(i + 1);
  }
  return kInfinite;
}

double adjusted_rand_index(const std::vector<int>& labels_a,
                           const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw std::invalid_argument("ARI requires equal-length labelings");
  }
  const std::size_t n = labels_a.size();
  if (n < 2) return 1.0;

  std::map<std::pair<int, int>, long long> joint;
  std::map<int, long long> row, col;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{labels_a[i], labels_b[i]}];
    ++row[labels_a[i]];
    ++col[labels_b[i]];
  }
  auto choose2 = [](long long m) { return m * (m - 1) / 2.0; };
  double sum_joint = 0.0, sum_row = 0.0, sum_col = 0.0;
  for (const auto& [key, count] : joint) sum_joint += choose2(count);
  for (const auto& [key, count] : row) sum_row += choose2(count);
  for (const auto& [key, count] : col) sum_col += choose2(count);
  const double total_pairs = choose2(static_cast<long long>(n));
  const double expected = sum_row * sum_col / total_pairs;
  const double maximum = 0.5 * (sum_row + sum_col);
  if (maximum == expected) return 1.0;  // both partitions degenerate-identical
  return (sum_joint - expected) / (maximum - expected);
}

StabilityReport bootstrap_stability(const std::vector<RawSample>& samples,
                                    const Canonicalizer& canon, int resamples,
                                    std::uint64_t seed) {
  if (samples.empty()) {
    throw std::invalid_argument("bootstrap_stability requires samples");
  }
  if (resamples < 1) {
    throw std::invalid_argument("bootstrap_stability requires resamples >= 1");
  }
  const std::size_t k = samples.size();

  // integer labels for the original canonical classes, one per slot
  std::vector<CanonicalClass> original(k);
  std::map<CanonicalClass, int> ids;
  std::vector<int> original_labels(k);
  for (std::size_t i = 0; i < k; ++i) {
    original[i] = canon(samples[i].text);
    auto [it, inserted] =
        ids.emplace(original[i], static_cast<int>(ids.size()));
    original_labels[i] = it->second;
  }

  StabilityReport report;
  report.resamples = resamples;
  report.min_ari = 1.0;
  double sum = 0.0;
  for (int b = 0; b < resamples; ++b) {
    auto gen = rng::engine(rng::derive(seed, rng::Stream::bootstrap,
                                       static_cast<std::uint64_t>(b)));
    // For each resampled element, compare the label it carried in the
    // original partition against its re-canonicalized label. A per-sample
    // deterministic canonicalizer reproduces the labels exactly; set-
    // dependent or stochastic ones may not, which is what ARI measures.
    std::vector<int> before(k), after(k);
    for (std::size_t slot = 0; slot < k; ++slot) {
      const std::size_t pick = rng::uniform_below(gen, k);
      before[slot] = original_labels[pick];
      const CanonicalClass cls = canon(samples[pick].text);
      auto [it, inserted] = ids.emplace(cls, static_cast<int>(ids.size()));
      after[slot] = it->second;
    }
    const double ari = adjusted_rand_index(before, after);
    sum += ari;
    report.min_ari = std::min(report.min_ari, ari);
  }
  report.mean_ari = sum / resamples;
  report.unstable = report.mean_ari < 0.8;
  return report;
}

}  // namespace relicert
