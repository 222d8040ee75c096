#pragma once
// Certified early stopping: keep sampling one query until the empirical
// margin between the top two classes clears a Hoeffding threshold, or the
// budget is exhausted. The rule never reads acceptability labels, so
// stopped consensuses stay exchangeable for conformal calibration.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relicert/consensus.hpp"

namespace relicert {

struct StoppingConfig {
  double delta = 0.05;  // mode misidentification budget, in (0, 1)
  int k0 = 3;           // first step at which the rule is consulted
  int k_max = 20;       // sample budget
};

struct StepMargin {
  int k = 0;
  double margin = 0.0;
  double threshold = 0.0;
  int observed_classes = 0;
};

struct StoppingTrace {
  std::string item_id;
  int stopped_at = 0;
  bool triggered = false;  // false = ran to k_max without clearing the bound
  std::vector<StepMargin> margins;  // one entry per step k in [k0, stopped_at]
};

// sqrt(2 ln(2 * n_classes * k^2 / delta) / k). Values above 1 mean no
// empirical margin can clear the bound at that k.
double stopping_threshold(int k, int n_classes, double delta);

// Pulls up to k_max sample texts; nullopt means the source is exhausted.
using SampleSource = std::function<std::optional<std::string>()>;

struct SequentialResult {
  RankedConsensus consensus;
  StoppingTrace trace;
};

// Consumes samples one at a time; after each k >= k0 stops when the margin
// between the top two observed frequencies exceeds stopping_threshold(k,
// observed classes, delta). With a single observed class the margin is that
// class's frequency. Throws if the source dries up before k0.
SequentialResult run_sequential(const std::string& item_id,
                                const SampleSource& source,
                                const Canonicalizer& canon,
                                const StoppingConfig& config,
                                std::uint64_t tie_seed);

struct SavingsReport {
  double avg_k = 0.0;
  double savings_fraction = 0.0;  // 1 - avg_k / k_max
  int traces = 0;
  int triggered = 0;
};

SavingsReport savings_report(const std::vector<StoppingTrace>& traces,
                             int k_max);

}  // namespace relicert
