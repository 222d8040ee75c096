#include "relicert/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace relicert {

double stopping_threshold(int k, int n_classes, double delta) {
  if (k < 1) throw std::invalid_argument("stopping_threshold requires k >= 1");
  if (n_classes < 1) {
    throw std::invalid_argument("stopping_threshold requires n_classes >= 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  const double kd = static_cast<double>(k);
  return std::sqrt(2.0 * std::log(2.0 * n_classes * kd * kd / delta) / kd);
}

SequentialResult run_sequential(const std::string& item_id,
                                const SampleSource& source,
                                const Canonicalizer& canon,
                                const StoppingConfig& config,
                                std::uint64_t tie_seed) {
  if (!(config.delta > 0.0 && config.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (config.k0 < 2) throw std::invalid_argument("k0 must be >= 2");
  if (config.k_max < config.k0) {
    throw std::invalid_argument("k_max must be >= k0");
  }

  std::vector<RawSample> samples;
  samples.reserve(config.k_max);
  std::map<CanonicalClass, int> counts;
  StoppingTrace trace;
  trace.item_id = item_id;

  for (int k = 1; k <= config.k_max; ++k) {
    std::optional<std::string> text = source();
    if (!text) {
      if (k <= config.k0) {
        throw std::runtime_error("sample source exhausted before k0 for item '" +
                                 item_id + "'");
      }
      trace.stopped_at = k - 1;
      break;
    }
    samples.push_back({item_id, k - 1, *text});
    ++counts[canon(*text)];
    trace.stopped_at = k;

    if (k < config.k0) continue;

    // margin between the two largest observed counts (top frequency itself
    // when only one class has appeared)
    int top1 = 0, top2 = 0;
    for (const auto& [cls, count] : counts) {
      if (count > top1) {
        top2 = top1;
        top1 = count;
      } else if (count > top2) {
        top2 = count;
      }
    }
    const double margin = static_cast<double>(top1 - top2) / k;
    const int observed = static_cast<int>(counts.size());
    const double threshold = stopping_threshold(k, observed, config.delta);
    trace.margins.push_back({k, margin, threshold, observed});
    if (margin > threshold) {
      trace.triggered = true;
      break;
    }
  }

  SequentialResult result;
  result.trace = std::move(trace);
  result.consensus = aggregate(samples, canon, tie_seed);
  return result;
}

SavingsReport savings_report(const std::vector<StoppingTrace>& traces,
                             int k_max) {
  if (traces.empty()) {
    throw std::invalid_argument("savings_report requires traces");
  }
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  SavingsReport report;
  report.traces = static_cast<int>(traces.size());
  double sum = 0.0;
  for (const auto& trace : traces) {
    sum += trace.stopped_at;
    report.triggered += trace.triggered;
  }
  report.avg_k = sum / traces.size();
  report.savings_fraction = 1.0 - report.avg_k / k_max;
  return report;
}

}  // namespace relicert
