#include "relicert/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "relicert/rng.hpp"

namespace relicert {
namespace {

void check_same_kind(const std::vector<Score>& scores) {
  for (const auto& s : scores) {
    if (s.kind != scores.front().kind) {
      throw std::invalid_argument("scores must share one kind");
    }
  }
}

std::vector<double> sorted_values(const std::vector<Score>& scores) {
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.value);
  std::sort(values.begin(), values.end());  // +inf sorts last
  return values;
}

// Coverage for one record under the certificate threshold. The set rule per
// kind; an unobserved acceptable class (infinite score) is never covered,
// even by a saturated set.
bool covered(const EvalRecord& record, ScoreKind kind, double threshold) {
  if (record.score.infinite()) return false;
  switch (kind) {
    case ScoreKind::rank:
      return record.rank_value <= threshold;
    case ScoreKind::cumprob:
      // Adaptive set keeps whole classes: the boundary class is included
      // when the previous prefix is still below the quantile.
      return record.rank_value == 1.0 || record.prefix_before < threshold;
    case ScoreKind::lac:
    case ScoreKind::aps:
      return record.score.value <= threshold;
  }
  return false;
}

int set_size(const EvalRecord& record, ScoreKind kind, double threshold) {
  const int n_classes = static_cast<int>(record.counts.size());
  if (threshold == kInfinite) return n_classes;
  switch (kind) {
    case ScoreKind::rank:
      return std::min(n_classes, static_cast<int>(threshold));
    case ScoreKind::cumprob: {
      long long prefix = 0;
      for (int r = 0; r < n_classes; ++r) {
        prefix += record.counts[r];
        if (static_cast<double>(prefix) / record.k >= threshold) return r + 1;
      }
      return n_classes;
    }
    case ScoreKind::lac: {
      int size = 0;
      for (int count : record.counts) {
        if (1.0 - static_cast<double>(count) / record.k <= threshold) ++size;
      }
      return size;
    }
    case ScoreKind::aps: {
      long long prefix_excl = 0;
      int size = 0;
      for (int count : record.counts) {
        const double boundary = (static_cast<double>(prefix_excl) +
                                 record.aps_u * static_cast<double>(count)) /
                                record.k;
        if (boundary <= threshold) {
          ++size;
        } else {
          break;
        }
        prefix_excl += count;
      }
      return size;
    }
  }
  return 0;
}

}  // namespace

std::string Rational::percent_string() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * to_double());
  return buf;
}

int conformal_k_index(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("calibration size must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  const double v = (static_cast<double>(n) + 1.0) * (1.0 - alpha);
  // ceil with a guard: representation error must not bump an exact integer
  // (e.g. (9+1)*(1-0.1) == 9) up to the next one.
  return static_cast<int>(std::ceil(v - 1e-9));
}

Certificate conformal_threshold(const std::vector<Score>& scores,
                                double alpha) {
  if (scores.empty()) {
    throw std::invalid_argument("conformal_threshold requires scores");
  }
  check_same_kind(scores);
  const int n = static_cast<int>(scores.size());
  Certificate cert;
  cert.alpha = alpha;
  cert.n = n;
  cert.k_index = conformal_k_index(n, alpha);
  cert.score_kind = scores.front().kind;
  if (cert.k_index > n) {
    cert.m_star = kInfinite;
  } else {
    cert.m_star = sorted_values(scores)[cert.k_index - 1];
  }
  return cert;
}

bool PredictionSet::contains(const CanonicalClass& cls) const {
  return std::find(classes.begin(), classes.end(), cls) != classes.end();
}

PredictionSet prediction_set(const RankedConsensus& consensus, double m_star) {
  if (!(m_star >= 1.0)) {
    throw std::invalid_argument("prediction_set requires m_star >= 1");
  }
  PredictionSet out;
  const std::size_t available = consensus.classes.size();
  const std::size_t take = m_star == kInfinite
                               ? available
                               : std::min<std::size_t>(
                                     available, static_cast<std::size_t>(m_star));
  out.classes.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.classes.push_back(consensus.classes[i].cls);
  }
  out.saturated = m_star == kInfinite ||
                  static_cast<double>(available) < m_star;
  return out;
}

PredictionSet prediction_set_adaptive(const RankedConsensus& consensus,
                                      double q_cp) {
  PredictionSet out;
  long long prefix = 0;
  for (std::size_t r = 0; r < consensus.classes.size(); ++r) {
    out.classes.push_back(consensus.classes[r].cls);
    prefix += consensus.classes[r].count;
    if (static_cast<double>(prefix) / consensus.k >= q_cp) return out;
  }
  out.saturated = true;  // cumulative mass never reached q_cp
  return out;
}

Rational reliability_level(const std::vector<Score>& rank_scores) {
  if (rank_scores.empty()) {
    throw std::invalid_argument("reliability_level requires scores");
  }
  long long count = 0;
  for (const auto& s : rank_scores) {
    if (s.kind != ScoreKind::rank) {
      throw std::invalid_argument("reliability_level is defined on rank scores");
    }
    if (s.value <= 1.0) ++count;
  }
  return {count, static_cast<long long>(rank_scores.size()) + 1};
}

double weighted_threshold(const std::vector<Score>& scores,
                          const std::vector<double>& weights, double alpha) {
  if (scores.empty()) {
    throw std::invalid_argument("weighted_threshold requires scores");
  }
  if (weights.size() != scores.size()) {
    throw std::invalid_argument("weights must match scores in length");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  check_same_kind(scores);
  double w_max = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw std::invalid_argument("weights must be strictly positive");
    }
    w_max = std::max(w_max, w);
  }

  std::vector<std::pair<double, double>> pairs;  // (score, weight)
  pairs.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    pairs.emplace_back(scores[i].value, weights[i]);
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double total = w_max;  // the test slot
  for (const auto& [value, weight] : pairs) total += weight;

  // With uniform weights this reduces to count >= ceil((n+1)(1-alpha));
  // the guard mirrors conformal_k_index's 1e-9 integer snap so the two
  // agree exactly on boundary alphas.
  double cumulative = 0.0;
  const double target = (1.0 - alpha) * total;
  const double guard = 1e-9 * total / (static_cast<double>(pairs.size()) + 1.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cumulative += pairs[i].second;
    const bool last_of_value =
        i + 1 == pairs.size() || pairs[i + 1].first != pairs[i].first;
    if (last_of_value && cumulative >= target - guard) {
      return pairs[i].first;
    }
  }
  return kInfinite;
}

WilsonInterval wilson_ci(long long successes, long long trials, double z) {
  if (trials < 1) throw std::invalid_argument("wilson_ci requires trials >= 1");
  if (successes < 0 || successes > trials) {
    throw std::invalid_argument("wilson_ci requires 0 <= successes <= trials");
  }
  if (!(z > 0.0)) throw std::invalid_argument("wilson_ci requires z > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval out;
  out.lo = std::clamp(center - half, 0.0, 1.0);
  out.hi = std::clamp(center + half, 0.0, 1.0);
  // at the boundaries the closed form collapses exactly, so do not let
  // floating point pull the endpoint inward
  if (successes == 0) out.lo = 0.0;
  if (successes == trials) out.hi = 1.0;
  return out;
}

EvalRecord make_eval_record(const RankedConsensus& consensus,
                            const AcceptabilitySpec& spec, ScoreKind kind,
                            double aps_u, bool solvable) {
  EvalRecord record;
  record.item_id = consensus.item_id;
  record.score = compute_score(kind, consensus, spec, aps_u);
  record.rank_value = score_rank(consensus, spec).value;
  if (record.rank_value != kInfinite) {
    long long prefix_excl = 0;
    const int pos = static_cast<int>(record.rank_value) - 1;
    for (int r = 0; r < pos; ++r) prefix_excl += consensus.classes[r].count;
    record.prefix_before =
        static_cast<double>(prefix_excl) / static_cast<double>(consensus.k);
  }
  record.aps_u = aps_u;
  record.solvable = solvable;
  record.strength = consensus.strength;
  record.margin = consensus.margin;
  record.entropy = consensus.entropy;
  record.counts.reserve(consensus.classes.size());
  for (const auto& entry : consensus.classes) {
    record.counts.push_back(entry.count);
  }
  record.k = consensus.k;
  return record;
}

CoverageRow evaluate(const std::vector<EvalRecord>& test_records,
                     const Certificate& certificate,
                     const std::vector<std::string>& calibration_ids) {
  if (test_records.empty()) {
    throw std::invalid_argument("evaluate requires test records");
  }
  std::set<std::string> calib(calibration_ids.begin(), calibration_ids.end());
  std::set<std::string> seen;
  for (const auto& record : test_records) {
    if (calib.count(record.item_id)) {
      throw std::invalid_argument(
          "calibration and test sets overlap on item '" + record.item_id +
          "'");
    }
    if (!seen.insert(record.item_id).second) {
      throw std::invalid_argument("duplicate test item '" + record.item_id +
                                  "'");
    }
  }

  CoverageRow row;
  row.alpha = certificate.alpha;
  row.k_index = certificate.k_index;
  row.m_star = certificate.m_star;
  row.n_test = static_cast<int>(test_records.size());
  long long covered_count = 0, mode_count = 0;
  long long solvable_count = 0, solvable_covered = 0;
  double size_sum = 0.0;
  for (const auto& record : test_records) {
    const bool hit = covered(record, certificate.score_kind,
                             certificate.m_star);
    covered_count += hit;
    if (record.rank_value == 1.0) ++mode_count;
    if (record.solvable) {
      ++solvable_count;
      solvable_covered += hit;
    }
    size_sum += set_size(record, certificate.score_kind, certificate.m_star);
  }
  row.covered = static_cast<int>(covered_count);
  row.solvable_count = static_cast<int>(solvable_count);
  row.coverage = static_cast<double>(covered_count) / row.n_test;
  row.conditional_coverage_solvable =
      solvable_count == 0
          ? 0.0
          : static_cast<double>(solvable_covered) / solvable_count;
  row.mode_accuracy = static_cast<double>(mode_count) / row.n_test;
  row.avg_set_size = size_sum / row.n_test;
  row.wilson = wilson_ci(covered_count, row.n_test);
  return row;
}

SplitStability bootstrap_splits(const std::vector<EvalRecord>& records,
                                int n_splits, double alpha,
                                std::uint64_t seed) {
  if (records.size() < 4) {
    throw std::invalid_argument(
        "bootstrap_splits requires at least 4 records for a 50/50 split");
  }
  if (n_splits < 1) {
    throw std::invalid_argument("bootstrap_splits requires n_splits >= 1");
  }
  const std::size_t half = records.size() / 2;

  std::vector<double> m_stars;
  std::vector<double> coverages;
  int infinite_count = 0;
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int split = 0; split < n_splits; ++split) {
    auto gen = rng::engine(rng::derive(seed, rng::Stream::split,
                                       static_cast<std::uint64_t>(split)));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng::uniform_below(gen, i + 1)]);
    }
    std::vector<Score> calib_scores;
    calib_scores.reserve(half);
    std::vector<EvalRecord> test;
    std::vector<std::string> calib_ids;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i < half) {
        calib_scores.push_back(records[order[i]].score);
        calib_ids.push_back(records[order[i]].item_id);
      } else {
        test.push_back(records[order[i]]);
      }
    }
    Certificate cert = conformal_threshold(calib_scores, alpha);
    if (cert.m_star == kInfinite) {
      ++infinite_count;
    } else {
      m_stars.push_back(cert.m_star);
    }
    coverages.push_back(evaluate(test, cert, calib_ids).coverage);
  }

  auto mean_std = [](const std::vector<double>& xs) {
    if (xs.empty()) return std::pair<double, double>{0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size();
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  SplitStability out;
  out.splits = n_splits;
  out.infinite_m_star = infinite_count;
  std::tie(out.m_star_mean, out.m_star_std) = mean_std(m_stars);
  std::tie(out.coverage_mean, out.coverage_std) = mean_std(coverages);
  return out;
}

}  // namespace relicert
