#pragma once
// Split-conformal calibration: threshold selection, prediction sets,
// reliability level, weighted thresholds, and coverage evaluation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relicert/consensus.hpp"
#include "relicert/scores.hpp"

namespace relicert {

// Exact ratio used for the reliability level (count / (n+1)).
struct Rational {
  long long num = 0;
  long long den = 1;

  double to_double() const { return static_cast<double>(num) / den; }
  // One-decimal percentage, e.g. 474/501 -> "94.6".
  std::string percent_string() const;
};

struct Certificate {
  double alpha = 0.0;
  int n = 0;                 // calibration set size
  int k_index = 0;           // ceil((n+1)(1-alpha))
  double m_star = kInfinite; // k-th smallest calibration score
  Rational reliability_level;  // fraction of rank scores <= 1 over n+1
  ScoreKind score_kind = ScoreKind::rank;
  std::uint64_t seed = 0;
  std::string schema_version;
  std::string config_digest;  // deterministic provenance, no wall-clock
};

// k = ceil((n+1)(1-alpha)), robust to floating-point representation of
// alpha: values within 1e-9 of an integer are treated as that integer.
int conformal_k_index(int n, double alpha);

// Sorts scores ascending (kInfinite last) and takes the k-th smallest;
// m_star = kInfinite when k exceeds n. Scores must share one kind.
Certificate conformal_threshold(const std::vector<Score>& scores,
                                double alpha);

struct PredictionSet {
  std::vector<CanonicalClass> classes;  // in rank order
  bool saturated = false;  // threshold exceeded the observed class count

  bool contains(const CanonicalClass& cls) const;
};

// Top-min(m_star, |classes|) classes; m_star = kInfinite returns every
// observed class and marks the set saturated.
PredictionSet prediction_set(const RankedConsensus& consensus, double m_star);

// Smallest prefix of ranked classes whose cumulative frequency reaches
// q_cp (never empty).
PredictionSet prediction_set_adaptive(const RankedConsensus& consensus,
                                      double q_cp);

// |{i : s_i <= 1}| / (n+1) over rank scores, kept exact.
Rational reliability_level(const std::vector<Score>& rank_scores);

// Weighted conformal threshold: smallest score s with
//   sum_{i: s_i <= s} w_i / (sum_i w_i + w_test) >= 1 - alpha,
// where the unknown test point conservatively carries w_test = max(w_i).
// Uniform weights reproduce conformal_threshold exactly.
double weighted_threshold(const std::vector<Score>& scores,
                          const std::vector<double>& weights, double alpha);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval; z defaults to the two-sided 95% critical value.
WilsonInterval wilson_ci(long long successes, long long trials,
                         double z = 1.959964);

// Per-item evaluation record: the configured score plus the auxiliary
// values needed to reconstruct coverage and set sizes for every kind.
struct EvalRecord {
  std::string item_id;
  Score score;
  double rank_value = kInfinite;   // rank score value for the same item
  double prefix_before = 0.0;      // mass strictly above the matched class
  double aps_u = 1.0;              // per-item randomizer used for aps
  bool solvable = false;           // acceptable class observed at K_max
  // consensus digest
  double strength = 0.0;
  double margin = 0.0;
  double entropy = 0.0;
  std::vector<int> counts;  // ranked class counts, descending order
  int k = 0;
};

// Builds the record for one item: configured score plus the rank/prefix
// auxiliaries and the consensus digest. `solvable` is whether an acceptable
// class was observed within the full K_max budget (callers decide).
EvalRecord make_eval_record(const RankedConsensus& consensus,
                            const AcceptabilitySpec& spec, ScoreKind kind,
                            double aps_u, bool solvable);

struct CoverageRow {
  double alpha = 0.0;
  int k_index = 0;
  double m_star = kInfinite;
  double coverage = 0.0;
  double conditional_coverage_solvable = 0.0;
  double mode_accuracy = 0.0;
  double avg_set_size = 0.0;
  WilsonInterval wilson;
  int n_test = 0;
  int covered = 0;
  int solvable_count = 0;
};

struct CoverageReport {
  Rational reliability_level;
  std::vector<CoverageRow> rows;  // one per alpha in the sweep
};

// Coverage, conditional coverage on solvable items, mode accuracy, average
// set size, and a Wilson CI on coverage. Calibration and test item_ids must
// be disjoint (exchangeability hygiene) or an input error is thrown.
CoverageRow evaluate(const std::vector<EvalRecord>& test_records,
                     const Certificate& certificate,
                     const std::vector<std::string>& calibration_ids);

struct SplitStability {
  double m_star_mean = 0.0;  // over splits with finite m_star
  double m_star_std = 0.0;
  int infinite_m_star = 0;
  double coverage_mean = 0.0;
  double coverage_std = 0.0;
  int splits = 0;
};

// Re-partition the records into calibration/test halves n_splits times and
// summarize the stability of m_star and coverage.
SplitStability bootstrap_splits(const std::vector<EvalRecord>& records,
                                int n_splits, double alpha,
                                std::uint64_t seed);

}  // namespace relicert
