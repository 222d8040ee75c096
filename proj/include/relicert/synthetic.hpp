#pragma once
// Ground-truth synthetic agents (multinomial distributions with a known
// acceptable class) and the validation experiments built on them: coverage
// sweeps, mode-error decay, bias regimes, canonicalization amplification,
// the six-method bias-variance table, set-size curves, and the
// entropy/set-size correlation. Every experiment emits plot-ready series.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relicert/calibrate.hpp"
#include "relicert/consensus.hpp"

namespace relicert {

struct SyntheticAgent {
  std::vector<CanonicalClass> classes;
  std::vector<double> probs;  // positive, sum to 1 within 1e-12
  int acceptable_index = 0;
  std::uint64_t seed = 0;

  void validate() const;
  double p_star() const { return probs[acceptable_index]; }
};

// Agent with acceptable mass p_star and the remainder split over wrong
// classes in the given proportions (default 0.5/0.3/0.2).
SyntheticAgent make_agent(double p_star,
                          std::vector<double> wrong_fractions = {0.5, 0.3,
                                                                 0.2},
                          std::uint64_t seed = 0);

// K i.i.d. draws serialized as the class keys, one RawSample per draw.
std::vector<RawSample> sample_agent(const SyntheticAgent& agent, int k,
                                    std::uint64_t seed,
                                    const std::string& item_id = "item");

// Multinomial counts via a chain of binomials; identical distribution to
// counting sample_agent draws, at O(#classes) cost per item.
std::vector<int> multinomial_counts(const std::vector<double>& probs, int k,
                                    std::mt19937_64& gen);

// Uniform pick among tied argmax counts; matches the consensus tie-break in
// distribution (property-tested against consensus_from_counts).
int mode_index_from_counts(const std::vector<int>& counts,
                           std::mt19937_64& tie_gen);

struct SimulatedJudge {
  double bias = 0.05;      // additive systematic bias b_J
  double noise_sd = 0.05;  // zero-mean scoring noise

  // clamp(accept + bias + noise, 0, 1)
  double score(bool accepted, std::mt19937_64& gen) const;
};

// --- experiments ------------------------------------------------------

struct ModeErrorPoint {
  int k = 0;
  double error = 0.0;
  double hoeffding_bound = 0.0;  // exp(-2k(p - 1/2)^2), p > 1/2 only
  double sigma = 0.0;            // MC standard error of `error`
};

// Empirical P(mode != acceptable class) per K with the exponential bound
// overlaid. Requires p_star > 1/2 for the bound to be meaningful.
std::vector<ModeErrorPoint> mode_error_sweep(const SyntheticAgent& agent,
                                             const std::vector<int>& ks,
                                             int trials, std::uint64_t seed);

struct BiasPoint {
  int k = 0;
  double mode_correct_rate = 0.0;
  double bias = 0.0;  // rate - p_star; tends to -p_star when the mode is wrong
  double sigma = 0.0;
};

std::vector<BiasPoint> mode_bias_regimes(const SyntheticAgent& agent,
                                         const std::vector<int>& ks,
                                         int trials, std::uint64_t seed);

// Fragmented surface forms: several raw variants share one canonical class.
struct FragmentedAgent {
  struct Variant {
    std::string raw_text;
    double prob = 0.0;
    std::string canonical_key;
  };
  std::vector<Variant> variants;
  std::string acceptable_key;  // canonical key of the acceptable class

  void validate() const;
};

// Six 0.10-mass acceptable variants against one 0.40 wrong class.
FragmentedAgent make_fragmented_agent();

struct AmplificationPoint {
  int k = 0;
  double canonical_error = 0.0;
  double raw_error = 0.0;
  double sigma = 0.0;
};

// Paired mode error with and without canonical merging, same draws.
std::vector<AmplificationPoint> canonicalization_amplification(
    const FragmentedAgent& agent, const std::vector<int>& ks, int trials,
    std::uint64_t seed);

struct DecompositionRow {
  std::string method;
  double bias_sq = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  std::optional<double> coverage;  // conformal rows only
  double mse_sigma = 0.0;          // MC standard error of the MSE estimate
};

struct MixtureConfig {
  double easy_p = 0.75;
  std::vector<double> easy_wrong_fractions = {0.4, 0.4, 0.2};
  double hard_p = 0.35;
  std::vector<double> hard_wrong_fractions = {1.0};  // one dominant wrong class
  double easy_weight = 0.5;
  SimulatedJudge judge;
  int k = 10;
  double alpha = 0.1;
  int n_cal = 200;
  int n_test = 500;
  int point_trials = 100000;  // single/judge/mode trials
  int conformal_reps = 200;   // fresh calibration/test replications
};

// Single-sample, simulated judge, self-consistency mode, and the three
// conformal scores on the easy/hard mixture. Point methods decompose
// against the per-query p_star; conformal rows decompose the empirical
// coverage against the 1-alpha target across replications.
std::vector<DecompositionRow> bias_variance_table(const MixtureConfig& config,
                                                  std::uint64_t seed);

struct SetSizePoint {
  double p_star = 0.0;
  double m_star_mean = 0.0;  // over runs with finite m_star
  int infinite_runs = 0;
  std::vector<double> m_stars;  // per run; kInfinite allowed
};

struct SetSizeCurve {
  std::vector<SetSizePoint> points;
  double monotone_fraction = 0.0;  // runs whose whole curve is non-increasing
};

// m_star as a function of agent quality. Runs are coupled: the same
// per-(item, sample) uniforms drive every grid point, so within one run the
// curve is non-increasing whenever scores are.
SetSizeCurve setsize_vs_quality(const std::vector<double>& p_grid, int n_cal,
                                double alpha, int k, int runs,
                                std::uint64_t seed);

struct EntropyCorrelation {
  double pearson_r = 0.0;
  bool degenerate = false;  // zero variance in entropy or set size
  std::vector<std::pair<double, double>> points;  // (entropy, set size)
};

// Heterogeneous-difficulty population; adaptive sets from the cumprob
// quantile; Pearson correlation between per-item entropy and set size.
EntropyCorrelation entropy_setsize_correlation(int n_cal, int n_test,
                                               double alpha, int k,
                                               std::uint64_t seed);

struct CoverageCell {
  double p_star = 0.0;
  double alpha = 0.0;
  double mean_coverage = 0.0;
  double sigma = 0.0;  // standard error of the mean over replications
  double target = 0.0;           // 1 - alpha
  double upper = 0.0;            // 1 - alpha + 1/(n_cal+1)
};

// Coverage sweep over (p_star, alpha) cells; `replications` fresh
// calibration/test draws per cell, scores shared across the alpha grid.
// With score_event_coverage the covered event is s_test <= threshold (the
// quantity the exact two-sided band bounds); otherwise it is prediction-set
// membership, which can exceed the band because sets round up to whole
// classes and are never empty.
std::vector<CoverageCell> coverage_validation(
    const std::vector<double>& p_stars, const std::vector<double>& alphas,
    ScoreKind kind, int k, int n_cal, int n_test, int replications,
    std::uint64_t seed, bool score_event_coverage = false);

}  // namespace relicert
