#include "relicert/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "relicert/rng.hpp"
#include "relicert/scores.hpp"

namespace relicert {
namespace {

constexpr double kProbTolerance = 1e-12;

double standard_error(double p_hat, int trials) {
  return std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) / trials);
}

// Streaming mean/variance (biased, 1/n) per stratum of a mixture.
struct Moments {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n == 0 ? 0.0 : m2 / n; }
};

}  // namespace

void SyntheticAgent::validate() const {
  if (classes.size() != probs.size() || classes.empty()) {
    throw std::invalid_argument("agent classes/probs mismatch");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw std::invalid_argument("probabilities must be > 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbTolerance) {
    throw std::invalid_argument("probabilities must sum to 1");
  }
  if (acceptable_index < 0 ||
      acceptable_index >= static_cast<int>(classes.size())) {
    throw std::invalid_argument("acceptable_index out of range");
  }
}

SyntheticAgent make_agent(double p_star, std::vector<double> wrong_fractions,
                          std::uint64_t seed) {
  if (!(p_star > 0.0 && p_star <= 1.0)) {
    throw std::invalid_argument("p_star must lie in (0, 1]");
  }
  SyntheticAgent agent;
  agent.seed = seed;
  agent.classes.push_back({"c0", CanonKind::verbatim});
  agent.probs.push_back(p_star);
  agent.acceptable_index = 0;
  if (p_star < 1.0) {
    double frac_sum = 0.0;
    for (double f : wrong_fractions) frac_sum += f;
    if (!(frac_sum > 0.0)) {
      throw std::invalid_argument("wrong_fractions must have positive mass");
    }
    // make the probabilities sum to exactly 1.0: last class takes the slack
    double assigned = 0.0;
    for (std::size_t i = 0; i < wrong_fractions.size(); ++i) {
      agent.classes.push_back({"w" + std::to_string(i), CanonKind::verbatim});
      double p;
      if (i + 1 == wrong_fractions.size()) {
        p = (1.0 - p_star) - assigned;
      } else {
        p = (1.0 - p_star) * (wrong_fractions[i] / frac_sum);
        assigned += p;
      }
      agent.probs.push_back(p);
    }
  }
  agent.validate();
  return agent;
}

std::vector<int> multinomial_counts(const std::vector<double>& probs, int k,
                                    std::mt19937_64& gen) {
  std::vector<int> counts(probs.size(), 0);
  int remaining = k;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    const double p = std::clamp(probs[i] / mass, 0.0, 1.0);
    std::binomial_distribution<int> bin(remaining, p);
    const int draw = bin(gen);
    counts[i] = draw;
    remaining -= draw;
    mass -= probs[i];
  }
  if (!probs.empty()) counts.back() += remaining;
  return counts;
}

std::vector<RawSample> sample_agent(const SyntheticAgent& agent, int k,
                                    std::uint64_t seed,
                                    const std::string& item_id) {
  agent.validate();
  if (k < 1) throw std::invalid_argument("sample_agent requires K >= 1");
  auto gen = rng::engine(rng::derive(seed, rng::Stream::sample, agent.seed));
  std::vector<double> cumulative(agent.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < agent.probs.size(); ++i) {
    acc += agent.probs[i];
    cumulative[i] = acc;
  }
  std::vector<RawSample> samples;
  samples.reserve(k);
  for (int i = 0; i < k; ++i) {
    const double u = rng::uniform01(gen);
    std::size_t idx =
        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin();
    if (idx >= agent.classes.size()) idx = agent.classes.size() - 1;
    samples.push_back({item_id, i, agent.classes[idx].key});
  }
  return samples;
}

int mode_index_from_counts(const std::vector<int>& counts,
                           std::mt19937_64& tie_gen) {
  int best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = static_cast<int>(i);
  }
  int ties = 0;
  int pick = best;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == counts[best]) {
      ++ties;
      // reservoir pick: uniform among tied argmax
      if (rng::uniform_below(tie_gen, ties) == 0) pick = static_cast<int>(i);
    }
  }
  return pick;
}

double SimulatedJudge::score(bool accepted, std::mt19937_64& gen) const {
  double value = (accepted ? 1.0 : 0.0) + bias;
  if (noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sd);
    value += noise(gen);
  }
  return std::clamp(value, 0.0, 1.0);
}

std::vector<ModeErrorPoint> mode_error_sweep(const SyntheticAgent& agent,
                                             const std::vector<int>& ks,
                                             int trials, std::uint64_t seed) {
  agent.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const double p = agent.p_star();
  std::vector<ModeErrorPoint> out;
  out.reserve(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const int k = ks[ki];
    auto gen = rng::engine(rng::derive(seed, rng::Stream::trial, ki));
    long long wrong = 0;
    for (int t = 0; t < trials; ++t) {
      const std::vector<int> counts = multinomial_counts(agent.probs, k, gen);
      wrong += mode_index_from_counts(counts, gen) != agent.acceptable_index;
    }
    ModeErrorPoint point;
    point.k = k;
    point.error = static_cast<double>(wrong) / trials;
    point.hoeffding_bound =
        p > 0.5 ? std::exp(-2.0 * k * (p - 0.5) * (p - 0.5)) : 1.0;
    point.sigma = standard_error(point.error, trials);
    out.push_back(point);
  }
  return out;
}

std::vector<BiasPoint> mode_bias_regimes(const SyntheticAgent& agent,
                                         const std::vector<int>& ks,
                                         int trials, std::uint64_t seed) {
  agent.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<BiasPoint> out;
  out.reserve(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const int k = ks[ki];
    auto gen = rng::engine(rng::derive(seed, rng::Stream::trial, ki ^ 0xb1a5));
    long long correct = 0;
    for (int t = 0; t < trials; ++t) {
      const std::vector<int> counts = multinomial_counts(agent.probs, k, gen);
      correct += mode_index_from_counts(counts, gen) == agent.acceptable_index;
    }
    BiasPoint point;
    point.k = k;
    point.mode_correct_rate = static_cast<double>(correct) / trials;
    point.bias = point.mode_correct_rate - agent.p_star();
    point.sigma = standard_error(point.mode_correct_rate, trials);
    out.push_back(point);
  }
  return out;
}

void FragmentedAgent::validate() const {
  if (variants.empty()) throw std::invalid_argument("variants required");
  double sum = 0.0;
  bool acceptable_seen = false;
  for (const auto& v : variants) {
    if (!(v.prob > 0.0)) throw std::invalid_argument("variant prob must be > 0");
    sum += v.prob;
    acceptable_seen |= v.canonical_key == acceptable_key;
  }
  if (std::abs(sum - 1.0) > kProbTolerance) {
    throw std::invalid_argument("variant probabilities must sum to 1");
  }
  if (!acceptable_seen) {
    throw std::invalid_argument("no variant maps to the acceptable key");
  }
}

FragmentedAgent make_fragmented_agent() {
  FragmentedAgent agent;
  for (int i = 0; i < 6; ++i) {
    agent.variants.push_back(
        {"answer variant " + std::to_string(i), 0.1, "answer"});
  }
  agent.variants.push_back({"wrong", 0.4, "wrong"});
  agent.acceptable_key = "answer";
  agent.validate();
  return agent;
}

std::vector<AmplificationPoint> canonicalization_amplification(
    const FragmentedAgent& agent, const std::vector<int>& ks, int trials,
    std::uint64_t seed) {
  agent.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<double> probs;
  probs.reserve(agent.variants.size());
  for (const auto& v : agent.variants) probs.push_back(v.prob);

  // canonical grouping of variant indices
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < agent.variants.size(); ++i) {
    groups[agent.variants[i].canonical_key].push_back(static_cast<int>(i));
  }

  std::vector<AmplificationPoint> out;
  out.reserve(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const int k = ks[ki];
    auto gen = rng::engine(rng::derive(seed, rng::Stream::trial, ki ^ 0xca11));
    long long raw_wrong = 0, canon_wrong = 0;
    for (int t = 0; t < trials; ++t) {
      const std::vector<int> raw_counts = multinomial_counts(probs, k, gen);
      const int raw_mode = mode_index_from_counts(raw_counts, gen);
      raw_wrong +=
          agent.variants[raw_mode].canonical_key != agent.acceptable_key;

      std::vector<int> canon_counts;
      std::vector<const std::string*> canon_keys;
      canon_counts.reserve(groups.size());
      for (const auto& [key, members] : groups) {
        int group_count = 0;
        for (int member : members) group_count += raw_counts[member];
        canon_counts.push_back(group_count);
        canon_keys.push_back(&key);
      }
      const int canon_mode = mode_index_from_counts(canon_counts, gen);
      canon_wrong += *canon_keys[canon_mode] != agent.acceptable_key;
    }
    AmplificationPoint point;
    point.k = k;
    point.raw_error = static_cast<double>(raw_wrong) / trials;
    point.canonical_error = static_cast<double>(canon_wrong) / trials;
    point.sigma = standard_error(point.canonical_error, trials) +
                  standard_error(point.raw_error, trials);
    out.push_back(point);
  }
  return out;
}

namespace {

struct MixtureItem {
  bool easy = false;
  const SyntheticAgent* agent = nullptr;
};

// One item's eval record: draw counts, rank via the shared consensus path,
// score per kind.
EvalRecord mixture_record(const SyntheticAgent& agent, int k, ScoreKind kind,
                          std::uint64_t item_seed, std::mt19937_64& gen) {
  std::vector<int> counts = multinomial_counts(agent.probs, k, gen);
  std::vector<ClassCount> observed;
  AcceptabilitySpec spec;
  spec.item_id = "syn";
  spec.acceptable = {agent.classes[agent.acceptable_index]};
  bool any = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      observed.push_back({agent.classes[i], counts[i]});
      any = true;
    }
  }
  if (!any) throw std::logic_error("multinomial returned zero total");
  RankedConsensus consensus =
      consensus_from_counts("syn", std::move(observed), item_seed);
  const bool solvable =
      counts[agent.acceptable_index] > 0;  // observed within this budget
  const double u =
      rng::uniform01(gen);  // APS randomizer, consumed for every kind
  return make_eval_record(consensus, spec, kind, u, solvable);
}

}  // namespace

std::vector<DecompositionRow> bias_variance_table(const MixtureConfig& config,
                                                  std::uint64_t seed) {
  const SyntheticAgent easy =
      make_agent(config.easy_p, config.easy_wrong_fractions);
  const SyntheticAgent hard =
      make_agent(config.hard_p, config.hard_wrong_fractions);

  std::vector<DecompositionRow> rows;

  // --- point methods: single sample, judge, self-consistency mode -------
  struct PointMethod {
    std::string name;
    Moments easy_m, hard_m;
    double sq_sum = 0.0, sq_sq_sum = 0.0;
    long long n = 0;

    void add(bool is_easy, double estimate, double target) {
      (is_easy ? easy_m : hard_m).add(estimate);
      const double sq = (estimate - target) * (estimate - target);
      sq_sum += sq;
      sq_sq_sum += sq * sq;
      ++n;
    }
    DecompositionRow finish(double easy_p, double hard_p) const {
      DecompositionRow row;
      row.method = name;
      const double total = static_cast<double>(easy_m.n + hard_m.n);
      const double we = easy_m.n / total, wh = hard_m.n / total;
      row.bias_sq = we * (easy_m.mean - easy_p) * (easy_m.mean - easy_p) +
                    wh * (hard_m.mean - hard_p) * (hard_m.mean - hard_p);
      row.variance = we * easy_m.variance() + wh * hard_m.variance();
      row.mse = sq_sum / total;
      const double mse_var = sq_sq_sum / total - row.mse * row.mse;
      row.mse_sigma = std::sqrt(std::max(0.0, mse_var) / total);
      return row;
    }
  };

  PointMethod single;
  single.name = "single_sample";
  PointMethod judge;
  judge.name = "judge";
  PointMethod mode;
  mode.name = "mode";

  auto gen = rng::engine(rng::derive(seed, rng::Stream::trial, 0x6d69));
  for (int t = 0; t < config.point_trials; ++t) {
    const bool is_easy = rng::uniform01(gen) < config.easy_weight;
    const SyntheticAgent& agent = is_easy ? easy : hard;
    const double p = agent.p_star();

    const bool accepted1 = rng::uniform01(gen) < p;
    single.add(is_easy, accepted1 ? 1.0 : 0.0, p);

    const bool accepted2 = rng::uniform01(gen) < p;
    judge.add(is_easy, config.judge.score(accepted2, gen), p);

    const std::vector<int> counts =
        multinomial_counts(agent.probs, config.k, gen);
    const bool mode_ok =
        mode_index_from_counts(counts, gen) == agent.acceptable_index;
    mode.add(is_easy, mode_ok ? 1.0 : 0.0, p);
  }
  rows.push_back(single.finish(easy.p_star(), hard.p_star()));
  rows.push_back(judge.finish(easy.p_star(), hard.p_star()));
  rows.push_back(mode.finish(easy.p_star(), hard.p_star()));

  // --- conformal methods: coverage against the 1-alpha target -----------
  const double target = 1.0 - config.alpha;
  for (ScoreKind kind : {ScoreKind::rank, ScoreKind::lac, ScoreKind::aps}) {
    Moments coverage_m;
    double sq_sum = 0.0, sq_sq_sum = 0.0;
    for (int rep = 0; rep < config.conformal_reps; ++rep) {
      auto rep_gen = rng::engine(rng::derive(
          seed ^ static_cast<std::uint64_t>(kind),
          rng::Stream::trial, 0xc0f0 + static_cast<std::uint64_t>(rep)));
      std::vector<Score> calib_scores;
      calib_scores.reserve(config.n_cal);
      std::vector<EvalRecord> test;
      test.reserve(config.n_test);
      for (int i = 0; i < config.n_cal + config.n_test; ++i) {
        const bool is_easy = rng::uniform01(rep_gen) < config.easy_weight;
        EvalRecord record = mixture_record(is_easy ? easy : hard, config.k,
                                           kind, rep_gen(), rep_gen);
        if (i < config.n_cal) {
          calib_scores.push_back(record.score);
        } else {
          record.item_id = "t" + std::to_string(i);
          test.push_back(std::move(record));
        }
      }
      const Certificate cert = conformal_threshold(calib_scores, config.alpha);
      const double cov = evaluate(test, cert, {}).coverage;
      coverage_m.add(cov);
      const double sq = (cov - target) * (cov - target);
      sq_sum += sq;
      sq_sq_sum += sq * sq;
    }
    DecompositionRow row;
    row.method = std::string("conformal_") + to_string(kind);
    row.bias_sq = (coverage_m.mean - target) * (coverage_m.mean - target);
    row.variance = coverage_m.variance();
    row.mse = sq_sum / config.conformal_reps;
    const double mse_var =
        sq_sq_sum / config.conformal_reps - row.mse * row.mse;
    row.mse_sigma =
        std::sqrt(std::max(0.0, mse_var) / config.conformal_reps);
    row.coverage = coverage_m.mean;
    rows.push_back(row);
  }
  return rows;
}

SetSizeCurve setsize_vs_quality(const std::vector<double>& p_grid, int n_cal,
                                double alpha, int k, int runs,
                                std::uint64_t seed) {
  if (p_grid.empty() || n_cal < 1 || runs < 1 || k < 1) {
    throw std::invalid_argument("setsize_vs_quality: bad arguments");
  }
  // wrong-class splitter: fixed fractions of the remaining mass so that the
  // same uniform pair (u, v) yields coupled draws across the whole grid
  const std::vector<double> wrong_cut = {0.5, 0.8};  // cumulative of 0.5/0.3/0.2

  SetSizeCurve curve;
  curve.points.resize(p_grid.size());
  for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
    curve.points[pi].p_star = p_grid[pi];
  }

  int monotone_runs = 0;
  for (int run = 0; run < runs; ++run) {
    auto gen = rng::engine(rng::derive(seed, rng::Stream::trial,
                                       static_cast<std::uint64_t>(run)));
    // shared randomness across grid points
    std::vector<double> u(static_cast<std::size_t>(n_cal) * k);
    std::vector<double> v(u.size());
    std::vector<std::uint64_t> tie_seeds(n_cal);
    for (auto& x : u) x = rng::uniform01(gen);
    for (auto& x : v) x = rng::uniform01(gen);
    for (auto& s : tie_seeds) s = gen();

    std::vector<double> run_m_stars(p_grid.size());
    for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
      const double p = p_grid[pi];
      std::vector<Score> scores;
      scores.reserve(n_cal);
      for (int item = 0; item < n_cal; ++item) {
        // counts over {correct, w0, w1, w2}
        int counts[4] = {0, 0, 0, 0};
        for (int j = 0; j < k; ++j) {
          const std::size_t idx = static_cast<std::size_t>(item) * k + j;
          if (u[idx] < p) {
            ++counts[0];
          } else if (v[idx] < wrong_cut[0]) {
            ++counts[1];
          } else if (v[idx] < wrong_cut[1]) {
            ++counts[2];
          } else {
            ++counts[3];
          }
        }
        std::vector<ClassCount> observed;
        static const char* keys[4] = {"c0", "w0", "w1", "w2"};
        for (int c = 0; c < 4; ++c) {
          if (counts[c] > 0) {
            observed.push_back({{keys[c], CanonKind::verbatim}, counts[c]});
          }
        }
        RankedConsensus consensus = consensus_from_counts(
            "item", std::move(observed), tie_seeds[item]);
        AcceptabilitySpec spec{"item", {{"c0", CanonKind::verbatim}}};
        scores.push_back(score_rank(consensus, spec));
      }
      run_m_stars[pi] = conformal_threshold(scores, alpha).m_star;
      if (run_m_stars[pi] == kInfinite) {
        ++curve.points[pi].infinite_runs;
      }
      curve.points[pi].m_stars.push_back(run_m_stars[pi]);
    }
    bool monotone = true;
    for (std::size_t pi = 1; pi < p_grid.size(); ++pi) {
      // grid ascending in p_star: m_star must not increase
      if (run_m_stars[pi] > run_m_stars[pi - 1]) monotone = false;
    }
    monotone_runs += monotone;
  }
  for (auto& point : curve.points) {
    double sum = 0.0;
    int finite = 0;
    for (double m : point.m_stars) {
      if (m != kInfinite) {
        sum += m;
        ++finite;
      }
    }
    point.m_star_mean = finite == 0 ? 0.0 : sum / finite;
  }
  curve.monotone_fraction = static_cast<double>(monotone_runs) / runs;
  return curve;
}

EntropyCorrelation entropy_setsize_correlation(int n_cal, int n_test,
                                               double alpha, int k,
                                               std::uint64_t seed) {
  if (n_cal < 1 || n_test < 2) {
    throw std::invalid_argument("entropy correlation needs n_cal>=1, n_test>=2");
  }
  auto gen = rng::engine(rng::derive(seed, rng::Stream::trial, 0xe27));

  auto draw_item = [&](ScoreKind kind) {
    // heterogeneous difficulty: p in [0.35, 0.95]
    const double p = 0.35 + 0.60 * rng::uniform01(gen);
    const SyntheticAgent agent = make_agent(p);
    return mixture_record(agent, k, kind, gen(), gen);
  };

  std::vector<Score> calib;
  calib.reserve(n_cal);
  for (int i = 0; i < n_cal; ++i) calib.push_back(draw_item(ScoreKind::cumprob).score);
  const Certificate cert = conformal_threshold(calib, alpha);

  EntropyCorrelation out;
  out.points.reserve(n_test);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n_test; ++i) {
    EvalRecord record = draw_item(ScoreKind::cumprob);
    // adaptive set: smallest prefix with cumulative frequency >= quantile
    long long prefix = 0;
    int size = static_cast<int>(record.counts.size());
    for (std::size_t r = 0; r < record.counts.size(); ++r) {
      prefix += record.counts[r];
      if (static_cast<double>(prefix) / record.k >= cert.m_star) {
        size = static_cast<int>(r) + 1;
        break;
      }
    }
    const double x = record.entropy;
    const double y = size;
    out.points.emplace_back(x, y);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double n = n_test;
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  if (vx <= 0.0 || vy <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.pearson_r = cov / std::sqrt(vx * vy);
  return out;
}

std::vector<CoverageCell> coverage_validation(
    const std::vector<double>& p_stars, const std::vector<double>& alphas,
    ScoreKind kind, int k, int n_cal, int n_test, int replications,
    std::uint64_t seed, bool score_event_coverage) {
  std::vector<CoverageCell> cells;
  for (double p : p_stars) {
    const SyntheticAgent agent = make_agent(p);
    // per-alpha accumulators over replications
    std::vector<Moments> per_alpha(alphas.size());
    for (int rep = 0; rep < replications; ++rep) {
      auto gen = rng::engine(
          rng::derive(seed ^ static_cast<std::uint64_t>(p * 1e6),
                      rng::Stream::trial, static_cast<std::uint64_t>(rep)));
      std::vector<Score> calib;
      calib.reserve(n_cal);
      std::vector<EvalRecord> test;
      test.reserve(n_test);
      for (int i = 0; i < n_cal + n_test; ++i) {
        EvalRecord record = mixture_record(agent, k, kind, gen(), gen);
        if (i < n_cal) {
          calib.push_back(record.score);
        } else {
          record.item_id = "t" + std::to_string(i);
          test.push_back(std::move(record));
        }
      }
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const Certificate cert = conformal_threshold(calib, alphas[ai]);
        if (score_event_coverage) {
          long long hits = 0;
          for (const EvalRecord& record : test) {
            hits += !record.score.infinite() &&
                    record.score.value <= cert.m_star;
          }
          per_alpha[ai].add(static_cast<double>(hits) / test.size());
        } else {
          per_alpha[ai].add(evaluate(test, cert, {}).coverage);
        }
      }
    }
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      CoverageCell cell;
      cell.p_star = p;
      cell.alpha = alphas[ai];
      cell.mean_coverage = per_alpha[ai].mean;
      cell.sigma = std::sqrt(per_alpha[ai].variance() /
                             std::max<long long>(1, per_alpha[ai].n));
      cell.target = 1.0 - alphas[ai];
      cell.upper = 1.0 - alphas[ai] + 1.0 / (n_cal + 1.0);
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace relicert
