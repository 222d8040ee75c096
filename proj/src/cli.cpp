#include "relicert/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relicert/harness.hpp"
#include "relicert/rng.hpp"
#include "relicert/synthetic.hpp"

namespace relicert {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBackend = 2;

std::string format_threshold(double v) {
  if (v == kInfinite) return "INF";
  char buf[32];
  if (v == static_cast<double>(static_cast<long long>(v))) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  } else {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
  }
  return buf;
}

void print_report(const CertifyResult& result) {
  std::printf("reliability level: %lld/%lld = %s%%\n",
              result.report.reliability_level.num,
              result.report.reliability_level.den,
              result.report.reliability_level.percent_string().c_str());
  std::printf("%8s %8s %10s %10s %10s %12s\n", "alpha", "m_star", "coverage",
              "cond_cov", "mode_acc", "avg_set_size");
  for (const CoverageRow& row : result.report.rows) {
    std::printf("%8.2f %8s %10.4f %10.4f %10.4f %12.4f\n", row.alpha,
                format_threshold(row.m_star).c_str(), row.coverage,
                row.conditional_coverage_solvable, row.mode_accuracy,
                row.avg_set_size);
  }
  if (!result.failures.empty()) {
    std::fprintf(stderr, "%zu item(s) failed:\n", result.failures.size());
    for (const ItemFailure& failure : result.failures) {
      std::fprintf(stderr, "  %s: %s\n", failure.item_id.c_str(),
                   failure.error.c_str());
    }
  }
}

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<double> alpha_grid = {0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::string score = "rank";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "run seed (drives every draw)");
  cmd->add_option("--out", opts.out_dir, "output directory for reports");
  cmd->add_option("--alpha-grid", opts.alpha_grid,
                  "miscoverage levels to sweep")
      ->delimiter(',');
  cmd->add_option("--score", opts.score,
                  "nonconformity score: rank|cumprob|lac|aps");
}

struct BackendOpts {
  std::string backend = "synthetic";
  double p_star = 0.8;
  std::string dataset;
  std::string cache_dir;
  // http
  std::string endpoint;
  std::string request_template =
      R"({"prompt": "{query}", "temperature": {temperature}})";
  std::string model = "default";
  double temperature = 0.7;
  std::string auth_env;
  std::string response_path = "/text";
};

void add_backend(CLI::App* cmd, BackendOpts& opts) {
  cmd->add_option("--backend", opts.backend, "synthetic | http");
  cmd->add_option("--p-star", opts.p_star,
                  "synthetic backend acceptable-answer rate");
  cmd->add_option("--dataset", opts.dataset, "JSONL dataset path");
  cmd->add_option("--cache", opts.cache_dir,
                  "response cache directory (default <out>/cache)");
  cmd->add_option("--endpoint", opts.endpoint, "http backend endpoint URL");
  cmd->add_option("--template", opts.request_template,
                  "http request body with {query} and {temperature}");
  cmd->add_option("--model", opts.model, "model id recorded in cache keys");
  cmd->add_option("--temperature", opts.temperature, "sampling temperature");
  cmd->add_option("--auth-env", opts.auth_env,
                  "environment variable holding the bearer token");
  cmd->add_option("--response-path", opts.response_path,
                  "JSON pointer to the sample text in replies");
}

struct BuiltBackend {
  std::unique_ptr<Backend> backend;
  std::vector<DatasetItem> items;
  std::unique_ptr<ResponseCache> cache;
};

BuiltBackend build_backend(const BackendOpts& opts, const CommonOpts& common,
                           int synthetic_items_count) {
  BuiltBackend built;
  if (!opts.dataset.empty()) {
    built.items = load_dataset(opts.dataset);
  }
  if (opts.backend == "synthetic") {
    built.backend = std::make_unique<SyntheticBackend>(opts.p_star, common.seed);
    if (built.items.empty()) {
      built.items = synthetic_items(synthetic_items_count, "syn");
    }
  } else if (opts.backend == "http") {
    if (built.items.empty()) {
      throw std::invalid_argument("http backend requires --dataset");
    }
    HttpBackendConfig config;
    config.endpoint = opts.endpoint;
    config.request_template = opts.request_template;
    config.model_id = opts.model;
    config.temperature = opts.temperature;
    config.auth_env = opts.auth_env;
    config.response_path = opts.response_path;
    built.backend = std::make_unique<HttpBackend>(config);
  } else {
    throw std::invalid_argument("unknown backend: " + opts.backend);
  }
  std::filesystem::path cache_dir = opts.cache_dir.empty()
                                        ? (common.out_dir.empty()
                                               ? std::filesystem::path("cache")
                                               : std::filesystem::path(
                                                     common.out_dir) /
                                                     "cache")
                                        : std::filesystem::path(opts.cache_dir);
  built.cache = std::make_unique<ResponseCache>(cache_dir);
  return built;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_series(const std::filesystem::path& out_dir,
                  const std::string& name, const ordered_json& doc,
                  const std::string& csv) {
  write_file_atomic(out_dir / (name + ".json"), doc.dump(2) + "\n");
  write_file_atomic(out_dir / (name + ".csv"), csv);
}

int cmd_synthetic(const std::string& experiment, const CommonOpts& common,
                  int reps, int trials) {
  const std::filesystem::path out_dir =
      common.out_dir.empty() ? "." : common.out_dir;
  const std::uint64_t seed = common.seed;

  if (experiment == "coverage") {
    const std::vector<double> p_stars = {0.6, 0.7, 0.8};
    const auto cells =
        coverage_validation(p_stars, common.alpha_grid, ScoreKind::rank, 10,
                            200, 500, reps, seed);
    ordered_json doc;
    doc["experiment"] = "coverage";
    doc["score_kind"] = "rank";
    doc["cells"] = ordered_json::array();
    std::ostringstream csv;
    csv << "p_star,alpha,mean_coverage,sigma,target,upper\n";
    for (const CoverageCell& cell : cells) {
      ordered_json c;
      c["p_star"] = cell.p_star;
      c["alpha"] = cell.alpha;
      c["mean_coverage"] = cell.mean_coverage;
      c["sigma"] = cell.sigma;
      c["target"] = cell.target;
      c["upper"] = cell.upper;
      doc["cells"].push_back(c);
      csv << cell.p_star << ',' << cell.alpha << ',' << cell.mean_coverage
          << ',' << cell.sigma << ',' << cell.target << ',' << cell.upper
          << '\n';
    }
    write_series(out_dir, "coverage", doc, csv.str());
    std::printf("coverage: %zu cells written to %s\n", cells.size(),
                out_dir.string().c_str());
    return kExitOk;
  }
  if (experiment == "variance") {
    const std::vector<int> ks = {1, 2, 5, 10, 20, 40, 60};
    ordered_json doc;
    doc["experiment"] = "variance";
    doc["series"] = ordered_json::array();
    std::ostringstream csv;
    csv << "p_star,k,mode_error,hoeffding_bound,sigma\n";
    for (double p : {0.6, 0.7, 0.8}) {
      const auto points = mode_error_sweep(make_agent(p), ks, trials, seed);
      for (const ModeErrorPoint& point : points) {
        ordered_json row;
        row["p_star"] = p;
        row["k"] = point.k;
        row["mode_error"] = point.error;
        row["hoeffding_bound"] = point.hoeffding_bound;
        row["sigma"] = point.sigma;
        doc["series"].push_back(row);
        csv << p << ',' << point.k << ',' << point.error << ','
            << point.hoeffding_bound << ',' << point.sigma << '\n';
      }
    }
    write_series(out_dir, "variance", doc, csv.str());
    std::printf("variance: series written to %s\n", out_dir.string().c_str());
    return kExitOk;
  }
  if (experiment == "biasvar") {
    MixtureConfig config;
    config.point_trials = trials;
    config.conformal_reps = reps;
    const auto rows = bias_variance_table(config, seed);
    ordered_json doc;
    doc["experiment"] = "biasvar";
    doc["rows"] = ordered_json::array();
    std::ostringstream csv;
    csv << "method,bias_sq,variance,mse,coverage\n";
    for (const DecompositionRow& row : rows) {
      ordered_json r;
      r["method"] = row.method;
      r["bias_sq"] = row.bias_sq;
      r["variance"] = row.variance;
      r["mse"] = row.mse;
      r["mse_sigma"] = row.mse_sigma;
      if (row.coverage) r["coverage"] = *row.coverage;
      doc["rows"].push_back(r);
      csv << row.method << ',' << row.bias_sq << ',' << row.variance << ','
          << row.mse << ',';
      if (row.coverage) csv << *row.coverage;
      csv << '\n';
    }
    write_series(out_dir, "biasvar", doc, csv.str());
    std::printf("biasvar: %zu rows written to %s\n", rows.size(),
                out_dir.string().c_str());
    return kExitOk;
  }
  if (experiment == "setsize") {
    std::vector<double> grid;
    for (double p = 0.3; p <= 1.0 + 1e-9; p += 0.05) grid.push_back(p);
    grid.back() = 1.0;
    const SetSizeCurve curve =
        setsize_vs_quality(grid, 200, 0.1, 10, reps, seed);
    ordered_json doc;
    doc["experiment"] = "setsize";
    doc["monotone_fraction"] = curve.monotone_fraction;
    doc["points"] = ordered_json::array();
    std::ostringstream csv;
    csv << "p_star,m_star_mean,infinite_runs\n";
    for (const SetSizePoint& point : curve.points) {
      ordered_json p;
      p["p_star"] = point.p_star;
      p["m_star_mean"] = point.m_star_mean;
      p["infinite_runs"] = point.infinite_runs;
      doc["points"].push_back(p);
      csv << point.p_star << ',' << point.m_star_mean << ','
          << point.infinite_runs << '\n';
    }
    write_series(out_dir, "setsize", doc, csv.str());
    std::printf("setsize: monotone fraction %.3f\n", curve.monotone_fraction);
    return kExitOk;
  }
  if (experiment == "entropy") {
    const EntropyCorrelation result =
        entropy_setsize_correlation(200, 500, 0.1, 10, seed);
    ordered_json doc;
    doc["experiment"] = "entropy";
    doc["pearson_r"] = result.pearson_r;
    doc["degenerate"] = result.degenerate;
    doc["points"] = ordered_json::array();
    std::ostringstream csv;
    csv << "entropy,set_size\n";
    for (const auto& [entropy, size] : result.points) {
      doc["points"].push_back({{"entropy", entropy}, {"set_size", size}});
      csv << entropy << ',' << size << '\n';
    }
    write_series(out_dir, "entropy", doc, csv.str());
    std::printf("entropy: r = %.3f%s\n", result.pearson_r,
                result.degenerate ? " (degenerate)" : "");
    return kExitOk;
  }
  if (experiment == "canon") {
    const std::vector<int> ks = {1, 2, 5, 10, 20};
    const auto points = canonicalization_amplification(make_fragmented_agent(),
                                                       ks, trials, seed);
    ordered_json doc;
    doc["experiment"] = "canon";
    doc["points"] = ordered_json::array();
    std::ostringstream csv;
    csv << "k,canonical_error,raw_error,sigma\n";
    for (const AmplificationPoint& point : points) {
      ordered_json p;
      p["k"] = point.k;
      p["canonical_error"] = point.canonical_error;
      p["raw_error"] = point.raw_error;
      p["sigma"] = point.sigma;
      doc["points"].push_back(p);
      csv << point.k << ',' << point.canonical_error << ',' << point.raw_error
          << ',' << point.sigma << '\n';
    }
    write_series(out_dir, "canon", doc, csv.str());
    std::printf("canon: paired curves written to %s\n",
                out_dir.string().c_str());
    return kExitOk;
  }
  std::fprintf(stderr,
               "unknown experiment '%s'; valid names: coverage | variance | "
               "biasvar | setsize | entropy | canon\n",
               experiment.c_str());
  return kExitUsage;
}

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_prefix) {
  if (inputs.empty()) {
    std::fprintf(stderr, "report requires at least one coverage.json\n");
    return kExitUsage;
  }
  ordered_json merged;
  merged["runs"] = ordered_json::array();
  std::string schema_version;
  std::ostringstream csv;
  csv << "source,reliability_percent,alpha,m_star,coverage,avg_set_size\n";
  for (const std::string& input : inputs) {
    std::ifstream in(input);
    if (!in) {
      std::fprintf(stderr, "cannot open %s\n", input.c_str());
      return kExitBackend;
    }
    ordered_json doc;
    try {
      in >> doc;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "parse error in %s: %s\n", input.c_str(), e.what());
      return kExitBackend;
    }
    const std::string version = doc.value("schema_version", "");
    if (schema_version.empty()) {
      schema_version = version;
      merged["schema_version"] = version;
    } else if (version != schema_version) {
      std::fprintf(stderr,
                   "schema version mismatch: %s has '%s', expected '%s'\n",
                   input.c_str(), version.c_str(), schema_version.c_str());
      return kExitUsage;
    }
    ordered_json run;
    run["source"] = input;
    run["reliability_level"] = doc.value("reliability_level", ordered_json());
    run["rows"] = doc.value("rows", ordered_json::array());
    merged["runs"].push_back(run);
    const std::string percent =
        doc.contains("reliability_level")
            ? doc["reliability_level"].value("percent", "")
            : "";
    for (const auto& row : doc.value("rows", ordered_json::array())) {
      csv << csv_escape(input) << ',' << percent << ','
          << row.value("alpha", 0.0) << ',';
      const auto& m = row.at("m_star");
      if (m.is_string()) csv << m.get<std::string>();
      else csv << m.dump();
      csv << ',' << row.value("coverage", 0.0) << ','
          << row.value("avg_set_size", 0.0) << '\n';
    }
  }
  write_file_atomic(out_prefix + ".json", merged.dump(2) + "\n");
  write_file_atomic(out_prefix + ".csv", csv.str());
  std::printf("report: merged %zu run(s) into %s.{json,csv}\n", inputs.size(),
              out_prefix.c_str());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"black-box reliability certification toolkit"};
  app.require_subcommand(1);

  // certify ---------------------------------------------------------------
  auto* certify_cmd = app.add_subcommand(
      "certify", "calibrate thresholds and emit a reliability certificate");
  CommonOpts certify_common;
  BackendOpts certify_backend;
  int certify_k = 10, certify_k_max = 0;
  int certify_n_cal = 0, certify_n_test = 0;
  add_common(certify_cmd, certify_common);
  add_backend(certify_cmd, certify_backend);
  certify_cmd->add_option("--k", certify_k, "samples per query");
  certify_cmd->add_option("--k-max", certify_k_max,
                          "sample budget for the solvable diagnostic");
  certify_cmd->add_option("--n-cal", certify_n_cal, "calibration set size");
  certify_cmd->add_option("--n-test", certify_n_test, "test set size");
  double certify_min_success = 0.9;
  certify_cmd->add_option("--min-success", certify_min_success,
                          "abort when the completed-item fraction drops below");

  // evaluate ---------------------------------------------------------------
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "apply an existing certificate to a fresh dataset");
  CommonOpts evaluate_common;
  BackendOpts evaluate_backend;
  std::string evaluate_certificate;
  int evaluate_k = 10;
  add_common(evaluate_cmd, evaluate_common);
  add_backend(evaluate_cmd, evaluate_backend);
  evaluate_cmd->add_option("--certificate", evaluate_certificate,
                           "certificate.json from a certify run")
      ->required();
  evaluate_cmd->add_option("--k", evaluate_k, "samples per query");

  // sweep-k ----------------------------------------------------------------
  auto* sweep_cmd =
      app.add_subcommand("sweep-k", "mode error and coverage per sample count");
  CommonOpts sweep_common;
  BackendOpts sweep_backend;
  std::vector<int> sweep_ks = {1, 2, 5, 10, 20};
  double sweep_alpha = 0.1;
  int sweep_items = 400;
  add_common(sweep_cmd, sweep_common);
  add_backend(sweep_cmd, sweep_backend);
  sweep_cmd->add_option("--k-set", sweep_ks, "K values to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--alpha", sweep_alpha, "miscoverage level");
  sweep_cmd->add_option("--n-items", sweep_items,
                        "synthetic item count when no dataset is given");

  // sequential ---------------------------------------------------------------
  auto* seq_cmd = app.add_subcommand(
      "sequential", "certify with per-item certified early stopping");
  CommonOpts seq_common;
  BackendOpts seq_backend;
  double seq_delta = 0.05;
  int seq_k0 = 3, seq_k_max = 20;
  int seq_n_cal = 0, seq_n_test = 0;
  add_common(seq_cmd, seq_common);
  add_backend(seq_cmd, seq_backend);
  seq_cmd->add_option("--delta", seq_delta, "mode misidentification budget");
  seq_cmd->add_option("--k0", seq_k0, "first step the rule is consulted");
  seq_cmd->add_option("--k-max", seq_k_max, "sample budget per item");
  seq_cmd->add_option("--n-cal", seq_n_cal, "calibration set size");
  seq_cmd->add_option("--n-test", seq_n_test, "test set size");

  // synthetic ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synthetic", "validation experiments on ground-truth agents");
  CommonOpts synth_common;
  std::string synth_experiment;
  int synth_reps = 200, synth_trials = 20000;
  add_common(synth_cmd, synth_common);
  synth_cmd
      ->add_option("experiment", synth_experiment,
                   "coverage | variance | biasvar | setsize | entropy | canon")
      ->required();
  synth_cmd->add_option("--reps", synth_reps, "replications per cell");
  synth_cmd->add_option("--trials", synth_trials, "Monte Carlo trials");

  // report ---------------------------------------------------------------
  auto* report_cmd = app.add_subcommand(
      "report", "merge coverage reports into a comparison matrix");
  std::vector<std::string> report_inputs;
  std::string report_prefix = "report";
  report_cmd->add_option("inputs", report_inputs, "coverage.json files");
  report_cmd->add_option("--out-prefix", report_prefix,
                         "output path prefix for .json/.csv");

  std::vector<std::string> argv_copy = args;
  try {
    std::vector<const char*> argv;
    argv.push_back("relicert");
    for (const std::string& a : argv_copy) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // --help lands here with an Ok code
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (certify_cmd->parsed()) {
      BuiltBackend built =
          build_backend(certify_backend, certify_common,
                        certify_n_cal + certify_n_test > 0
                            ? certify_n_cal + certify_n_test
                            : 400);
      RunConfig config;
      config.seed = certify_common.seed;
      config.k = certify_k;
      config.k_max = certify_k_max > 0 ? certify_k_max : certify_k;
      config.alpha_grid = certify_common.alpha_grid;
      config.score_kind = score_kind_from_string(certify_common.score);
      config.n_cal = certify_n_cal;
      config.n_test = certify_n_test;
      config.min_success_fraction = certify_min_success;
      config.out_dir = certify_common.out_dir;
      const CertifyResult result =
          certify(built.items, *built.backend, *built.cache, config);
      print_report(result);
      return kExitOk;
    }
    if (evaluate_cmd->parsed()) {
      std::ifstream in(evaluate_certificate);
      if (!in) {
        throw std::runtime_error("cannot open certificate: " +
                                 evaluate_certificate);
      }
      ordered_json cert_doc;
      in >> cert_doc;
      BuiltBackend built = build_backend(evaluate_backend, evaluate_common, 400);
      RunConfig config;
      config.seed = evaluate_common.seed;
      config.k = evaluate_k;
      config.k_max = evaluate_k;
      config.score_kind =
          score_kind_from_string(cert_doc.value("score_kind", "rank"));
      // re-derive thresholds from the stored certificate rows
      config.alpha_grid.clear();
      std::vector<double> thresholds;
      for (const auto& c : cert_doc.at("certificates")) {
        config.alpha_grid.push_back(c.at("alpha").get<double>());
        const auto& m = c.at("m_star");
        thresholds.push_back(m.is_string() ? kInfinite : m.get<double>());
      }
      // score every item as test against the stored thresholds
      std::vector<EvalRecord> records;
      for (const DatasetItem& item : built.items) {
        const Canonicalizer canon = item.make_canon();
        const std::vector<RawSample> samples =
            fetch_samples(item, config.k, *built.backend, *built.cache);
        const std::uint64_t item_hash = rng::hash_string(item.id);
        RankedConsensus consensus = aggregate(
            samples, canon,
            rng::derive(config.seed, rng::Stream::tie_break, item_hash));
        bool solvable = false;
        const AcceptabilitySpec spec = item.spec();
        for (const ClassCount& entry : consensus.classes) {
          for (const CanonicalClass& acceptable : spec.acceptable) {
            solvable |= entry.cls == acceptable;
          }
        }
        auto u_gen = rng::engine(
            rng::derive(config.seed, rng::Stream::aps_u, item_hash));
        records.push_back(make_eval_record(consensus, spec, config.score_kind,
                                           rng::uniform01(u_gen), solvable));
      }
      std::printf("%8s %8s %10s %10s\n", "alpha", "m_star", "coverage",
                  "mode_acc");
      for (std::size_t i = 0; i < config.alpha_grid.size(); ++i) {
        Certificate cert;
        cert.alpha = config.alpha_grid[i];
        cert.n = cert_doc.value("n", 0);
        cert.k_index = conformal_k_index(std::max(1, cert.n), cert.alpha);
        cert.m_star = thresholds[i];
        cert.score_kind = config.score_kind;
        const CoverageRow row = evaluate(records, cert, {});
        std::printf("%8.2f %8s %10.4f %10.4f\n", row.alpha,
                    format_threshold(row.m_star).c_str(), row.coverage,
                    row.mode_accuracy);
      }
      return kExitOk;
    }
    if (sweep_cmd->parsed()) {
      BuiltBackend built = build_backend(sweep_backend, sweep_common,
                                         sweep_items);
      RunConfig config;
      config.seed = sweep_common.seed;
      config.k = *std::max_element(sweep_ks.begin(), sweep_ks.end());
      config.k_max = config.k;
      config.score_kind = score_kind_from_string(sweep_common.score);
      const auto rows = sweep_k(built.items, sweep_ks, *built.backend,
                                *built.cache, config, sweep_alpha);
      std::printf("%6s %12s %10s %8s\n", "k", "mode_error", "coverage",
                  "m_star");
      ordered_json doc;
      doc["rows"] = ordered_json::array();
      for (const KSweepRow& row : rows) {
        std::printf("%6d %12.4f %10.4f %8s\n", row.k, row.mode_error,
                    row.coverage, format_threshold(row.m_star).c_str());
        ordered_json r;
        r["k"] = row.k;
        r["mode_error"] = row.mode_error;
        r["coverage"] = row.coverage;
        r["m_star"] = row.m_star == kInfinite
                          ? ordered_json("INFINITE")
                          : ordered_json(row.m_star);
        doc["rows"].push_back(r);
      }
      if (!sweep_common.out_dir.empty()) {
        write_file_atomic(
            std::filesystem::path(sweep_common.out_dir) / "sweep_k.json",
            doc.dump(2) + "\n");
      }
      return kExitOk;
    }
    if (seq_cmd->parsed()) {
      BuiltBackend built =
          build_backend(seq_backend, seq_common,
                        seq_n_cal + seq_n_test > 0 ? seq_n_cal + seq_n_test
                                                   : 400);
      RunConfig config;
      config.seed = seq_common.seed;
      config.k = seq_k_max;
      config.k_max = seq_k_max;
      config.alpha_grid = seq_common.alpha_grid;
      config.score_kind = score_kind_from_string(seq_common.score);
      config.n_cal = seq_n_cal;
      config.n_test = seq_n_test;
      config.out_dir = seq_common.out_dir;
      StoppingConfig stopping;
      stopping.delta = seq_delta;
      stopping.k0 = seq_k0;
      stopping.k_max = seq_k_max;
      const SequentialRunResult result = certify_sequential(
          built.items, *built.backend, *built.cache, config, stopping);
      std::printf("avg K used: %.3f of %d (savings %.1f%%, triggered %d/%d)\n",
                  result.savings.avg_k, stopping.k_max,
                  100.0 * result.savings.savings_fraction,
                  result.savings.triggered, result.savings.traces);
      print_report(result.certify);
      return kExitOk;
    }
    if (synth_cmd->parsed()) {
      return cmd_synthetic(synth_experiment, synth_common, synth_reps,
                           synth_trials);
    }
    if (report_cmd->parsed()) {
      return cmd_report(report_inputs, report_prefix);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBackend;
  }
  return kExitUsage;
}

}  // namespace relicert
