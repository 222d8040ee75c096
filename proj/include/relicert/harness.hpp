#pragma once
// Dataset ingestion, sampling backends (in-process synthetic and generic
// HTTP-JSON), SHA-256 content-addressed response caching, K-sweeps, and the
// end-to-end certify pipeline with JSON report persistence.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relicert/calibrate.hpp"
#include "relicert/consensus.hpp"
#include "relicert/sequential.hpp"
#include "relicert/synthetic.hpp"

namespace relicert {

struct DatasetItem {
  std::string id;
  std::string query;
  std::vector<std::string> acceptable;  // canonical keys, non-empty
  std::string canonicalizer;            // numeric | option | binary | verbatim
  std::vector<std::string> options;     // present iff canonicalizer == option
  std::map<std::string, std::string> metadata;

  Canonicalizer make_canon() const;
  AcceptabilitySpec spec() const;
};

// JSONL, one item per line; duplicate ids and schema violations are errors
// reported with the offending line number.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);
DatasetItem dataset_item_from_json_line(const std::string& line, int line_no);
std::string dataset_item_to_json_line(const DatasetItem& item);

// SHA-256 hex digest of arbitrary bytes.
std::string sha256_hex(std::string_view bytes);

// write-temp-then-rename so partial files are never observable.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

// Content-addressed response cache under dir/<2-hex>/<sha>.json. The key is
// a pure function of the semantic request fields, so whitespace changes in
// templates do not invalidate entries.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string make_key(const std::string& backend_id,
                              const std::string& model_id,
                              const std::string& query, int sample_index,
                              double temperature);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& response);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// A sampling backend produces the raw text of sample `index` for a query.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::string model_id() const = 0;
  virtual double temperature() const = 0;
  // Throws on failure after internal retries.
  virtual std::string draw(const DatasetItem& item, int sample_index) = 0;
};

// In-process synthetic backend: per-item multinomial agents derived from the
// run seed. Items whose id carries the "#p=<value>" metadata key override
// the default acceptable-answer rate.
class SyntheticBackend : public Backend {
 public:
  SyntheticBackend(double p_star, std::uint64_t run_seed,
                   std::vector<double> wrong_fractions = {0.5, 0.3, 0.2});
  std::string id() const override { return "synthetic"; }
  std::string model_id() const override;
  double temperature() const override { return 0.0; }
  std::string draw(const DatasetItem& item, int sample_index) override;

 private:
  double p_star_;
  std::uint64_t run_seed_;
  std::vector<double> wrong_fractions_;
};

struct HttpBackendConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/complete
  std::string request_template =
      R"({"prompt": "{query}", "temperature": {temperature}})";
  std::string model_id = "default";
  double temperature = 0.7;
  std::string auth_env;            // environment variable holding the token
  std::string response_path = "/text";  // JSON pointer into the reply
  int max_retries = 3;
  int backoff_base_ms = 100;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string id() const override { return "http:" + config_.endpoint; }
  std::string model_id() const override { return config_.model_id; }
  double temperature() const override { return config_.temperature; }
  std::string draw(const DatasetItem& item, int sample_index) override;

 private:
  HttpBackendConfig config_;
};

// K samples for one item, cache first. Never returns fewer than K samples:
// a failure after retries propagates so the caller can mark the item failed.
std::vector<RawSample> fetch_samples(const DatasetItem& item, int k,
                                     Backend& backend, ResponseCache& cache);

struct RunConfig {
  std::uint64_t seed = 0;
  int k = 10;
  int k_max = 20;  // budget used for the solvable diagnostic
  std::vector<double> alpha_grid = {0.01, 0.05, 0.10, 0.15,
                                    0.20, 0.25, 0.30};
  ScoreKind score_kind = ScoreKind::rank;
  // split: explicit sizes, or seeded 50/50 when both are 0
  int n_cal = 0;
  int n_test = 0;
  double min_success_fraction = 0.9;  // abort below this completion rate
  std::filesystem::path out_dir;
  std::string schema_version = "1";
};

struct ItemFailure {
  std::string item_id;
  std::string error;
};

struct CertifyResult {
  std::vector<Certificate> certificates;  // one per alpha
  CoverageReport report;
  std::vector<ItemFailure> failures;
  int n_cal = 0;
  int n_test = 0;
  std::filesystem::path certificate_path;
  std::filesystem::path coverage_path;
  std::filesystem::path traces_path;
};

// End-to-end: fetch -> canonicalize -> score -> threshold per alpha ->
// reliability level -> evaluate -> persist certificate.json, coverage.json,
// traces.jsonl (atomically). Failed items are excluded and reported; the run
// aborts if completion drops below min_success_fraction.
CertifyResult certify(const std::vector<DatasetItem>& items, Backend& backend,
                      ResponseCache& cache, const RunConfig& config);

// Sequential variant: per-item early stopping instead of fixed K.
struct SequentialRunResult {
  CertifyResult certify;
  SavingsReport savings;
};

SequentialRunResult certify_sequential(const std::vector<DatasetItem>& items,
                                       Backend& backend, ResponseCache& cache,
                                       const RunConfig& config,
                                       const StoppingConfig& stopping);

struct KSweepRow {
  int k = 0;
  double mode_error = 0.0;
  double coverage = 0.0;
  double m_star = kInfinite;
};

// Mode error and coverage per K, reusing sample prefixes from one K_max
// fetch per item.
std::vector<KSweepRow> sweep_k(const std::vector<DatasetItem>& items,
                               const std::vector<int>& ks, Backend& backend,
                               ResponseCache& cache, const RunConfig& config,
                               double alpha);

// Synthetic items for inline runs without a dataset file.
std::vector<DatasetItem> synthetic_items(int count, const std::string& prefix);

}  // namespace relicert
