#include "relicert/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "relicert/rng.hpp"

namespace relicert {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json number_or_infinite(double v) {
  if (v == kInfinite) return "INFINITE";
  if (v == static_cast<double>(static_cast<long long>(v))) {
    return static_cast<long long>(v);
  }
  return v;
}

ordered_json reliability_json(const Rational& r) {
  ordered_json j;
  j["count"] = r.num;
  j["n_plus_1"] = r.den;
  j["value"] = r.to_double();
  j["percent"] = r.percent_string();
  return j;
}

ordered_json coverage_row_json(const CoverageRow& row) {
  ordered_json j;
  j["alpha"] = row.alpha;
  j["k_index"] = row.k_index;
  j["m_star"] = number_or_infinite(row.m_star);
  j["coverage"] = row.coverage;
  j["conditional_coverage_solvable"] = row.conditional_coverage_solvable;
  j["mode_accuracy"] = row.mode_accuracy;
  j["avg_set_size"] = row.avg_set_size;
  j["wilson_lo"] = row.wilson.lo;
  j["wilson_hi"] = row.wilson.hi;
  j["n_test"] = row.n_test;
  j["covered"] = row.covered;
  j["solvable_count"] = row.solvable_count;
  return j;
}

}  // namespace

Canonicalizer DatasetItem::make_canon() const {
  return make_canonicalizer(canonicalizer, options);
}

AcceptabilitySpec DatasetItem::spec() const {
  CanonKind kind = CanonKind::verbatim;
  if (canonicalizer == "numeric") kind = CanonKind::numeric;
  else if (canonicalizer == "option") kind = CanonKind::option;
  else if (canonicalizer == "binary") kind = CanonKind::binary;
  AcceptabilitySpec out;
  out.item_id = id;
  for (const auto& key : acceptable) out.acceptable.push_back({key, kind});
  return out;
}

DatasetItem dataset_item_from_json_line(const std::string& line, int line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": JSON parse error: " + e.what());
  }
  auto require = [&](const char* field) -> const ordered_json& {
    if (!j.contains(field)) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": missing required field '" + field + "'");
    }
    return j.at(field);
  };
  DatasetItem item;
  try {
    item.id = require("id").get<std::string>();
    item.query = require("query").get<std::string>();
    for (const auto& a : require("acceptable")) {
      item.acceptable.push_back(a.get<std::string>());
    }
    if (item.acceptable.empty()) {
      throw std::invalid_argument("'acceptable' must be non-empty");
    }
    item.canonicalizer = require("canonicalizer").get<std::string>();
    const bool has_options = j.contains("options") && !j["options"].empty();
    if (item.canonicalizer == "option") {
      if (!has_options) {
        throw std::invalid_argument(
            "canonicalizer 'option' requires 'options'");
      }
      for (const auto& o : j["options"]) {
        item.options.push_back(o.get<std::string>());
      }
    } else if (has_options) {
      throw std::invalid_argument(
          "'options' only allowed with canonicalizer 'option'");
    }
    if (j.contains("metadata")) {
      for (const auto& [key, value] : j["metadata"].items()) {
        item.metadata[key] = value.is_string() ? value.get<std::string>()
                                               : value.dump();
      }
    }
    item.make_canon();  // validates canonicalizer name and option lists
  } catch (const std::runtime_error&) {
    throw;  // already carries the line number
  } catch (const std::exception& e) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                             e.what());
  }
  return item;
}

std::string dataset_item_to_json_line(const DatasetItem& item) {
  ordered_json j;
  j["id"] = item.id;
  j["query"] = item.query;
  j["acceptable"] = item.acceptable;
  j["canonicalizer"] = item.canonicalizer;
  if (!item.options.empty()) j["options"] = item.options;
  if (!item.metadata.empty()) {
    ordered_json m;
    for (const auto& [key, value] : item.metadata) m[key] = value;
    j["metadata"] = m;
  }
  return j.dump();
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset: " + path.string());
  }
  std::vector<DatasetItem> items;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DatasetItem item = dataset_item_from_json_line(line, line_no);
    if (!ids.insert(item.id).second) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": duplicate item id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::make_key(const std::string& backend_id,
                                    const std::string& model_id,
                                    const std::string& query, int sample_index,
                                    double temperature) {
  // length-prefixed fields: unambiguous regardless of content
  std::ostringstream material;
  char temp_buf[32];
  std::snprintf(temp_buf, sizeof(temp_buf), "%.6f", temperature);
  for (const std::string& field :
       {backend_id, model_id, query, std::to_string(sample_index),
        std::string(temp_buf)}) {
    material << field.size() << ':' << field << ';';
  }
  return sha256_hex(material.str());
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  const std::filesystem::path path =
      dir_ / key.substr(0, 2) / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  ordered_json j;
  try {
    in >> j;
    return j.at("response").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses
  }
}

void ResponseCache::store(const std::string& key,
                          const std::string& response) {
  const std::filesystem::path shard = dir_ / key.substr(0, 2);
  std::filesystem::create_directories(shard);
  ordered_json j;
  j["key"] = key;
  j["response"] = response;
  j["stored_at"] = static_cast<long long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  write_file_atomic(shard / (key + ".json"), j.dump(2) + "\n");
}

SyntheticBackend::SyntheticBackend(double p_star, std::uint64_t run_seed,
                                   std::vector<double> wrong_fractions)
    : p_star_(p_star),
      run_seed_(run_seed),
      wrong_fractions_(std::move(wrong_fractions)) {
  if (!(p_star > 0.0 && p_star <= 1.0)) {
    throw std::invalid_argument("synthetic backend requires p_star in (0, 1]");
  }
}

std::string SyntheticBackend::model_id() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "synthetic-p%.4f", p_star_);
  return buf;
}

std::string SyntheticBackend::draw(const DatasetItem& item, int sample_index) {
  double p = p_star_;
  if (auto it = item.metadata.find("p_star"); it != item.metadata.end()) {
    p = std::stod(it->second);
  }
  const std::uint64_t item_seed = run_seed_ ^ rng::hash_string(item.id);
  auto gen = rng::engine(rng::derive(item_seed, rng::Stream::sample,
                                     static_cast<std::uint64_t>(sample_index)));
  if (p >= 1.0) return "c0";
  const double u = rng::uniform01(gen);
  if (u < p) return "c0";
  // split the wrong mass per the configured fractions
  double frac_sum = 0.0;
  for (double f : wrong_fractions_) frac_sum += f;
  double threshold = p;
  const double wrong_mass = 1.0 - p;
  for (std::size_t i = 0; i < wrong_fractions_.size(); ++i) {
    threshold += wrong_mass * (wrong_fractions_[i] / frac_sum);
    if (u < threshold || i + 1 == wrong_fractions_.size()) {
      return "w" + std::to_string(i);
    }
  }
  return "w0";
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw std::invalid_argument("http backend requires an endpoint");
  }
  if (config_.request_template.empty()) {
    throw std::invalid_argument("http backend requires a request template");
  }
}

std::string HttpBackend::draw(const DatasetItem& item, int sample_index) {
  (void)sample_index;  // the index only enters the cache key
  // split endpoint into base (scheme://host:port) and path
  const std::size_t scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) {
    throw std::invalid_argument("endpoint must include a scheme: " +
                                config_.endpoint);
  }
  const std::size_t path_pos = config_.endpoint.find('/', scheme + 3);
  const std::string base = path_pos == std::string::npos
                               ? config_.endpoint
                               : config_.endpoint.substr(0, path_pos);
  const std::string path =
      path_pos == std::string::npos ? "/" : config_.endpoint.substr(path_pos);

  // JSON-escape the query before substituting into the template
  std::string escaped = ordered_json(item.query).dump();
  escaped = escaped.substr(1, escaped.size() - 2);
  char temp_buf[32];
  std::snprintf(temp_buf, sizeof(temp_buf), "%g", config_.temperature);
  std::string body = config_.request_template;
  auto replace_all = [](std::string& s, const std::string& from,
                        const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all(body, "{query}", escaped);
  replace_all(body, "{temperature}", temp_buf);

  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token) {
      throw std::invalid_argument("auth environment variable '" +
                                  config_.auth_env + "' is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config_.backoff_base_ms * (1 << (attempt - 1))));
    }
    httplib::Client client(base);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(10, 0);
    httplib::Result result =
        client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = "connection error (" +
                   std::string(httplib::to_string(result.error())) + ")";
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      last_error = "HTTP status " + std::to_string(result->status);
      continue;
    }
    try {
      const ordered_json reply = ordered_json::parse(result->body);
      return reply.at(ordered_json::json_pointer(config_.response_path))
          .get<std::string>();
    } catch (const std::exception& e) {
      // malformed payloads are not transient: fail immediately
      throw std::runtime_error("malformed backend response for item '" +
                               item.id + "': " + e.what());
    }
  }
  throw std::runtime_error("backend failed for item '" + item.id + "' after " +
                           std::to_string(config_.max_retries + 1) +
                           " attempts: " + last_error);
}

std::vector<RawSample> fetch_samples(const DatasetItem& item, int k,
                                     Backend& backend, ResponseCache& cache) {
  if (k < 1) throw std::invalid_argument("fetch_samples requires K >= 1");
  std::vector<RawSample> samples;
  samples.reserve(k);
  for (int index = 0; index < k; ++index) {
    const std::string key =
        ResponseCache::make_key(backend.id(), backend.model_id(), item.query,
                                index, backend.temperature());
    std::optional<std::string> cached = cache.lookup(key);
    std::string text;
    if (cached) {
      text = std::move(*cached);
    } else {
      text = backend.draw(item, index);
      cache.store(key, text);
    }
    samples.push_back({item.id, index, std::move(text)});
  }
  return samples;
}

namespace {

// Shared fetch/score stage for certify and certify_sequential.
struct Prepared {
  std::vector<EvalRecord> calibration;
  std::vector<EvalRecord> test;
  std::vector<std::string> calibration_ids;
  std::vector<Score> calib_scores;
  std::vector<Score> calib_rank_scores;
  std::vector<ItemFailure> failures;
  std::vector<ordered_json> trace_lines;
  int attempted = 0;
};

void validate_config(const RunConfig& config) {
  if (config.k < 1) throw std::invalid_argument("k must be >= 1");
  if (config.alpha_grid.empty()) {
    throw std::invalid_argument("alpha grid must be non-empty");
  }
  for (double a : config.alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("alpha values must lie in (0, 1)");
    }
  }
  if ((config.n_cal == 0) != (config.n_test == 0)) {
    throw std::invalid_argument("n_cal and n_test must be set together");
  }
}

std::vector<std::size_t> split_order(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  auto gen = rng::engine(rng::derive(seed, rng::Stream::split));
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng::uniform_below(gen, i)]);
  }
  return order;
}

ordered_json trace_line(const DatasetItem& item, const EvalRecord& record,
                        bool is_calibration,
                        const std::optional<StoppingTrace>& trace) {
  ordered_json j;
  j["item_id"] = item.id;
  j["split"] = is_calibration ? "calibration" : "test";
  j["k"] = record.k;
  j["score_kind"] = to_string(record.score.kind);
  j["score"] = number_or_infinite(record.score.value);
  j["rank"] = number_or_infinite(record.rank_value);
  j["strength"] = record.strength;
  j["margin"] = record.margin;
  j["entropy"] = record.entropy;
  j["n_classes"] = record.counts.size();
  j["solvable"] = record.solvable;
  if (trace) {
    j["stopped_at"] = trace->stopped_at;
    j["triggered"] = trace->triggered;
  }
  return j;
}

CertifyResult finish_certify(Prepared prepared, const RunConfig& config) {
  const int succeeded =
      static_cast<int>(prepared.calibration.size() + prepared.test.size());
  if (prepared.attempted > 0 &&
      static_cast<double>(succeeded) / prepared.attempted <
          config.min_success_fraction) {
    throw std::runtime_error(
        "too many item failures: " +
        std::to_string(prepared.attempted - succeeded) + " of " +
        std::to_string(prepared.attempted));
  }
  if (prepared.calibration.empty() || prepared.test.empty()) {
    throw std::invalid_argument("both splits must be non-empty");
  }

  CertifyResult result;
  result.failures = std::move(prepared.failures);
  result.n_cal = static_cast<int>(prepared.calibration.size());
  result.n_test = static_cast<int>(prepared.test.size());

  const Rational reliability = reliability_level(prepared.calib_rank_scores);
  std::ostringstream config_material;
  config_material << "seed=" << config.seed << ";k=" << config.k
                  << ";score=" << to_string(config.score_kind)
                  << ";n_cal=" << result.n_cal << ";n_test=" << result.n_test;
  const std::string digest = sha256_hex(config_material.str());

  result.report.reliability_level = reliability;
  for (double alpha : config.alpha_grid) {
    Certificate cert = conformal_threshold(prepared.calib_scores, alpha);
    cert.reliability_level = reliability;
    cert.score_kind = config.score_kind;
    cert.seed = config.seed;
    cert.schema_version = config.schema_version;
    cert.config_digest = digest;
    result.report.rows.push_back(
        evaluate(prepared.test, cert, prepared.calibration_ids));
    result.certificates.push_back(std::move(cert));
  }

  if (!config.out_dir.empty()) {
    ordered_json cert_doc;
    cert_doc["schema_version"] = config.schema_version;
    cert_doc["score_kind"] = to_string(config.score_kind);
    cert_doc["seed"] = config.seed;
    cert_doc["k"] = config.k;
    cert_doc["n"] = result.n_cal;
    cert_doc["config_digest"] = digest;
    cert_doc["reliability_level"] = reliability_json(reliability);
    cert_doc["certificates"] = ordered_json::array();
    for (const Certificate& cert : result.certificates) {
      ordered_json c;
      c["alpha"] = cert.alpha;
      c["k_index"] = cert.k_index;
      c["m_star"] = number_or_infinite(cert.m_star);
      cert_doc["certificates"].push_back(c);
    }
    ordered_json cov_doc;
    cov_doc["schema_version"] = config.schema_version;
    cov_doc["score_kind"] = to_string(config.score_kind);
    cov_doc["seed"] = config.seed;
    cov_doc["reliability_level"] = reliability_json(reliability);
    cov_doc["rows"] = ordered_json::array();
    for (const CoverageRow& row : result.report.rows) {
      cov_doc["rows"].push_back(coverage_row_json(row));
    }

    result.certificate_path = config.out_dir / "certificate.json";
    result.coverage_path = config.out_dir / "coverage.json";
    result.traces_path = config.out_dir / "traces.jsonl";
    write_file_atomic(result.certificate_path, cert_doc.dump(2) + "\n");
    write_file_atomic(result.coverage_path, cov_doc.dump(2) + "\n");
    std::string traces;
    for (const ordered_json& line : prepared.trace_lines) {
      traces += line.dump();
      traces += "\n";
    }
    write_file_atomic(result.traces_path, traces);
  }
  return result;
}

}  // namespace

std::vector<DatasetItem> synthetic_items(int count,
                                         const std::string& prefix) {
  std::vector<DatasetItem> items;
  items.reserve(count);
  for (int i = 0; i < count; ++i) {
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%05d", prefix.c_str(), i);
    DatasetItem item;
    item.id = id;
    item.query = std::string("synthetic query ") + id;
    item.acceptable = {"c0"};
    item.canonicalizer = "verbatim";
    items.push_back(std::move(item));
  }
  return items;
}

CertifyResult certify(const std::vector<DatasetItem>& items, Backend& backend,
                      ResponseCache& cache, const RunConfig& config) {
  validate_config(config);
  if (items.size() < 2) {
    throw std::invalid_argument("certify requires at least 2 items");
  }
  const std::vector<std::size_t> order = split_order(items.size(), config.seed);
  std::size_t n_cal = config.n_cal == 0
                          ? items.size() / 2
                          : static_cast<std::size_t>(config.n_cal);
  std::size_t wanted = config.n_cal == 0
                           ? items.size()
                           : n_cal + static_cast<std::size_t>(config.n_test);
  if (wanted > items.size()) {
    throw std::invalid_argument("dataset smaller than n_cal + n_test");
  }

  const int k_fetch = std::max(config.k, config.k_max);
  Prepared prepared;
  for (std::size_t pos = 0; pos < wanted; ++pos) {
    const DatasetItem& item = items[order[pos]];
    const bool is_calibration = pos < n_cal;
    ++prepared.attempted;
    try {
      const Canonicalizer canon = item.make_canon();
      const std::vector<RawSample> all =
          fetch_samples(item, k_fetch, backend, cache);
      const std::vector<RawSample> used(all.begin(), all.begin() + config.k);
      const std::uint64_t item_hash = rng::hash_string(item.id);
      RankedConsensus consensus =
          aggregate(used, canon, rng::derive(config.seed, rng::Stream::tie_break,
                                             item_hash));
      const AcceptabilitySpec spec = item.spec();
      bool solvable = false;
      for (const RawSample& sample : all) {
        const CanonicalClass cls = canon(sample.text);
        for (const CanonicalClass& acceptable : spec.acceptable) {
          solvable |= cls == acceptable;
        }
      }
      auto u_gen =
          rng::engine(rng::derive(config.seed, rng::Stream::aps_u, item_hash));
      EvalRecord record = make_eval_record(consensus, spec, config.score_kind,
                                           rng::uniform01(u_gen), solvable);
      prepared.trace_lines.push_back(
          trace_line(item, record, is_calibration, std::nullopt));
      if (is_calibration) {
        prepared.calibration.push_back(record);
        prepared.calibration_ids.push_back(item.id);
        prepared.calib_scores.push_back(record.score);
        prepared.calib_rank_scores.push_back(
            Score{ScoreKind::rank, record.rank_value});
      } else {
        prepared.test.push_back(std::move(record));
      }
    } catch (const std::exception& e) {
      prepared.failures.push_back({item.id, e.what()});
    }
  }
  return finish_certify(std::move(prepared), config);
}

SequentialRunResult certify_sequential(const std::vector<DatasetItem>& items,
                                       Backend& backend, ResponseCache& cache,
                                       const RunConfig& config,
                                       const StoppingConfig& stopping) {
  validate_config(config);
  if (items.size() < 2) {
    throw std::invalid_argument("certify requires at least 2 items");
  }
  const std::vector<std::size_t> order = split_order(items.size(), config.seed);
  std::size_t n_cal = config.n_cal == 0
                          ? items.size() / 2
                          : static_cast<std::size_t>(config.n_cal);
  std::size_t wanted = config.n_cal == 0
                           ? items.size()
                           : n_cal + static_cast<std::size_t>(config.n_test);
  if (wanted > items.size()) {
    throw std::invalid_argument("dataset smaller than n_cal + n_test");
  }

  Prepared prepared;
  std::vector<StoppingTrace> traces;
  for (std::size_t pos = 0; pos < wanted; ++pos) {
    const DatasetItem& item = items[order[pos]];
    const bool is_calibration = pos < n_cal;
    ++prepared.attempted;
    try {
      const Canonicalizer canon = item.make_canon();
      // samples stream lazily through the cache, one index at a time
      int next_index = 0;
      SampleSource source = [&]() -> std::optional<std::string> {
        if (next_index >= stopping.k_max) return std::nullopt;
        std::vector<RawSample> one =
            fetch_samples(item, next_index + 1, backend, cache);
        return one[static_cast<std::size_t>(next_index++)].text;
      };
      const std::uint64_t item_hash = rng::hash_string(item.id);
      SequentialResult seq = run_sequential(
          item.id, source, canon, stopping,
          rng::derive(config.seed, rng::Stream::tie_break, item_hash));
      const AcceptabilitySpec spec = item.spec();
      // the solvable diagnostic can only see consumed samples here
      bool solvable = false;
      for (const ClassCount& entry : seq.consensus.classes) {
        for (const CanonicalClass& acceptable : spec.acceptable) {
          solvable |= entry.cls == acceptable;
        }
      }
      auto u_gen =
          rng::engine(rng::derive(config.seed, rng::Stream::aps_u, item_hash));
      EvalRecord record =
          make_eval_record(seq.consensus, spec, config.score_kind,
                           rng::uniform01(u_gen), solvable);
      prepared.trace_lines.push_back(
          trace_line(item, record, is_calibration, seq.trace));
      traces.push_back(std::move(seq.trace));
      if (is_calibration) {
        prepared.calibration.push_back(record);
        prepared.calibration_ids.push_back(item.id);
        prepared.calib_scores.push_back(record.score);
        prepared.calib_rank_scores.push_back(
            Score{ScoreKind::rank, record.rank_value});
      } else {
        prepared.test.push_back(std::move(record));
      }
    } catch (const std::exception& e) {
      prepared.failures.push_back({item.id, e.what()});
    }
  }
  SequentialRunResult result;
  result.savings = savings_report(traces, stopping.k_max);
  result.certify = finish_certify(std::move(prepared), config);
  return result;
}

std::vector<KSweepRow> sweep_k(const std::vector<DatasetItem>& items,
                               const std::vector<int>& ks, Backend& backend,
                               ResponseCache& cache, const RunConfig& config,
                               double alpha) {
  validate_config(config);
  if (ks.empty()) throw std::invalid_argument("sweep_k requires K values");
  const int k_max = *std::max_element(ks.begin(), ks.end());
  const std::vector<std::size_t> order = split_order(items.size(), config.seed);
  const std::size_t n_cal = items.size() / 2;

  // one fetch per item at the largest K; every sweep point reuses prefixes
  struct ItemSamples {
    const DatasetItem* item;
    std::vector<RawSample> samples;
    bool is_calibration;
  };
  std::vector<ItemSamples> fetched;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const DatasetItem& item = items[order[pos]];
    fetched.push_back({&item, fetch_samples(item, k_max, backend, cache),
                       pos < n_cal});
  }

  std::vector<KSweepRow> rows;
  for (int k : ks) {
    std::vector<Score> calib_scores;
    std::vector<EvalRecord> test;
    std::vector<std::string> calib_ids;
    long long mode_wrong = 0, test_count = 0;
    for (const ItemSamples& entry : fetched) {
      const Canonicalizer canon = entry.item->make_canon();
      const std::vector<RawSample> used(entry.samples.begin(),
                                        entry.samples.begin() + k);
      const std::uint64_t item_hash = rng::hash_string(entry.item->id);
      RankedConsensus consensus = aggregate(
          used, canon,
          rng::derive(config.seed, rng::Stream::tie_break, item_hash));
      const AcceptabilitySpec spec = entry.item->spec();
      bool solvable = false;
      for (const RawSample& sample : entry.samples) {
        const CanonicalClass cls = canon(sample.text);
        for (const CanonicalClass& acceptable : spec.acceptable) {
          solvable |= cls == acceptable;
        }
      }
      auto u_gen =
          rng::engine(rng::derive(config.seed, rng::Stream::aps_u, item_hash));
      EvalRecord record = make_eval_record(consensus, spec, config.score_kind,
                                           rng::uniform01(u_gen), solvable);
      if (entry.is_calibration) {
        calib_scores.push_back(record.score);
        calib_ids.push_back(entry.item->id);
      } else {
        ++test_count;
        mode_wrong += record.rank_value != 1.0;
        test.push_back(std::move(record));
      }
    }
    KSweepRow row;
    row.k = k;
    const Certificate cert = conformal_threshold(calib_scores, alpha);
    row.m_star = cert.m_star;
    row.coverage = evaluate(test, cert, calib_ids).coverage;
    row.mode_error =
        test_count == 0 ? 0.0
                        : static_cast<double>(mode_wrong) / test_count;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace relicert
