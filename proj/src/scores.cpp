#include "relicert/scores.hpp"

#include <stdexcept>

namespace relicert {
namespace {

void check_ids(const RankedConsensus& consensus,
               const AcceptabilitySpec& spec) {
  if (spec.item_id != consensus.item_id) {
    throw std::invalid_argument("score: spec item_id '" + spec.item_id +
                                "' does not match consensus item_id '" +
                                consensus.item_id + "'");
  }
  if (spec.acceptable.empty()) {
    throw std::invalid_argument("score: acceptable set must be non-empty");
  }
}

// 0-based position of the best (minimum-rank) acceptable class, or -1.
int best_acceptable_position(const RankedConsensus& consensus,
                             const AcceptabilitySpec& spec) {
  for (std::size_t r = 0; r < consensus.classes.size(); ++r) {
    for (const auto& acceptable : spec.acceptable) {
      if (consensus.classes[r].cls == acceptable) return static_cast<int>(r);
    }
  }
  return -1;
}

}  // namespace

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::rank: return "rank";
    case ScoreKind::cumprob: return "cumprob";
    case ScoreKind::lac: return "lac";
    case ScoreKind::aps: return "aps";
  }
  return "rank";
}

ScoreKind score_kind_from_string(const std::string& name) {
  if (name == "rank") return ScoreKind::rank;
  if (name == "cumprob") return ScoreKind::cumprob;
  if (name == "lac") return ScoreKind::lac;
  if (name == "aps") return ScoreKind::aps;
  throw std::invalid_argument("unknown score kind: " + name);
}

Score score_rank(const RankedConsensus& consensus,
                 const AcceptabilitySpec& spec) {
  check_ids(consensus, spec);
  const int pos = best_acceptable_position(consensus, spec);
  if (pos < 0) return {ScoreKind::rank, kInfinite};
  return {ScoreKind::rank, static_cast<double>(pos + 1)};
}

Score score_cumprob(const RankedConsensus& consensus,
                    const AcceptabilitySpec& spec) {
  check_ids(consensus, spec);
  const int pos = best_acceptable_position(consensus, spec);
  if (pos < 0) return {ScoreKind::cumprob, kInfinite};
  long long prefix = 0;
  for (int r = 0; r <= pos; ++r) prefix += consensus.classes[r].count;
  return {ScoreKind::cumprob,
          static_cast<double>(prefix) / static_cast<double>(consensus.k)};
}

Score score_lac(const RankedConsensus& consensus,
                const AcceptabilitySpec& spec) {
  check_ids(consensus, spec);
  const int pos = best_acceptable_position(consensus, spec);
  if (pos < 0) return {ScoreKind::lac, kInfinite};
  return {ScoreKind::lac,
          1.0 - static_cast<double>(consensus.classes[pos].count) /
                    static_cast<double>(consensus.k)};
}

Score score_aps(const RankedConsensus& consensus,
                const AcceptabilitySpec& spec, double u) {
  check_ids(consensus, spec);
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::invalid_argument("aps randomizer u must lie in [0, 1]");
  }
  const int pos = best_acceptable_position(consensus, spec);
  if (pos < 0) return {ScoreKind::aps, kInfinite};
  long long prefix_excl = 0;
  for (int r = 0; r < pos; ++r) prefix_excl += consensus.classes[r].count;
  // Integer prefix plus u * boundary count, one division: exact for u = 1
  // (matches score_cumprob bitwise) and exact for u = 0.
  const double numer = static_cast<double>(prefix_excl) +
                       u * static_cast<double>(consensus.classes[pos].count);
  return {ScoreKind::aps, numer / static_cast<double>(consensus.k)};
}

Score compute_score(ScoreKind kind, const RankedConsensus& consensus,
                    const AcceptabilitySpec& spec, double u) {
  switch (kind) {
    case ScoreKind::rank: return score_rank(consensus, spec);
    case ScoreKind::cumprob: return score_cumprob(consensus, spec);
    case ScoreKind::lac: return score_lac(consensus, spec);
    case ScoreKind::aps: return score_aps(consensus, spec, u);
  }
  throw std::logic_error("unreachable score kind");
}

}  // namespace relicert
