#pragma once
// Nonconformity scores over a ranked consensus: how surprising is the
// acceptable answer under the model's own vote? Four families:
//   rank    -- 1-based rank of the best acceptable class (integer-valued)
//   cumprob -- cumulative frequency mass down to that rank
//   lac     -- 1 minus the acceptable class frequency
//   aps     -- cumulative mass with a randomized inclusion boundary
// All are kInfinite together when no acceptable class was observed.

#include <string>

#include "relicert/consensus.hpp"

namespace relicert {

enum class ScoreKind { rank, cumprob, lac, aps };

const char* to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

struct Score {
  ScoreKind kind = ScoreKind::rank;
  double value = kInfinite;

  bool infinite() const { return value == kInfinite; }
};

// Minimum rank over the acceptable classes (the multi-acceptable min rule);
// kInfinite when none is observed. Spec id mismatch is an input error.
Score score_rank(const RankedConsensus& consensus,
                 const AcceptabilitySpec& spec);

// Sum of ranked frequencies through the best acceptable class's rank.
Score score_cumprob(const RankedConsensus& consensus,
                    const AcceptabilitySpec& spec);

// 1 - frequency of the best (highest-count) acceptable class.
Score score_lac(const RankedConsensus& consensus,
                const AcceptabilitySpec& spec);

// Cumulative mass strictly above the best acceptable rank, plus u times the
// mass at that rank; u in [0, 1] is supplied by the caller (seeded upstream).
// score_aps(..., 1) equals score_cumprob bit-for-bit.
Score score_aps(const RankedConsensus& consensus,
                const AcceptabilitySpec& spec, double u);

// Dispatch by kind; u is only consulted for aps.
Score compute_score(ScoreKind kind, const RankedConsensus& consensus,
                    const AcceptabilitySpec& spec, double u = 1.0);

}  // namespace relicert
