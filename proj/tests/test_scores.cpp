#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <vector>

#include "relicert/rng.hpp"
#include "relicert/scores.hpp"
#include "relicert/synthetic.hpp"

using namespace relicert;

TEST_SUITE_BEGIN("scores");

namespace {

RankedConsensus from_counts(std::vector<std::pair<std::string, int>> counts,
                            std::uint64_t tie_seed = 1,
                            const std::string& id = "q1") {
  std::vector<ClassCount> list;
  for (auto& [key, count] : counts) {
    list.push_back({{key, CanonKind::verbatim}, count});
  }
  return consensus_from_counts(id, std::move(list), tie_seed);
}

AcceptabilitySpec accept(std::vector<std::string> keys,
                         const std::string& id = "q1") {
  AcceptabilitySpec spec;
  spec.item_id = id;
  for (auto& key : keys) spec.acceptable.push_back({key, CanonKind::verbatim});
  return spec;
}

}  // namespace

TEST_CASE("rank score: top pick, min rule, unobserved") {
  const RankedConsensus c = from_counts({{"42", 8}, {"37", 2}});
  CHECK(score_rank(c, accept({"42"})).value == 1.0);
  CHECK(score_rank(c, accept({"37", "99"})).value == 2.0);  // min over {2, inf}
  CHECK(score_rank(c, accept({"99"})).value == kInfinite);
}

TEST_CASE("score id mismatch is an input error") {
  const RankedConsensus c = from_counts({{"42", 8}, {"37", 2}});
  CHECK_THROWS_AS(score_rank(c, accept({"42"}, "other")),
                  std::invalid_argument);
}

TEST_CASE("cumulative-probability score with prefix-sum oracle") {
  const RankedConsensus two = from_counts({{"42", 8}, {"37", 2}});
  CHECK(score_cumprob(two, accept({"42"})).value == doctest::Approx(0.8));
  CHECK(score_cumprob(two, accept({"37"})).value == doctest::Approx(1.0));

  const RankedConsensus three = from_counts({{"a", 5}, {"b", 3}, {"c", 2}});
  // independent prefix-sum oracle: ranked counts are 5,3,2; the acceptable
  // class "b" sits at rank 2, so the mass is (5+3)/10
  long long prefix = 0;
  for (int count : {5, 3}) prefix += count;
  CHECK(score_cumprob(three, accept({"b"})).value ==
        doctest::Approx(static_cast<double>(prefix) / 10.0));
  CHECK(score_cumprob(three, accept({"b"})).value == doctest::Approx(0.8));
  CHECK(score_cumprob(three, accept({"zzz"})).value == kInfinite);
}

TEST_CASE("lac score") {
  const RankedConsensus c = from_counts({{"42", 8}, {"37", 2}});
  CHECK(score_lac(c, accept({"42"})).value == doctest::Approx(0.2));
  const RankedConsensus all = from_counts({{"42", 10}});
  CHECK(score_lac(all, accept({"42"})).value == 0.0);
  CHECK(score_lac(c, accept({"99"})).value == kInfinite);
}

TEST_CASE("aps boundaries and linearity in u") {
  const RankedConsensus c = from_counts({{"42", 8}, {"37", 2}});
  const AcceptabilitySpec spec = accept({"42"});
  CHECK(score_aps(c, spec, 1.0).value == doctest::Approx(0.8));
  CHECK(score_aps(c, spec, 0.0).value == 0.0);
  CHECK(score_aps(c, spec, 0.5).value == doctest::Approx(0.4));
  // linearity at 11 grid points: prefix_excl + u * mass(rank) is affine in u
  for (int i = 0; i <= 10; ++i) {
    const double u = i / 10.0;
    CHECK(score_aps(c, spec, u).value ==
          doctest::Approx(u * 0.8).epsilon(1e-15));
  }
  CHECK_THROWS_AS(score_aps(c, spec, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(score_aps(c, spec, 1.5), std::invalid_argument);
}

TEST_CASE("aps(u=1) equals cumprob bitwise; aps(u=0) is the exclusive prefix") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n_classes = 1 + static_cast<int>(gen() % 6);
    std::vector<std::pair<std::string, int>> counts;
    for (int c = 0; c < n_classes; ++c) {
      counts.push_back({"k" + std::to_string(c),
                        1 + static_cast<int>(gen() % 9)});
    }
    const RankedConsensus consensus = from_counts(counts, gen());
    // acceptable class: sometimes observed, sometimes not
    const std::string target = gen() % 4 == 0
                                   ? "unobserved"
                                   : "k" + std::to_string(gen() % n_classes);
    const AcceptabilitySpec spec = accept({target});
    const Score cumprob = score_cumprob(consensus, spec);
    const Score aps1 = score_aps(consensus, spec, 1.0);
    CHECK(aps1.value == cumprob.value);  // exact, including infinities

    const Score aps0 = score_aps(consensus, spec, 0.0);
    const Score rank = score_rank(consensus, spec);
    if (rank.value == kInfinite) {
      CHECK(aps0.value == kInfinite);
    } else {
      long long prefix_excl = 0;
      for (int r = 0; r + 1 < static_cast<int>(rank.value); ++r) {
        prefix_excl += consensus.classes[r].count;
      }
      CHECK(aps0.value ==
            static_cast<double>(prefix_excl) / consensus.k);  // exact
    }
  }
}

TEST_CASE("monotone consistency: rank 1 iff lac = 1 - strength iff mode") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int n_classes = 1 + static_cast<int>(gen() % 5);
    std::vector<std::pair<std::string, int>> counts;
    for (int c = 0; c < n_classes; ++c) {
      counts.push_back({"k" + std::to_string(c),
                        1 + static_cast<int>(gen() % 9)});
    }
    const RankedConsensus consensus = from_counts(counts, gen());
    const AcceptabilitySpec spec =
        accept({"k" + std::to_string(gen() % n_classes)});
    const Score rank = score_rank(consensus, spec);
    const Score lac = score_lac(consensus, spec);
    const bool is_mode =
        consensus.classes[0].cls == spec.acceptable.front();
    CHECK((rank.value == 1.0) == is_mode);
    if (rank.value == 1.0) {
      CHECK(lac.value == doctest::Approx(1.0 - consensus.strength));
    }
  }
}

TEST_CASE("all score kinds are infinite together") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int n_classes = 1 + static_cast<int>(gen() % 5);
    std::vector<std::pair<std::string, int>> counts;
    for (int c = 0; c < n_classes; ++c) {
      counts.push_back({"k" + std::to_string(c),
                        1 + static_cast<int>(gen() % 9)});
    }
    const RankedConsensus consensus = from_counts(counts, gen());
    const std::string target = gen() % 2 == 0
                                   ? "unobserved"
                                   : "k" + std::to_string(gen() % n_classes);
    const AcceptabilitySpec spec = accept({target});
    const bool rank_inf = score_rank(consensus, spec).infinite();
    CHECK(score_cumprob(consensus, spec).infinite() == rank_inf);
    CHECK(score_lac(consensus, spec).infinite() == rank_inf);
    CHECK(score_aps(consensus, spec, 0.5).infinite() == rank_inf);
  }
}

TEST_CASE("higher-quality agents give stochastically smaller rank scores") {
  // Kolmogorov-Smirnov direction check at the distribution level: for every
  // threshold r, P(rank_A <= r) must not fall below P(rank_B <= r) beyond
  // Monte Carlo noise when p_star(A) > p_star(B).
  const SyntheticAgent strong = make_agent(0.8);
  const SyntheticAgent weak = make_agent(0.6);
  const int draws = 10000;
  const int k = 10;
  auto rank_counts = [&](const SyntheticAgent& agent, std::uint64_t seed) {
    std::vector<int> counts(6, 0);  // ranks 1..4, bucket 5 = deeper, 5=inf
    auto gen = rng::engine(seed);
    const AcceptabilitySpec spec = accept({"c0"}, "syn");
    for (int t = 0; t < draws; ++t) {
      const std::vector<int> draw =
          multinomial_counts(agent.probs, k, gen);
      std::vector<ClassCount> observed;
      for (std::size_t i = 0; i < draw.size(); ++i) {
        if (draw[i] > 0) observed.push_back({agent.classes[i], draw[i]});
      }
      const RankedConsensus consensus =
          consensus_from_counts("syn", std::move(observed), gen());
      const double rank = score_rank(consensus, spec).value;
      if (rank == kInfinite) ++counts[5];
      else ++counts[std::min(4, static_cast<int>(rank) - 1)];
    }
    return counts;
  };
  const std::vector<int> strong_counts = rank_counts(strong, 111);
  const std::vector<int> weak_counts = rank_counts(weak, 222);
  double cdf_strong = 0.0, cdf_weak = 0.0;
  const double slack = 3.0 * std::sqrt(0.25 / draws) * 2.0;
  for (int r = 0; r < 5; ++r) {
    cdf_strong += static_cast<double>(strong_counts[r]) / draws;
    cdf_weak += static_cast<double>(weak_counts[r]) / draws;
    CHECK(cdf_strong >= cdf_weak - slack);
  }
}

TEST_CASE("score kind names round-trip") {
  for (ScoreKind kind : {ScoreKind::rank, ScoreKind::cumprob, ScoreKind::lac,
                         ScoreKind::aps}) {
    CHECK(score_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(score_kind_from_string("nope"), std::invalid_argument);
}

TEST_SUITE_END();
