// Copyright 2026 The Quest Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "quest/error.hpp"
#include "quest/oracle.hpp"

using namespace quest;
using quest::testing::abc;
using quest::testing::toy_lm;

namespace {

// r(y) = |y|.
struct LengthReward : RewardFn {
  std::string_view kind() const override { return "length"; }
  double score(const Prompt&, const Sequence& y) const override {
    return static_cast<double>(y.size());
  }
};

GibbsTarget length_is_reward(double beta) {
  GibbsTarget t;
  t.reward = std::make_shared<LengthReward>();
  t.beta = beta;
  return t;
}

}  // namespace

TEST_CASE("enumeration counts and order") {
  const auto one = enumerate_sequences(Vocab::with_eos({"a"}), 2);
  CHECK(one == std::vector<Sequence>{Sequence{}, Sequence{0}, Sequence{0, 0}});
  CHECK(enumerate_sequences(Vocab::with_eos({"a", "b"}), 2).size() == 7);
  const auto toy = enumerate_sequences(abc(), 5);
  CHECK(toy.size() == 364);
  CHECK(count_sequences(abc(), 5) == 364.0);
  CHECK(std::is_sorted(toy.begin(), toy.end()));
  try {
    enumerate_sequences(abc(), 20);
    FAIL("expected EnumerationLimitExceeded");
  } catch (const EnumerationLimitExceeded& e) {
    CHECK(e.states() == count_sequences(abc(), 20));
    CHECK(std::string(e.what()).find("5230176601") != std::string::npos);
  }
}

TEST_CASE("exact target special cases") {
  const auto lm = toy_lm();
  SUBCASE("constant reward, plain target: uniform") {
    const auto d = exact_target(*lm, {}, quest::testing::constant_target(0.5));
    for (double p : d.probabilities) CHECK(p == doctest::Approx(1.0 / 364.0));
  }
  SUBCASE("constant reward, kl target: the LM itself") {
    const auto d = exact_target(*lm, {},
                                quest::testing::constant_target(0.5, TargetVariant::kl_regularized, lm));
    for (std::size_t k = 0; k < d.states.size(); ++k) {
      CHECK(d.probabilities[k] ==
            doctest::Approx(std::exp(lm->sequence_logprob(d.states[k], {}, 1.0))).epsilon(1e-9));
    }
  }
  SUBCASE("two states with rewards (0, 1)") {
    const auto two = TabularLanguageModel::uniform(Vocab::with_eos({"a"}), 1);
    const auto d = exact_target(two, {}, length_is_reward(1.0));
    REQUIRE(d.states.size() == 2);
    CHECK(d.probabilities[0] == doctest::Approx(0.268941421369995).epsilon(1e-12));
    CHECK(d.probabilities[1] == doctest::Approx(0.731058578630005).epsilon(1e-12));
  }
  SUBCASE("probabilities sum to one") {
    for (double beta : {0.01, 0.1, 1.0, 10.0}) {
      const auto d = exact_target(*lm, {}, quest::testing::length_target(beta));
      double sum = 0.0;
      for (double p : d.probabilities) sum += p;
      CHECK(std::abs(sum - 1.0) < 1e-9);
      CHECK(d.find(Sequence{0, 1}) < d.states.size());
      CHECK(d.find(Sequence{0, 1, 2, 0, 1, 2}) == d.states.size());
    }
  }
}

TEST_CASE("exact target CSV") {
  const auto lm = toy_lm(2);
  const auto d = exact_target(*lm, {}, quest::testing::length_target(0.5));
  std::ostringstream out;
  d.write_csv(out, lm->vocab());
  const std::string csv = out.str();
  CHECK(csv.rfind("sequence,logprob_lm,reward,target_probability\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 14);
}

TEST_CASE("detailed balance holds per index component") {
  const auto lm4 = toy_lm(4);
  const auto lm5 = toy_lm(5);
  const auto target = quest::testing::length_target(0.5);

  ProposalSpec suffix;
  CHECK(detailed_balance_check(*lm4, {}, target, suffix).max_violation < 1e-9);
  const auto full = detailed_balance_check(*lm5, {}, target, suffix);
  CHECK(full.max_violation < 1e-9);
  CHECK(full.pairs_checked > 0);

  ProposalSpec tempered;
  tempered.temperature = 0.6;
  tempered.index = IndexDistribution::custom({1.0, 3.0, 0.5});
  CHECK(detailed_balance_check(*lm4, {}, target, tempered).max_violation < 1e-9);

  ProposalSpec uniform;
  uniform.kind = ProposalKind::token_uniform;
  CHECK(detailed_balance_check(*lm4, {}, target, uniform).max_violation < 1e-9);

  ProposalSpec conditional;
  conditional.kind = ProposalKind::token_full_conditional;
  conditional.top_k = 2;
  CHECK(detailed_balance_check(*lm4, {}, target, conditional).max_violation < 1e-9);

  const auto kl = quest::testing::length_target(0.5, TargetVariant::kl_regularized, lm4);
  CHECK(detailed_balance_check(*lm4, {}, kl, suffix).max_violation < 1e-9);
  CHECK(detailed_balance_check(*lm4, {}, kl, tempered).max_violation < 1e-9);
}

TEST_CASE("a 1% corrupted acceptance fails the check") {
  const auto lm = toy_lm(4);
  const auto target = quest::testing::length_target(0.5);
  DetailedBalanceOptions corrupt;
  corrupt.alpha_scale = 1.01;
  const auto report = detailed_balance_check(*lm, {}, target, ProposalSpec{}, corrupt);
  CHECK_FALSE(report.passed(1e-9));
  CHECK(report.max_violation > 1e-6);
}

TEST_CASE("the kernel leaves the target stationary") {
  const auto lm = toy_lm(4);
  for (const auto& target : {quest::testing::length_target(0.5),
                             quest::testing::length_target(0.5, TargetVariant::kl_regularized, lm)}) {
    for (ProposalKind kind : {ProposalKind::suffix_resample, ProposalKind::token_uniform}) {
      if (target.variant == TargetVariant::kl_regularized && kind != ProposalKind::suffix_resample) {
        continue;
      }
      ProposalSpec spec;
      spec.kind = kind;
      const auto d = exact_target(*lm, {}, target);
      const auto k = transition_matrix(*lm, {}, target, spec, d);
      for (const auto& row : k) {
        double sum = 0.0;
        for (double v : row) {
          CHECK(v >= -1e-12);
          sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
      CHECK(stationarity_residual(k, d.probabilities) < 1e-8);
    }
  }
}

TEST_CASE("truncated Gibbs resampling") {
  const auto lm = toy_lm();
  Rng rng(3);
  SUBCASE("identical inputs") {
    const std::vector<Hypothesis> same(5, Hypothesis{Sequence{1, 2}, std::nullopt, std::nullopt});
    for (const auto& h : truncated_gibbs_resample(same, *lm, {}, quest::testing::length_target(0.5),
                                                  rng, 20)) {
      CHECK(h.sequence == Sequence{1, 2});
    }
  }
  SUBCASE("two samples with rewards (0, 1)") {
    const std::vector<Hypothesis> two{{Sequence{}, std::nullopt, std::nullopt},
                                      {Sequence{0}, std::nullopt, std::nullopt}};
    const auto w = truncated_gibbs_weights(two, *lm, {}, length_is_reward(1.0));
    CHECK(w.at(Sequence{}) == doctest::Approx(0.268941421369995).epsilon(1e-12));
    CHECK(w.at(Sequence{0}) == doctest::Approx(0.731058578630005).epsilon(1e-12));
    const auto flat = truncated_gibbs_weights(two, *lm, {}, length_is_reward(1e12));
    CHECK(flat.at(Sequence{}) == doctest::Approx(0.5));
  }
  SUBCASE("an exhaustive sample set reproduces the exact target") {
    const auto target = quest::testing::length_target(0.5);
    const auto d = exact_target(*lm, {}, target);
    std::vector<Hypothesis> all;
    for (const auto& s : d.states) all.push_back({s, std::nullopt, std::nullopt});
    const std::size_t n = 100000;
    std::map<Sequence, std::size_t> counts;
    for (const auto& h : truncated_gibbs_resample(all, *lm, {}, target, rng, n)) counts[h.sequence]++;
    CHECK(quest::testing::chi_square_ok(quest::testing::chi_square(d.histogram(), counts, n)));
  }
  CHECK_THROWS_AS(truncated_gibbs_weights({}, *lm, {}, quest::testing::length_target(0.5)),
                  InvalidArgument);
}

TEST_CASE("total variation distance") {
  const Histogram p{{Sequence{0}, 0.8}, {Sequence{1}, 0.2}};
  const Histogram q{{Sequence{0}, 0.5}, {Sequence{1}, 0.5}};
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(p, q) == doctest::Approx(0.3));
  CHECK(tv_distance(p, Histogram{{Sequence{2}, 1.0}}) == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_histogram = [&] {
    Histogram h;
    double total = 0.0;
    for (TokenId t = 0; t < 6; ++t) total += h[Sequence{t}] = u(rng);
    for (auto& [s, v] : h) v /= total;
    return h;
  };
  for (int k = 0; k < 100; ++k) {
    const auto a = random_histogram(), b = random_histogram(), c = random_histogram();
    CHECK(tv_distance(a, b) == doctest::Approx(tv_distance(b, a)));
    CHECK(tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12);
    CHECK(tv_distance(a, b) > 0.0);
  }
}

TEST_CASE("empirical histograms normalize") {
  const auto h = empirical_histogram(std::vector<Sequence>{Sequence{0}, Sequence{0}, Sequence{1},
                                                           Sequence{}});
  CHECK(h.at(Sequence{0}) == 0.5);
  CHECK(h.at(Sequence{}) == 0.25);
}
