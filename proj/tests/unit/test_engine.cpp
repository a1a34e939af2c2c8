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

#include "fixtures.hpp"
#include "quest/engine.hpp"
#include "quest/error.hpp"
#include "quest/metrics.hpp"

using namespace quest;
using quest::testing::abc;
using quest::testing::toy_lm;

namespace {

ProposalOutcome symmetric(const Sequence& candidate, std::size_t index) {
  ProposalOutcome p;
  p.candidate = candidate;
  p.index = index;
  p.forward_logprob = -1.3;
  p.reverse_logprob = -1.3;
  return p;
}

Hypothesis hyp(Sequence s, double reward, std::optional<double> lm = std::nullopt) {
  return Hypothesis{std::move(s), lm, reward};
}

void check_same(const ChainTrace& a, const ChainTrace& b) {
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.initial.sequence == b.initial.sequence);
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    CHECK(a.steps[t].state == b.steps[t].state);
    CHECK(a.steps[t].candidate == b.steps[t].candidate);
    CHECK(a.steps[t].alpha == b.steps[t].alpha);
    CHECK(a.steps[t].index == b.steps[t].index);
    CHECK(a.steps[t].cumulative_tokens == b.steps[t].cumulative_tokens);
  }
}

}  // namespace

TEST_CASE("plain acceptance examples") {
  const auto target = quest::testing::length_target(1.0);
  const auto u = IndexDistribution::uniform();
  const Sequence y{0, 1};
  CHECK(acceptance_plain(symmetric(y, 1), hyp(y, 0.3), hyp(y, 0.3), target, u) == 1.0);
  CHECK(acceptance_plain(symmetric(Sequence{0, 2}, 2), hyp(Sequence{0, 2}, 0.0), hyp(y, 0.5),
                         target, u) == doctest::Approx(0.606530659712633).epsilon(1e-12));
  auto impossible = symmetric(Sequence{0, 2}, 2);
  impossible.reverse_logprob = -INFINITY;
  CHECK(acceptance_plain(impossible, hyp(Sequence{0, 2}, 9.0), hyp(y, 0.0), target, u) == 0.0);

  const auto cold = quest::testing::length_target(0.01);
  CHECK(acceptance_plain(symmetric(Sequence{0, 2}, 2), hyp(Sequence{0, 2}, -1.0), hyp(y, 0.0),
                         cold, u) < 1e-40);
}

TEST_CASE("simplified acceptance examples") {
  const auto lm = toy_lm();
  const auto target = quest::testing::length_target(1.0, TargetVariant::kl_regularized, lm);
  const auto u = IndexDistribution::uniform();
  const Sequence y{0, 1, 2};
  CHECK(acceptance_rlhf(symmetric(Sequence{0, 2, 2}, 2), hyp(Sequence{0, 2, 2}, 0.4),
                        hyp(y, 0.4), target, u) == 1.0);
  CHECK(acceptance_rlhf(symmetric(Sequence{0, 2, 2}, 2), hyp(Sequence{0, 2, 2}, 2.0),
                        hyp(y, 0.0), target, u) == 1.0);
  const Sequence ten(std::vector<TokenId>(10, 0));
  const Sequence five(std::vector<TokenId>(5, 1));
  CHECK(acceptance_rlhf(symmetric(five, 1), hyp(five, -1.0), hyp(ten, 0.0), target, u) ==
        doctest::Approx(0.735758882342885).epsilon(1e-12));
}

TEST_CASE("plain acceptance on r~ equals the simplified criterion on r") {
  const auto lm = toy_lm();
  const auto states = enumerate_sequences(lm->vocab(), lm->max_length());
  std::mt19937_64 pick(123);
  const ProposalSpec spec;
  for (double beta : {0.05, 0.5, 2.0}) {
    const auto base = std::make_shared<LengthGaussianReward>();
    const auto rlhf = quest::testing::length_target(beta, TargetVariant::kl_regularized, lm);
    GibbsTarget plain;
    plain.reward = kl_regularized_reward(lm, base, beta);
    plain.beta = 1.0;
    std::size_t checked = 0;
    while (checked < 1000) {
      const Sequence& a = states[pick() % states.size()];
      const std::size_t i = 1 + pick() % std::max<std::size_t>(a.size(), 1);
      const Sequence prefix = a.prefix(i - 1);
      const auto& tail = states[pick() % states.size()];
      if (prefix.size() + tail.size() > lm->max_length()) continue;
      const Sequence b = prefix.concat(tail);
      const auto p = score_suffix_move(*lm, a, b, i, {}, spec);
      const double x = acceptance_plain(p, hyp(b, plain.reward->score({}, b)),
                                        hyp(a, plain.reward->score({}, a)), plain, spec.index);
      const double y = acceptance_rlhf(p, hyp(b, base->score({}, b)), hyp(a, base->score({}, a)),
                                       rlhf, spec.index);
      CHECK(std::abs(x - y) < 1e-9);
      ++checked;
    }
  }
}

TEST_CASE("kl target with tempered proposals uses the general ratio") {
  const auto lm = toy_lm();
  const auto target = quest::testing::length_target(0.5, TargetVariant::kl_regularized, lm);
  ProposalSpec spec;
  spec.temperature = 0.6;
  CHECK(needs_lm_logprob_for_acceptance(target, spec));
  const Sequence a{0, 1, 2}, b{0, 2};
  const auto p = score_suffix_move(*lm, a, b, 2, {}, spec);
  const LengthGaussianReward r;
  const Hypothesis ha{a, lm->sequence_logprob(a, {}, 1.0), r.score({}, a)};
  const Hypothesis hb{b, lm->sequence_logprob(b, {}, 1.0), r.score({}, b)};
  GibbsTarget plain;
  plain.reward = kl_regularized_reward(lm, std::make_shared<LengthGaussianReward>(), 0.5);
  plain.beta = 1.0;
  const double expected = acceptance_plain(p, hyp(b, plain.reward->score({}, b)),
                                           hyp(a, plain.reward->score({}, a)), plain, spec.index);
  CHECK(chain_acceptance(target, spec, p, hb, ha) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(chain_acceptance(target, spec, p, hyp(b, 0.0), hyp(a, 0.0)), InvalidArgument);
}

TEST_CASE("acceptance is non-decreasing in the candidate reward") {
  const auto target = quest::testing::length_target(0.3);
  const auto u = IndexDistribution::uniform();
  const Sequence a{0, 1, 2}, b{0, 2};
  ProposalOutcome p = symmetric(b, 2);
  p.forward_logprob = -0.4;
  p.reverse_logprob = -2.2;
  double prev = 0.0;
  for (double r = -5.0; r <= 5.0; r += 0.05) {
    const double alpha = acceptance_plain(p, hyp(b, r), hyp(a, 0.0), target, u);
    CHECK(alpha >= prev);
    prev = alpha;
  }
}

TEST_CASE("chain invariants") {
  const auto lm = toy_lm();
  const auto target = quest::testing::length_target(0.5);
  for (ProposalKind kind : {ProposalKind::suffix_resample, ProposalKind::token_uniform,
                            ProposalKind::token_full_conditional}) {
    ProposalSpec spec;
    spec.kind = kind;
    spec.temperature = kind == ProposalKind::suffix_resample ? 0.8 : 1.0;
    ChainConfig config;
    config.steps = 400;
    config.seed = 17;
    const auto trace = run_chain(*lm, {}, target, spec, config);
    REQUIRE(trace.steps.size() == 400);
    Sequence state = trace.initial.sequence;
    std::size_t cumulative = trace.initial_tokens;
    for (const auto& s : trace.steps) {
      CHECK(s.alpha >= 0.0);
      CHECK(s.alpha <= 1.0);
      if (s.accepted) {
        CHECK(s.state == s.candidate);
      } else {
        CHECK(s.state == state);
      }
      CHECK(s.reward == target.reward->score({}, s.state));
      CHECK(s.lm_logprob == lm->sequence_logprob(s.state, {}, 1.0));
      cumulative += s.tokens_generated;
      CHECK(s.cumulative_tokens == cumulative);
      state = s.state;
    }
    CHECK(token_cost(trace) == cumulative);
    check_same(trace, run_chain(*lm, {}, target, spec, config));
  }
}

TEST_CASE("chain views") {
  const auto lm = toy_lm();
  ChainConfig config;
  config.steps = 50;
  config.seed = 3;
  const auto trace = run_chain(*lm, {}, quest::testing::length_target(0.5), ProposalSpec{}, config);
  const auto canonical = trace.canonical_states();
  CHECK(canonical.size() == 51);
  CHECK(canonical.front() == trace.initial.sequence);
  CHECK(trace.canonical_samples(10).size() == 40);
  const auto accepted = trace.accepted_states();
  CHECK(accepted.size() == trace.accepted_count() + 1);
  CHECK(trace.accepted_states(1).size() == trace.accepted_count());

  ChainConfig bad = config;
  bad.burn_in = 50;
  CHECK_THROWS_AS(run_chain(*lm, {}, quest::testing::length_target(0.5), ProposalSpec{}, bad),
                  InvalidArgument);
}

TEST_CASE("constant reward under the kl target accepts every equal-length move") {
  const auto lm = std::make_shared<TabularLanguageModel>(TabularLanguageModel::fixed_length(abc(), 6));
  const auto target = quest::testing::constant_target(0.5, TargetVariant::kl_regularized, lm);
  ChainConfig config;
  config.steps = 200;
  const auto trace = run_chain(*lm, {}, target, ProposalSpec{}, config);
  for (const auto& s : trace.steps) {
    CHECK(s.alpha == 1.0);
    CHECK(s.accepted);
  }
}

TEST_CASE("the kl target rejects token-level proposals") {
  const auto lm = toy_lm();
  const auto target = quest::testing::length_target(0.5, TargetVariant::kl_regularized, lm);
  ProposalSpec spec;
  spec.kind = ProposalKind::token_uniform;
  CHECK_THROWS_AS(run_chain(*lm, {}, target, spec, ChainConfig{}), InvalidArgument);
}

TEST_CASE("token-level chains stay put on the empty sequence") {
  const auto lm = TabularLanguageModel::deterministic(abc(), Sequence{});
  ProposalSpec spec;
  spec.kind = ProposalKind::token_uniform;
  ChainConfig config;
  config.steps = 5;
  const auto trace = run_chain(lm, {}, quest::testing::length_target(0.5), spec, config);
  for (const auto& s : trace.steps) {
    CHECK(s.state.empty());
    CHECK(s.alpha == 1.0);
    CHECK(s.tokens_generated == 0);
  }
}

TEST_CASE("ancestral sampling") {
  Rng rng(5);
  const auto det = TabularLanguageModel::deterministic(abc(), Sequence{2, 0});
  for (const auto& h : ancestral_sample(det, {}, 1.0, 20, rng)) CHECK(h.sequence == Sequence{2, 0});
  CHECK_THROWS_AS(ancestral_sample(det, {}, 1.0, 0, rng), InvalidArgument);

  const auto geo = TabularLanguageModel::uniform(Vocab::with_eos({"a"}), 30);
  const std::size_t n = 100000;
  std::map<Sequence, std::size_t> counts;
  for (const auto& h : ancestral_sample(geo, {}, 1.0, n, rng)) counts[h.sequence]++;
  std::map<Sequence, double> probs;
  for (std::size_t len = 0; len <= 30; ++len) {
    const Sequence s{std::vector<TokenId>(len, 0)};
    probs[s] = std::exp(geo.sequence_logprob(s, {}, 1.0));
  }
  CHECK(probs[Sequence{}] == doctest::Approx(0.5));
  CHECK(probs[Sequence{0}] == doctest::Approx(0.25));
  CHECK(quest::testing::chi_square_ok(quest::testing::chi_square(probs, counts, n)));

  const auto fixed = TabularLanguageModel::fixed_length(abc(), 7);
  CHECK(ancestral_token_cost(ancestral_sample(fixed, {}, 0.9, 128, rng)) == 128 * 7);
}

TEST_CASE("token cost of full regeneration is 2N for one step") {
  const auto lm = TabularLanguageModel::fixed_length(abc(), 9);
  ProposalSpec spec;
  spec.index = IndexDistribution::custom({1.0, 0.0});
  ChainConfig config;
  config.steps = 1;
  const auto trace = run_chain(lm, {}, quest::testing::length_target(0.5), spec, config);
  CHECK(token_cost(trace) == 18);
}

TEST_CASE("parallel chains match serial chains and single runs") {
  const auto lm = toy_lm();
  const auto target = quest::testing::length_target(0.5);
  const Prompt x;
  const ProposalSpec spec;
  ChainJob job{lm.get(), &x, &target, &spec, ChainConfig{}};
  job.config.steps = 60;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7};
  const auto serial = run_chains_serial(job, seeds);
  for (int jobs : {1, 2, 4}) {
    const auto par = run_parallel_chains(job, seeds, jobs);
    REQUIRE(par.size() == seeds.size());
    for (std::size_t k = 0; k < seeds.size(); ++k) check_same(par[k].trace, serial[k].trace);
  }
  ChainConfig one = job.config;
  one.seed = 1;
  check_same(run_parallel_chains(job, {1})[0].trace, run_chain(*lm, x, target, spec, one));
}
