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

// Serial references against the OpenMP kernels.

#include <benchmark/benchmark.h>

#include "quest/engine.hpp"
#include "quest/metrics.hpp"
#include "quest/oracle.hpp"
#include "quest/reward.hpp"

using namespace quest;

namespace {

std::shared_ptr<const LanguageModel> lm_of_length(std::size_t max_length) {
  return std::make_shared<TabularLanguageModel>(
      TabularLanguageModel::random(Vocab::with_eos({"a", "b", "c"}), max_length, 7, 10.0));
}

GibbsTarget length_target() {
  GibbsTarget t;
  t.reward = std::make_shared<LengthGaussianReward>();
  t.beta = 0.5;
  return t;
}

void BM_ExactTarget(benchmark::State& state) {
  const auto lm = lm_of_length(static_cast<std::size_t>(state.range(0)));
  const auto target = length_target();
  const bool parallel = state.range(1) != 0;
  for (auto _ : state) {
    auto d = parallel ? exact_target(*lm, {}, target) : exact_target_serial(*lm, {}, target);
    benchmark::DoNotOptimize(d.log_z);
  }
}
BENCHMARK(BM_ExactTarget)->ArgsProduct({{8, 10}, {0, 1}})->ArgNames({"L", "parallel"})
    ->Unit(benchmark::kMillisecond);

void BM_DetailedBalance(benchmark::State& state) {
  const auto lm = lm_of_length(static_cast<std::size_t>(state.range(0)));
  const auto target = length_target();
  const ProposalSpec spec;
  const bool parallel = state.range(1) != 0;
  for (auto _ : state) {
    auto r = parallel ? detailed_balance_check(*lm, {}, target, spec)
                      : detailed_balance_check_serial(*lm, {}, target, spec);
    benchmark::DoNotOptimize(r.max_violation);
  }
}
BENCHMARK(BM_DetailedBalance)->ArgsProduct({{5, 6}, {0, 1}})->ArgNames({"L", "parallel"})
    ->Unit(benchmark::kMillisecond);

void BM_Chains(benchmark::State& state) {
  const auto lm = lm_of_length(5);
  const auto target = length_target();
  const ProposalSpec spec;
  const Prompt x;
  ChainJob job{lm.get(), &x, &target, &spec, {}};
  job.config.steps = 128;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(state.range(0)); ++s) seeds.push_back(s);
  const bool parallel = state.range(1) != 0;
  for (auto _ : state) {
    auto r = parallel ? run_parallel_chains(job, seeds) : run_chains_serial(job, seeds);
    benchmark::DoNotOptimize(r.data());
  }
}
BENCHMARK(BM_Chains)->ArgsProduct({{32, 128}, {0, 1}})->ArgNames({"chains", "parallel"})
    ->Unit(benchmark::kMillisecond);

void BM_Diversity(benchmark::State& state) {
  const auto lm = lm_of_length(12);
  Rng rng(1);
  std::vector<HypothesisSet> data(8);
  for (auto& set : data) {
    while (set.hypotheses.size() < static_cast<std::size_t>(state.range(0))) {
      auto y = lm->sample_continuation(Sequence{}, {}, 1.0, rng).suffix;
      if (!y.empty()) set.hypotheses.push_back(std::move(y));
    }
  }
  const bool parallel = state.range(1) != 0;
  for (auto _ : state) {
    double d = parallel ? pairwise_bleu_diversity(data) : pairwise_bleu_diversity_serial(data);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_Diversity)->ArgsProduct({{32, 128}, {0, 1}})->ArgNames({"hyps", "parallel"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
