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

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "quest/engine.hpp"
#include "quest/reward.hpp"

namespace quest {

struct HypothesisSet {
  Prompt prompt;
  std::vector<Sequence> hypotheses;
  std::optional<Sequence> reference;
};

// Macro average over sets of the mean scorer value within each set.
double mean_quality(const std::vector<HypothesisSet>& dataset,
                    const RewardFn& scorer);

// Sentence BLEU with orders 1..min(4, |hyp|, |ref|), uniform weights,
// brevity penalty exp(1 - |ref|/|hyp|) when |hyp| < |ref|, and "exp"
// smoothing: the k-th order with zero matches gets precision
// 1 / (2^k * number of hypothesis n-grams of that order).
double sentence_bleu(const Sequence& hypothesis, const Sequence& reference);

// 1 - macro average over sets of mean BLEU over ordered pairs of distinct
// positions. Pairs are scored in parallel and summed in a fixed order.
double pairwise_bleu_diversity(const std::vector<HypothesisSet>& dataset);
double pairwise_bleu_diversity_serial(const std::vector<HypothesisSet>& dataset);

// Fraction of distinct sequences in a that also occur in b.
double set_overlap(const std::vector<Sequence>& a,
                   const std::vector<Sequence>& b);

struct TrajectoryPoint {
  std::size_t step = 0;  // 0 is the initial state
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one trace
  std::size_t count = 0;
};

// Canonical-chain reward per step across traces of equal length.
std::vector<TrajectoryPoint> reward_trajectory(
    const std::vector<ChainTrace>& traces);

struct AcceptanceStats {
  double acceptance_rate = 0.0;
  std::size_t accepted_count = 0;
  std::size_t unique_accepted = 0;
  // multiplicity -> number of distinct accepted sequences with it
  std::map<std::size_t, std::size_t> repeats_histogram;
};

AcceptanceStats acceptance_stats(const ChainTrace& trace);

// Each accepted step adds one count at relative position i / n^t, bucket
// ceil(n_buckets * i / n^t) - 1 (n^t = 0 counts as position 1).
std::vector<std::size_t> accepted_index_histogram(
    const std::vector<ChainTrace>& traces, std::size_t n_buckets);

// Content tokens generated by the initial sample and every proposal.
std::size_t token_cost(const ChainTrace& trace);

// Reward deltas r(y') - r(y) of `count` proposals drawn from a fixed state.
std::vector<double> proposal_reward_deltas(const LanguageModel& lm,
                                           const Prompt& x,
                                           const GibbsTarget& target,
                                           const ProposalSpec& spec,
                                           const Sequence& state,
                                           std::size_t count, Rng& rng);

double positive_fraction(const std::vector<double>& values);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [lower, upper]; values outside are clamped into
// the edge bins.
std::vector<HistogramBin> bin_values(const std::vector<double>& values,
                                     double lower, double upper,
                                     std::size_t n_bins);

struct LengthBucket {
  std::size_t min_length = 0;
  std::size_t max_length = 0;  // inclusive
  std::size_t count = 0;
  double mean_quality = 0.0;
};

// Mean scorer value of hypotheses grouped by the prompt's token length.
std::vector<LengthBucket> quality_by_length(
    const std::vector<HypothesisSet>& dataset, const RewardFn& scorer,
    const std::vector<std::size_t>& upper_edges);

struct RunReport {
  double mean_quality = 0.0;
  std::optional<double> mean_diversity;
  double acceptance_rate = 0.0;
  std::size_t unique_accepted = 0;
  std::vector<TrajectoryPoint> reward_trajectory;
  std::vector<std::size_t> index_histogram;
  std::map<std::size_t, std::size_t> repeats_histogram;
  std::size_t token_cost = 0;

  nlohmann::json to_json() const;
};

// Report over a batch of chains: quality and diversity use each chain's
// accepted states after burn_in as one hypothesis set.
RunReport make_run_report(const std::vector<ChainTrace>& traces,
                          const RewardFn& scorer, const Prompt& x,
                          std::size_t burn_in, std::size_t n_index_buckets);

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryPoint>& trajectory);

}  // namespace quest
