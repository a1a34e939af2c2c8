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
#include <ostream>
#include <vector>

#include "quest/engine.hpp"
#include "quest/lm.hpp"
#include "quest/proposal.hpp"
#include "quest/target.hpp"

namespace quest {

inline constexpr double kMaxEnumeratedStates = 1e7;

// Distribution over sequences keyed on exact token sequences.
using Histogram = std::map<Sequence, double>;

// All sequences of length 0..max_length over content tokens, in
// lexicographic (depth-first) order.
std::vector<Sequence> enumerate_sequences(
    const Vocab& vocab, std::size_t max_length,
    double limit = kMaxEnumeratedStates);

double count_sequences(const Vocab& vocab, std::size_t max_length);

struct EnumeratedDistribution {
  std::vector<Sequence> states;
  std::vector<double> lm_logprobs;  // temperature 1
  std::vector<double> rewards;
  std::vector<double> log_weights;  // unnormalized log target density
  double log_z = 0.0;
  std::vector<double> probabilities;

  std::size_t find(const Sequence& s) const;  // size() if absent
  Histogram histogram() const;
  void write_csv(std::ostream& out, const Vocab& vocab) const;
};

// Exact target over every sequence up to the LM's length cap. Per-state
// terms are evaluated in parallel; the normalization runs serially, so
// results match exact_target_serial bit for bit.
EnumeratedDistribution exact_target(const LanguageModel& lm, const Prompt& x,
                                    const GibbsTarget& target,
                                    double limit = kMaxEnumeratedStates);
EnumeratedDistribution exact_target_serial(const LanguageModel& lm,
                                           const Prompt& x,
                                           const GibbsTarget& target,
                                           double limit = kMaxEnumeratedStates);

// LM's own distribution over the same state space (temperature tau).
EnumeratedDistribution exact_lm_distribution(const LanguageModel& lm,
                                             const Prompt& x, double tau,
                                             double limit = kMaxEnumeratedStates);

struct DetailedBalanceOptions {
  // Acceptance used in the check is min(1, alpha * alpha_scale). Values
  // other than 1 serve as a negative control.
  double alpha_scale = 1.0;
  double limit = kMaxEnumeratedStates;
};

struct DetailedBalanceReport {
  double max_violation = 0.0;
  std::size_t pairs_checked = 0;
  Sequence worst_from;
  Sequence worst_to;
  std::size_t worst_index = 0;

  bool passed(double tol) const { return max_violation < tol; }
};

// For every index component i and every pair (a, b) reachable at i,
// compares pi(a) P_i(a -> b) against pi(b) P_i(b -> a), where P_i is the
// proposal density at i times the engine's acceptance probability.
DetailedBalanceReport detailed_balance_check(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const DetailedBalanceOptions& options = {});
DetailedBalanceReport detailed_balance_check_serial(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const DetailedBalanceOptions& options = {});

// Dense transition matrix of the full MH kernel (indices marginalized,
// rejection mass on the diagonal), in the state order of `dist`.
std::vector<std::vector<double>> transition_matrix(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const EnumeratedDistribution& dist);

// max_y | sum_y' P(y | y') pi(y') - pi(y) |.
double stationarity_residual(const std::vector<std::vector<double>>& kernel,
                             const std::vector<double>& pi);

// Resamples with replacement from the distinct input sequences with
// weights proportional to exp(target log density).
std::vector<Hypothesis> truncated_gibbs_resample(
    const std::vector<Hypothesis>& samples, const LanguageModel& lm,
    const Prompt& x, const GibbsTarget& target, Rng& rng, std::size_t count);

// Selection probabilities used by truncated_gibbs_resample, per distinct
// sequence.
Histogram truncated_gibbs_weights(const std::vector<Hypothesis>& samples,
                                  const LanguageModel& lm, const Prompt& x,
                                  const GibbsTarget& target);

Histogram empirical_histogram(const std::vector<Sequence>& samples);
Histogram empirical_histogram(const std::vector<Hypothesis>& samples);

// 1/2 sum_s |p(s) - q(s)|; missing states count as zero.
double tv_distance(const Histogram& p, const Histogram& q);

}  // namespace quest
