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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quest/error.hpp"
#include "quest/lm.hpp"
#include "quest/proposal.hpp"
#include "quest/target.hpp"

namespace quest {

struct Hypothesis {
  Sequence sequence;
  std::optional<double> lm_logprob;  // log p_LM(y | x), temperature 1
  std::optional<double> reward;
};

struct ChainConfig {
  std::size_t steps = 128;  // T
  std::size_t burn_in = 0;  // applied by the views below, never at run time
  std::uint64_t seed = 0;
  bool record_rejected = true;  // keep candidate tokens of rejected steps

  void validate() const;
};

struct ChainStep {
  std::size_t step = 0;  // 1-based
  std::size_t index = 1;
  Sequence candidate;
  double candidate_reward = 0.0;
  double alpha = 0.0;
  bool accepted = false;
  Sequence state;  // state after this step
  double reward = 0.0;
  double lm_logprob = 0.0;
  std::size_t tokens_generated = 0;    // this step
  std::size_t cumulative_tokens = 0;   // including the initial sample
};

struct ChainTrace {
  Hypothesis initial;
  std::size_t initial_tokens = 0;
  std::vector<ChainStep> steps;

  // y^0, y^1, ..., y^T with the current state repeated on rejection.
  std::vector<Sequence> canonical_states() const;
  // Canonical states y^{burn_in + 1} ... y^T.
  std::vector<Sequence> canonical_samples(std::size_t burn_in) const;
  // y^0 followed by each accepted candidate (no repeats on rejection),
  // starting at position burn_in.
  std::vector<Sequence> accepted_states(std::size_t burn_in = 0) const;
  std::size_t accepted_count() const;
};

// Thrown when a backend fails mid-run; carries everything recorded so far.
class ChainAborted : public Error {
 public:
  ChainAborted(ChainTrace partial, const std::string& cause)
      : Error("chain aborted: " + cause), partial_(std::move(partial)) {}
  const ChainTrace& partial() const { return partial_; }

 private:
  ChainTrace partial_;
};

// log[ q(y^t | y, i) q(i | n) / (q(y | y^t, i) q(i | n^t)) ]; -inf when
// the reverse move is impossible.
double log_proposal_ratio(const ProposalOutcome& proposal,
                          std::size_t current_length,
                          const IndexDistribution& index);

// min(1, exp(log_target_ratio + log_proposal_ratio)), computed in log space.
double mh_acceptance(double log_target_ratio, const ProposalOutcome& proposal,
                     std::size_t current_length,
                     const IndexDistribution& index);

// Standard MH acceptance for exp(r / beta). Both hypotheses must carry a
// reward.
double acceptance_plain(const ProposalOutcome& proposal,
                        const Hypothesis& candidate, const Hypothesis& current,
                        const GibbsTarget& target,
                        const IndexDistribution& index);

// Acceptance for p_LM exp(r / beta) under the suffix proposal with
// temperature-1 continuations: the LM terms cancel and only the reward and
// index ratios remain.
double acceptance_rlhf(const ProposalOutcome& proposal,
                       const Hypothesis& candidate, const Hypothesis& current,
                       const GibbsTarget& target,
                       const IndexDistribution& index);

// The acceptance probability a chain with (target, spec) applies: plain MH
// for the plain target, the simplified criterion for the kl-regularized
// target at proposal temperature 1, and the general ratio on r~ otherwise
// (which needs lm_logprob on both hypotheses).
double chain_acceptance(const GibbsTarget& target, const ProposalSpec& spec,
                        const ProposalOutcome& proposal,
                        const Hypothesis& candidate, const Hypothesis& current);

bool needs_lm_logprob_for_acceptance(const GibbsTarget& target,
                                     const ProposalSpec& spec);

ChainTrace run_chain(const LanguageModel& lm, const Prompt& x,
                     const GibbsTarget& target, const ProposalSpec& spec,
                     const ChainConfig& config);

std::vector<Hypothesis> ancestral_sample(const LanguageModel& lm,
                                         const Prompt& x, double tau,
                                         std::size_t count, Rng& rng);

// Content tokens decoded by a batch of ancestral samples.
std::size_t ancestral_token_cost(const std::vector<Hypothesis>& samples);

struct ChainJob {
  const LanguageModel* lm = nullptr;
  const Prompt* prompt = nullptr;
  const GibbsTarget* target = nullptr;
  const ProposalSpec* spec = nullptr;
  ChainConfig config;  // seed overridden per chain
};

struct ChainResult {
  ChainTrace trace;
  std::optional<std::string> error;  // set when the chain aborted

  bool ok() const { return !error.has_value(); }
};

// One chain per seed, result order matching seed order. Failures are
// isolated per chain. `jobs` <= 0 uses the OpenMP default.
std::vector<ChainResult> run_parallel_chains(const ChainJob& job,
                                             const std::vector<std::uint64_t>& seeds,
                                             int jobs = 0);

// Serial reference for run_parallel_chains.
std::vector<ChainResult> run_chains_serial(const ChainJob& job,
                                           const std::vector<std::uint64_t>& seeds);

}  // namespace quest
