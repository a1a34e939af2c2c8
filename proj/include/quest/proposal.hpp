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
#include <string_view>
#include <vector>

#include "quest/lm.hpp"
#include "quest/random.hpp"
#include "quest/target.hpp"

namespace quest {

// q(i | n) over 1-based positions i in {1, ..., n}. Position i keeps the
// prefix y_{<i} and resamples from i on, so i = 1 regenerates everything.
// For n = 0 the index is forced to 1.
class IndexDistribution {
 public:
  static IndexDistribution uniform() { return IndexDistribution{}; }
  // Weight per position (1-based order); positions past the end reuse the
  // last weight. weights[0] must be positive.
  static IndexDistribution custom(std::vector<double> weights);

  bool is_uniform() const { return weights_.empty(); }
  const std::vector<double>& weights() const { return weights_; }

  // log q(i | n); -inf when i is outside {1, ..., max(n, 1)}.
  double log_prob(std::size_t i, std::size_t n) const;
  std::size_t sample(std::size_t n, Rng& rng) const;

  friend bool operator==(const IndexDistribution&,
                         const IndexDistribution&) = default;

 private:
  double weight(std::size_t i) const;
  std::vector<double> weights_;
};

std::size_t sample_index(const IndexDistribution& dist, std::size_t n,
                         Rng& rng);

enum class ProposalKind {
  suffix_resample,
  token_uniform,
  token_full_conditional,
};

std::string_view to_string(ProposalKind kind);
ProposalKind proposal_kind_from_string(std::string_view s);

struct ProposalSpec {
  ProposalKind kind = ProposalKind::suffix_resample;
  IndexDistribution index = IndexDistribution::uniform();
  // LM temperature used both to sample and to score suffixes.
  double temperature = 1.0;
  // Candidate tokens for token_full_conditional; 0 means all content tokens.
  std::size_t top_k = 0;

  void validate() const;
};

struct ProposalOutcome {
  Sequence candidate;
  std::size_t index = 1;
  // log q(i | n^t).
  double index_logprob = 0.0;
  // log q(y | y^t, x, i), excluding the index term.
  double forward_logprob = 0.0;
  // log q(y^t | y, x, i); -inf when the reverse move is impossible.
  double reverse_logprob = 0.0;
  // Content tokens sampled to build the candidate.
  std::size_t tokens_generated = 0;

  // log q(y, i | y^t, x).
  double joint_forward_logprob() const {
    return index_logprob + forward_logprob;
  }
};

// Keeps y^t_{<i} and samples a fresh completion from the LM.
ProposalOutcome propose_suffix(const LanguageModel& lm, const Sequence& current,
                               const Prompt& x, const ProposalSpec& spec,
                               Rng& rng);

// Builds the outcome for a known (current, candidate, i) triple without
// sampling. The candidate must share current's prefix before i.
ProposalOutcome score_suffix_move(const LanguageModel& lm,
                                  const Sequence& current,
                                  const Sequence& candidate, std::size_t index,
                                  const Prompt& x, const ProposalSpec& spec);

// Replaces one position with a uniformly drawn content token. Symmetric.
ProposalOutcome propose_token_uniform(const Sequence& current,
                                      const Vocab& vocab,
                                      const IndexDistribution& index,
                                      Rng& rng);

// Replaces position i with a token drawn from the target's full
// conditional restricted to the top-k LM tokens at that position.
ProposalOutcome propose_token_full_conditional(const LanguageModel& lm,
                                               TargetEvaluator& target,
                                               const Sequence& current,
                                               const ProposalSpec& spec,
                                               Rng& rng);

// Renormalized full-conditional table at position i (1-based): pairs of
// (candidate token, log probability). Exposed for the oracle.
std::vector<std::pair<TokenId, double>> full_conditional_table(
    const LanguageModel& lm, TargetEvaluator& target, const Sequence& current,
    std::size_t index, const ProposalSpec& spec);

// Dispatches on spec.kind.
ProposalOutcome propose(const LanguageModel& lm, TargetEvaluator& target,
                        const Sequence& current, const ProposalSpec& spec,
                        Rng& rng);

}  // namespace quest
