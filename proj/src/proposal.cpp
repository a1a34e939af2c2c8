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
#include "quest/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "quest/error.hpp"

namespace quest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

// --- index distribution ------------------------------------------------------

IndexDistribution IndexDistribution::custom(std::vector<double> weights) {
  if (weights.empty()) throw InvalidArgument("index weights are empty");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("index weights must be finite and >= 0");
    }
  }
  if (!(weights.front() > 0.0)) {
    throw InvalidArgument("the first index weight must be positive");
  }
  IndexDistribution d;
  d.weights_ = std::move(weights);
  return d;
}

double IndexDistribution::weight(std::size_t i) const {
  return i <= weights_.size() ? weights_[i - 1] : weights_.back();
}

double IndexDistribution::log_prob(std::size_t i, std::size_t n) const {
  const std::size_t m = std::max<std::size_t>(n, 1);
  if (i < 1 || i > m) return kNegInf;
  if (is_uniform()) return -std::log(static_cast<double>(m));
  double total = 0.0;
  for (std::size_t j = 1; j <= m; ++j) total += weight(j);
  const double w = weight(i);
  return w > 0.0 ? std::log(w / total) : kNegInf;
}

std::size_t IndexDistribution::sample(std::size_t n, Rng& rng) const {
  const std::size_t m = std::max<std::size_t>(n, 1);
  if (is_uniform()) {
    const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m));
    return std::min(i, m - 1) + 1;
  }
  std::vector<double> w(m);
  for (std::size_t j = 1; j <= m; ++j) w[j - 1] = weight(j);
  return sample_categorical(w, rng) + 1;
}

std::size_t sample_index(const IndexDistribution& dist, std::size_t n,
                         Rng& rng) {
  return dist.sample(n, rng);
}

// --- spec --------------------------------------------------------------------

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::suffix_resample: return "suffix-resample";
    case ProposalKind::token_uniform: return "token-uniform";
    case ProposalKind::token_full_conditional: return "token-full-conditional";
  }
  return "unknown";
}

ProposalKind proposal_kind_from_string(std::string_view s) {
  if (s == "suffix-resample") return ProposalKind::suffix_resample;
  if (s == "token-uniform") return ProposalKind::token_uniform;
  if (s == "token-full-conditional") return ProposalKind::token_full_conditional;
  throw InvalidArgument("unknown proposal kind '" + std::string(s) + "'");
}

void ProposalSpec::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("proposal temperature must be positive and finite");
  }
}

// --- suffix resampling -------------------------------------------------------

namespace {

double reverse_suffix_logprob(const LanguageModel& lm, const Sequence& current,
                              const Sequence& candidate, std::size_t index,
                              const Prompt& x, const ProposalSpec& spec,
                              double forward) {
  // The reverse move redraws index i from q(. | |candidate|).
  if (spec.index.log_prob(index, candidate.size()) == kNegInf) return kNegInf;
  if (candidate == current) return forward;
  const Sequence prefix = current.prefix(index - 1);
  return lm.continuation_logprob(prefix, current.suffix_from(index - 1), x,
                                 spec.temperature);
}

}  // namespace

ProposalOutcome propose_suffix(const LanguageModel& lm, const Sequence& current,
                               const Prompt& x, const ProposalSpec& spec,
                               Rng& rng) {
  const std::size_t n = current.size();
  const std::size_t i = spec.index.sample(n, rng);
  const Sequence prefix = current.prefix(i - 1);
  Continuation cont = lm.sample_continuation(prefix, x, spec.temperature, rng);

  ProposalOutcome out;
  out.index = i;
  out.index_logprob = spec.index.log_prob(i, n);
  out.forward_logprob = cont.logprob;
  out.tokens_generated = cont.suffix.size();
  out.candidate = prefix.concat(cont.suffix);
  out.reverse_logprob = reverse_suffix_logprob(lm, current, out.candidate, i, x,
                                               spec, out.forward_logprob);
  return out;
}

ProposalOutcome score_suffix_move(const LanguageModel& lm,
                                  const Sequence& current,
                                  const Sequence& candidate, std::size_t index,
                                  const Prompt& x, const ProposalSpec& spec) {
  const std::size_t n = current.size();
  if (index < 1 || index > std::max<std::size_t>(n, 1) ||
      candidate.size() < index - 1) {
    throw InvalidArgument("score_suffix_move: index out of range");
  }
  const Sequence prefix = current.prefix(index - 1);
  if (candidate.prefix(index - 1) != prefix) {
    throw InvalidArgument("score_suffix_move: candidate does not share the prefix");
  }
  ProposalOutcome out;
  out.candidate = candidate;
  out.index = index;
  out.index_logprob = spec.index.log_prob(index, n);
  out.forward_logprob = lm.continuation_logprob(
      prefix, candidate.suffix_from(index - 1), x, spec.temperature);
  out.tokens_generated = candidate.size() - (index - 1);
  out.reverse_logprob = reverse_suffix_logprob(lm, current, candidate, index, x,
                                               spec, out.forward_logprob);
  return out;
}

// --- token-level baselines ---------------------------------------------------

ProposalOutcome propose_token_uniform(const Sequence& current,
                                      const Vocab& vocab,
                                      const IndexDistribution& index,
                                      Rng& rng) {
  if (current.empty()) {
    throw InvalidArgument("token-level proposals need a non-empty state");
  }
  const std::size_t n = current.size();
  const std::size_t i = index.sample(n, rng);
  const auto& content = vocab.content_ids();
  const auto pick = std::min(
      static_cast<std::size_t>(uniform01(rng) * static_cast<double>(content.size())),
      content.size() - 1);

  ProposalOutcome out;
  out.index = i;
  out.index_logprob = index.log_prob(i, n);
  out.candidate = current;
  out.candidate.tokens[i - 1] = content[pick];
  out.forward_logprob = -std::log(static_cast<double>(content.size()));
  out.reverse_logprob = out.forward_logprob;
  out.tokens_generated = 1;
  return out;
}

std::vector<std::pair<TokenId, double>> full_conditional_table(
    const LanguageModel& lm, TargetEvaluator& target, const Sequence& current,
    std::size_t index, const ProposalSpec& spec) {
  if (index < 1 || index > current.size()) {
    throw InvalidArgument("full_conditional_table: index out of range");
  }
  const Sequence prefix = current.prefix(index - 1);
  const auto dist = lm.next_token_distribution(prefix, target.prompt(), 1.0);

  std::vector<TokenId> ranked = lm.vocab().content_ids();
  std::stable_sort(ranked.begin(), ranked.end(), [&](TokenId a, TokenId b) {
    return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
  });
  const std::size_t k =
      spec.top_k == 0 ? ranked.size() : std::min(spec.top_k, ranked.size());
  ranked.resize(k);

  std::vector<std::pair<TokenId, double>> table;
  std::vector<double> logs;
  table.reserve(k);
  Sequence variant = current;
  for (TokenId tok : ranked) {
    variant.tokens[index - 1] = tok;
    const double ld = target.log_density(variant);
    table.emplace_back(tok, ld);
    logs.push_back(ld);
  }
  const double norm = log_sum_exp(logs);
  if (norm == kNegInf) {
    throw Error("full conditional has no mass over the top-k tokens");
  }
  for (auto& entry : table) entry.second -= norm;
  return table;
}

ProposalOutcome propose_token_full_conditional(const LanguageModel& lm,
                                               TargetEvaluator& target,
                                               const Sequence& current,
                                               const ProposalSpec& spec,
                                               Rng& rng) {
  if (current.empty()) {
    throw InvalidArgument("token-level proposals need a non-empty state");
  }
  const std::size_t n = current.size();
  const std::size_t i = spec.index.sample(n, rng);
  const auto table = full_conditional_table(lm, target, current, i, spec);

  std::vector<double> logs;
  logs.reserve(table.size());
  for (const auto& entry : table) logs.push_back(entry.second);
  const std::size_t pick = sample_categorical_log(logs, rng);

  ProposalOutcome out;
  out.index = i;
  out.index_logprob = spec.index.log_prob(i, n);
  out.candidate = current;
  out.candidate.tokens[i - 1] = table[pick].first;
  out.forward_logprob = table[pick].second;
  out.reverse_logprob = kNegInf;
  for (const auto& [tok, lp] : table) {
    if (tok == current[i - 1]) out.reverse_logprob = lp;
  }
  out.tokens_generated = 1;
  return out;
}

ProposalOutcome propose(const LanguageModel& lm, TargetEvaluator& target,
                        const Sequence& current, const ProposalSpec& spec,
                        Rng& rng) {
  switch (spec.kind) {
    case ProposalKind::suffix_resample:
      return propose_suffix(lm, current, target.prompt(), spec, rng);
    case ProposalKind::token_uniform:
      return propose_token_uniform(current, lm.vocab(), spec.index, rng);
    case ProposalKind::token_full_conditional:
      return propose_token_full_conditional(lm, target, current, spec, rng);
  }
  throw InvalidArgument("unknown proposal kind");
}

}  // namespace quest
