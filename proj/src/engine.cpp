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
#include "quest/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace quest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double require_reward(const Hypothesis& h, const char* which) {
  if (!h.reward) {
    throw InvalidArgument(std::string("acceptance needs the ") + which +
                          " reward");
  }
  return *h.reward;
}

double clamp_probability(double log_ratio) {
  if (std::isnan(log_ratio) || log_ratio == kNegInf) return 0.0;
  if (log_ratio >= 0.0) return 1.0;
  return std::clamp(std::exp(log_ratio), 0.0, 1.0);
}

}  // namespace

// --- ChainConfig / ChainTrace -------------------------------------------------

void ChainConfig::validate() const {
  if (steps < 1) throw InvalidArgument("chain needs at least one step");
  if (burn_in >= steps) throw InvalidArgument("burn-in must be below the step count");
}

std::vector<Sequence> ChainTrace::canonical_states() const {
  std::vector<Sequence> out;
  out.reserve(steps.size() + 1);
  out.push_back(initial.sequence);
  for (const auto& s : steps) out.push_back(s.state);
  return out;
}

std::vector<Sequence> ChainTrace::canonical_samples(std::size_t burn_in) const {
  std::vector<Sequence> out;
  for (std::size_t t = burn_in; t < steps.size(); ++t) {
    out.push_back(steps[t].state);
  }
  return out;
}

std::vector<Sequence> ChainTrace::accepted_states(std::size_t burn_in) const {
  std::vector<Sequence> all;
  all.push_back(initial.sequence);
  for (const auto& s : steps) {
    if (s.accepted) all.push_back(s.state);
  }
  if (burn_in >= all.size()) return {};
  return {all.begin() + static_cast<std::ptrdiff_t>(burn_in), all.end()};
}

std::size_t ChainTrace::accepted_count() const {
  return static_cast<std::size_t>(std::count_if(
      steps.begin(), steps.end(), [](const ChainStep& s) { return s.accepted; }));
}

// --- acceptance --------------------------------------------------------------

double log_proposal_ratio(const ProposalOutcome& proposal,
                          std::size_t current_length,
                          const IndexDistribution& index) {
  if (proposal.reverse_logprob == kNegInf) return kNegInf;
  const double reverse_index =
      index.log_prob(proposal.index, proposal.candidate.size());
  const double forward_index = index.log_prob(proposal.index, current_length);
  if (reverse_index == kNegInf) return kNegInf;
  return (proposal.reverse_logprob - proposal.forward_logprob) +
         (reverse_index - forward_index);
}

double mh_acceptance(double log_target_ratio, const ProposalOutcome& proposal,
                     std::size_t current_length,
                     const IndexDistribution& index) {
  const double proposal_ratio =
      log_proposal_ratio(proposal, current_length, index);
  if (proposal_ratio == kNegInf) return 0.0;
  return clamp_probability(log_target_ratio + proposal_ratio);
}

double acceptance_plain(const ProposalOutcome& proposal,
                        const Hypothesis& candidate, const Hypothesis& current,
                        const GibbsTarget& target,
                        const IndexDistribution& index) {
  const double delta =
      require_reward(candidate, "candidate") - require_reward(current, "current");
  return mh_acceptance(delta / target.beta, proposal, current.sequence.size(),
                       index);
}

double acceptance_rlhf(const ProposalOutcome& proposal,
                       const Hypothesis& candidate, const Hypothesis& current,
                       const GibbsTarget& target,
                       const IndexDistribution& index) {
  if (proposal.reverse_logprob == kNegInf) return 0.0;
  const double delta =
      require_reward(candidate, "candidate") - require_reward(current, "current");
  const double reverse_index =
      index.log_prob(proposal.index, candidate.sequence.size());
  const double forward_index =
      index.log_prob(proposal.index, current.sequence.size());
  if (reverse_index == kNegInf) return 0.0;
  return clamp_probability(delta / target.beta + reverse_index - forward_index);
}

bool needs_lm_logprob_for_acceptance(const GibbsTarget& target,
                                     const ProposalSpec& spec) {
  return target.variant == TargetVariant::kl_regularized &&
         spec.temperature != 1.0;
}

double chain_acceptance(const GibbsTarget& target, const ProposalSpec& spec,
                        const ProposalOutcome& proposal,
                        const Hypothesis& candidate, const Hypothesis& current) {
  if (target.variant == TargetVariant::plain) {
    return acceptance_plain(proposal, candidate, current, target, spec.index);
  }
  if (!needs_lm_logprob_for_acceptance(target, spec)) {
    return acceptance_rlhf(proposal, candidate, current, target, spec.index);
  }
  if (!candidate.lm_logprob || !current.lm_logprob) {
    throw InvalidArgument("acceptance needs LM log-likelihoods");
  }
  const double log_ratio =
      (*candidate.lm_logprob - *current.lm_logprob) +
      (require_reward(candidate, "candidate") - require_reward(current, "current")) /
          target.beta;
  return mh_acceptance(log_ratio, proposal, current.sequence.size(), spec.index);
}

// --- chain -------------------------------------------------------------------

ChainTrace run_chain(const LanguageModel& lm, const Prompt& x,
                     const GibbsTarget& target, const ProposalSpec& spec,
                     const ChainConfig& config) {
  config.validate();
  spec.validate();
  target.validate();
  if (target.variant == TargetVariant::kl_regularized &&
      spec.kind != ProposalKind::suffix_resample) {
    throw InvalidArgument(
        "the kl-regularized target requires the suffix-resample proposal");
  }
  const bool token_level = spec.kind != ProposalKind::suffix_resample;
  const bool need_lm = needs_lm_logprob_for_acceptance(target, spec);

  Rng rng(config.seed);
  TargetEvaluator eval(target, lm, x);
  ChainTrace trace;
  try {
    Continuation init = lm.sample_continuation(Sequence{}, x, spec.temperature, rng);
    trace.initial.sequence = std::move(init.suffix);
    trace.initial_tokens = trace.initial.sequence.size();
    trace.initial.reward = eval.reward(trace.initial.sequence);
    trace.initial.lm_logprob = eval.lm_logprob(trace.initial.sequence);

    Hypothesis current = trace.initial;
    std::size_t cumulative = trace.initial_tokens;
    trace.steps.reserve(config.steps);

    for (std::size_t t = 1; t <= config.steps; ++t) {
      ProposalOutcome proposal;
      if (token_level && current.sequence.empty()) {
        // Single-site moves cannot leave the empty sequence.
        proposal.candidate = current.sequence;
      } else {
        proposal = propose(lm, eval, current.sequence, spec, rng);
      }
      Hypothesis candidate{proposal.candidate, std::nullopt,
                           eval.reward(proposal.candidate)};
      if (need_lm) candidate.lm_logprob = eval.lm_logprob(candidate.sequence);

      double alpha = 1.0;
      if (!(token_level && current.sequence.empty())) {
        alpha = chain_acceptance(target, spec, proposal, candidate, current);
      }

      const bool accepted = uniform01(rng) < alpha;
      if (accepted) {
        current.sequence = candidate.sequence;
        current.reward = candidate.reward;
        current.lm_logprob = eval.lm_logprob(current.sequence);
      }
      cumulative += proposal.tokens_generated;

      ChainStep step;
      step.step = t;
      step.index = proposal.index;
      if (accepted || config.record_rejected) step.candidate = proposal.candidate;
      step.candidate_reward = *candidate.reward;
      step.alpha = alpha;
      step.accepted = accepted;
      step.state = current.sequence;
      step.reward = *current.reward;
      step.lm_logprob = *current.lm_logprob;
      step.tokens_generated = proposal.tokens_generated;
      step.cumulative_tokens = cumulative;
      trace.steps.push_back(std::move(step));
    }
  } catch (const std::exception& e) {
    throw ChainAborted(std::move(trace), e.what());
  }
  return trace;
}

std::vector<Hypothesis> ancestral_sample(const LanguageModel& lm,
                                         const Prompt& x, double tau,
                                         std::size_t count, Rng& rng) {
  if (count < 1) throw InvalidArgument("ancestral_sample: count must be >= 1");
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(Hypothesis{lm.sample_continuation(Sequence{}, x, tau, rng).suffix,
                             std::nullopt, std::nullopt});
  }
  return out;
}

std::size_t ancestral_token_cost(const std::vector<Hypothesis>& samples) {
  std::size_t total = 0;
  for (const auto& h : samples) total += h.sequence.size();
  return total;
}

// --- many chains -------------------------------------------------------------

namespace {

ChainResult run_one(const ChainJob& job, std::uint64_t seed) {
  ChainConfig config = job.config;
  config.seed = seed;
  ChainResult result;
  try {
    result.trace = run_chain(*job.lm, *job.prompt, *job.target, *job.spec, config);
  } catch (const ChainAborted& e) {
    result.trace = e.partial();
    result.error = e.what();
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

void check_job(const ChainJob& job) {
  if (!job.lm || !job.prompt || !job.target || !job.spec) {
    throw InvalidArgument("ChainJob has unset inputs");
  }
}

}  // namespace

std::vector<ChainResult> run_parallel_chains(
    const ChainJob& job, const std::vector<std::uint64_t>& seeds, int jobs) {
  check_job(job);
  if (seeds.empty()) throw InvalidArgument("need at least one chain");
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(seeds.size());
  std::vector<ChainResult> results(seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t k = 0; k < n; ++k) {
    results[static_cast<std::size_t>(k)] =
        run_one(job, seeds[static_cast<std::size_t>(k)]);
  }
  return results;
}

std::vector<ChainResult> run_chains_serial(
    const ChainJob& job, const std::vector<std::uint64_t>& seeds) {
  check_job(job);
  if (seeds.empty()) throw InvalidArgument("need at least one chain");
  std::vector<ChainResult> results;
  results.reserve(seeds.size());
  for (auto seed : seeds) results.push_back(run_one(job, seed));
  return results;
}

}  // namespace quest
