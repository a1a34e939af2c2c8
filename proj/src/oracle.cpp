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
#include "quest/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "quest/error.hpp"
#include "quest/parallel.hpp"

namespace quest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_enumerable(const LanguageModel& lm) {
  if (!lm.enumerable()) {
    throw InvalidArgument("exact enumeration needs a local LM backend");
  }
}

void enumerate_into(const std::vector<TokenId>& content, std::size_t max_length,
                    Sequence& current, std::vector<Sequence>& out) {
  out.push_back(current);
  if (current.size() == max_length) return;
  for (TokenId t : content) {
    current.tokens.push_back(t);
    enumerate_into(content, max_length, current, out);
    current.tokens.pop_back();
  }
}

// Number of sequences extending a fixed prefix of length depth, the prefix
// itself included. In depth-first order these form one contiguous block.
std::size_t subtree_size(std::size_t content, std::size_t max_length,
                         std::size_t depth) {
  std::size_t total = 0;
  std::size_t power = 1;
  for (std::size_t l = depth; l <= max_length; ++l) {
    total += power;
    power *= content;
  }
  return total;
}

template <typename Fill>
EnumeratedDistribution enumerate_weights(const LanguageModel& lm, double limit,
                                         bool parallel, Fill fill) {
  require_enumerable(lm);
  EnumeratedDistribution d;
  d.states = enumerate_sequences(lm.vocab(), lm.max_length(), limit);
  const auto n = static_cast<std::int64_t>(d.states.size());
  d.lm_logprobs.assign(d.states.size(), 0.0);
  d.rewards.assign(d.states.size(), 0.0);
  d.log_weights.assign(d.states.size(), 0.0);
  parallel_for(n, parallel,
               [&](std::int64_t k) { fill(d, static_cast<std::size_t>(k)); });
  d.log_z = log_sum_exp(d.log_weights);
  if (d.log_z == kNegInf || !std::isfinite(d.log_z)) {
    throw Error("target has no finite mass over the enumerated states");
  }
  d.probabilities.resize(d.states.size());
  for (std::size_t k = 0; k < d.states.size(); ++k) {
    d.probabilities[k] = std::exp(d.log_weights[k] - d.log_z);
  }
  return d;
}

EnumeratedDistribution exact_target_impl(const LanguageModel& lm,
                                         const Prompt& x,
                                         const GibbsTarget& target,
                                         double limit, bool parallel) {
  target.validate();
  return enumerate_weights(
      lm, limit, parallel, [&](EnumeratedDistribution& d, std::size_t k) {
        const Sequence& y = d.states[k];
        d.lm_logprobs[k] = lm.sequence_logprob(y, x, 1.0);
        d.rewards[k] = target.reward->score(x, y);
        const double scaled = d.rewards[k] / target.beta;
        d.log_weights[k] = target.variant == TargetVariant::plain
                               ? scaled
                               : d.lm_logprobs[k] + scaled;
      });
}

// --- kernel enumeration --------------------------------------------------------

// One move a -> b at index component i, with both directed kernel values.
struct Move {
  std::size_t index;
  std::size_t to;
  double forward;  // P_i(a -> b)
  double reverse;  // P_i(b -> a)
};

class KernelEnumerator {
 public:
  KernelEnumerator(const LanguageModel& lm, const Prompt& x,
                   const GibbsTarget& target, const ProposalSpec& spec,
                   const EnumeratedDistribution& dist, double alpha_scale)
      : lm_(lm), x_(x), target_(target), spec_(spec), dist_(dist),
        alpha_scale_(alpha_scale) {
    position_.reserve(dist.states.size());
    for (std::size_t k = 0; k < dist.states.size(); ++k) {
      position_.emplace(dist.states[k], k);
    }
  }

  // Every move out of state a to a different state.
  std::vector<Move> moves_from(std::size_t a) const {
    switch (spec_.kind) {
      case ProposalKind::suffix_resample: return suffix_moves(a);
      case ProposalKind::token_uniform:
      case ProposalKind::token_full_conditional: return token_moves(a);
    }
    return {};
  }

 private:
  Hypothesis hypothesis(std::size_t k) const {
    return Hypothesis{dist_.states[k], dist_.lm_logprobs[k], dist_.rewards[k]};
  }

  double accept(const ProposalOutcome& p, std::size_t from, std::size_t to) const {
    const double alpha =
        chain_acceptance(target_, spec_, p, hypothesis(to), hypothesis(from));
    return std::min(1.0, alpha * alpha_scale_);
  }

  std::vector<Move> suffix_moves(std::size_t a) const {
    std::vector<Move> out;
    const Sequence& sa = dist_.states[a];
    const std::size_t content = lm_.vocab().content_size();
    const std::size_t max_i = std::max<std::size_t>(sa.size(), 1);
    for (std::size_t i = 1; i <= max_i; ++i) {
      const Sequence prefix = sa.prefix(i - 1);
      const double qa = spec_.index.log_prob(i, sa.size());
      if (qa == kNegInf) continue;
      const double back_density = lm_.continuation_logprob(
          prefix, sa.suffix_from(i - 1), x_, spec_.temperature);
      const std::size_t start = position_.at(prefix);
      const std::size_t len = subtree_size(content, lm_.max_length(), i - 1);
      for (std::size_t b = start; b < start + len; ++b) {
        if (b == a) continue;
        const Sequence& sb = dist_.states[b];
        const double fwd_density = lm_.continuation_logprob(
            prefix, sb.suffix_from(i - 1), x_, spec_.temperature);
        const double qb = spec_.index.log_prob(i, sb.size());

        ProposalOutcome ab;
        ab.candidate = sb;
        ab.index = i;
        ab.index_logprob = qa;
        ab.forward_logprob = fwd_density;
        ab.reverse_logprob = qb == kNegInf ? kNegInf : back_density;

        Move m{i, b, 0.0, 0.0};
        if (fwd_density != kNegInf) {
          m.forward = std::exp(qa + fwd_density) * accept(ab, a, b);
        }
        if (qb != kNegInf && back_density != kNegInf) {
          ProposalOutcome ba;
          ba.candidate = sa;
          ba.index = i;
          ba.index_logprob = qb;
          ba.forward_logprob = back_density;
          ba.reverse_logprob = fwd_density;
          m.reverse = std::exp(qb + back_density) * accept(ba, b, a);
        }
        out.push_back(m);
      }
    }
    return out;
  }

  std::vector<Move> token_moves(std::size_t a) const {
    std::vector<Move> out;
    const Sequence& sa = dist_.states[a];
    if (sa.empty()) return out;
    const auto& content = lm_.vocab().content_ids();
    TargetEvaluator eval(target_, lm_, x_);
    for (std::size_t i = 1; i <= sa.size(); ++i) {
      const double q = spec_.index.log_prob(i, sa.size());
      if (q == kNegInf) continue;
      std::vector<std::pair<TokenId, double>> table;
      if (spec_.kind == ProposalKind::token_full_conditional) {
        table = full_conditional_table(lm_, eval, sa, i, spec_);
      } else {
        const double lp = -std::log(static_cast<double>(content.size()));
        for (TokenId t : content) table.emplace_back(t, lp);
      }
      auto density_of = [&](TokenId t) {
        for (const auto& [tok, lp] : table) {
          if (tok == t) return lp;
        }
        return kNegInf;
      };
      const double back_density = density_of(sa[i - 1]);
      for (TokenId t : content) {
        if (t == sa[i - 1]) continue;
        Sequence sb = sa;
        sb.tokens[i - 1] = t;
        const std::size_t b = position_.at(sb);
        const double fwd_density = density_of(t);

        Move m{i, b, 0.0, 0.0};
        if (fwd_density != kNegInf) {
          ProposalOutcome ab{sb, i, q, fwd_density, back_density, 1};
          m.forward = std::exp(q + fwd_density) * accept(ab, a, b);
        }
        if (back_density != kNegInf) {
          ProposalOutcome ba{sa, i, q, back_density, fwd_density, 1};
          m.reverse = std::exp(q + back_density) * accept(ba, b, a);
        }
        out.push_back(m);
      }
    }
    return out;
  }

  const LanguageModel& lm_;
  const Prompt& x_;
  const GibbsTarget& target_;
  const ProposalSpec& spec_;
  const EnumeratedDistribution& dist_;
  double alpha_scale_;
  std::unordered_map<Sequence, std::size_t, SequenceHash> position_;
};

struct StateViolation {
  double value = -1.0;
  std::size_t to = 0;
  std::size_t index = 0;
  std::size_t pairs = 0;
};

StateViolation worst_for_state(const KernelEnumerator& kernel,
                               const EnumeratedDistribution& dist,
                               std::size_t a) {
  StateViolation w;
  for (const Move& m : kernel.moves_from(a)) {
    const double v = std::abs(dist.probabilities[a] * m.forward -
                              dist.probabilities[m.to] * m.reverse);
    ++w.pairs;
    if (v > w.value) {
      w.value = v;
      w.to = m.to;
      w.index = m.index;
    }
  }
  return w;
}

DetailedBalanceReport detailed_balance_impl(const LanguageModel& lm,
                                            const Prompt& x,
                                            const GibbsTarget& target,
                                            const ProposalSpec& spec,
                                            const DetailedBalanceOptions& options,
                                            bool parallel) {
  spec.validate();
  const auto dist = parallel ? exact_target(lm, x, target, options.limit)
                             : exact_target_serial(lm, x, target, options.limit);
  const KernelEnumerator kernel(lm, x, target, spec, dist, options.alpha_scale);
  const auto n = static_cast<std::int64_t>(dist.states.size());
  std::vector<StateViolation> per_state(dist.states.size());
  parallel_for(n, parallel, [&](std::int64_t a) {
    per_state[static_cast<std::size_t>(a)] =
        worst_for_state(kernel, dist, static_cast<std::size_t>(a));
  });

  DetailedBalanceReport report;
  double worst = -1.0;
  for (std::size_t a = 0; a < per_state.size(); ++a) {
    const auto& w = per_state[a];
    report.pairs_checked += w.pairs;
    if (w.pairs > 0 && w.value > worst) {
      worst = w.value;
      report.worst_from = dist.states[a];
      report.worst_to = dist.states[w.to];
      report.worst_index = w.index;
    }
  }
  report.max_violation = std::max(worst, 0.0);
  return report;
}

}  // namespace

// --- enumeration -------------------------------------------------------------

double count_sequences(const Vocab& vocab, std::size_t max_length) {
  const double c = static_cast<double>(vocab.content_size());
  double total = 0.0;
  double power = 1.0;
  for (std::size_t l = 0; l <= max_length; ++l) {
    total += power;
    power *= c;
  }
  return total;
}

std::vector<Sequence> enumerate_sequences(const Vocab& vocab,
                                          std::size_t max_length,
                                          double limit) {
  const double count = count_sequences(vocab, max_length);
  if (count > limit) throw EnumerationLimitExceeded(count, limit);
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(count));
  Sequence current;
  enumerate_into(vocab.content_ids(), max_length, current, out);
  return out;
}

std::size_t EnumeratedDistribution::find(const Sequence& s) const {
  auto it = std::lower_bound(states.begin(), states.end(), s);
  if (it == states.end() || *it != s) return states.size();
  return static_cast<std::size_t>(it - states.begin());
}

Histogram EnumeratedDistribution::histogram() const {
  Histogram h;
  for (std::size_t k = 0; k < states.size(); ++k) h[states[k]] = probabilities[k];
  return h;
}

void EnumeratedDistribution::write_csv(std::ostream& out,
                                       const Vocab& vocab) const {
  out << "sequence,logprob_lm,reward,target_probability\n";
  char buf[96];
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::string text = vocab.decode(states[k]);
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted.push_back('"');
      quoted.push_back(c);
    }
    quoted.push_back('"');
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", lm_logprobs[k],
                  rewards[k], probabilities[k]);
    out << quoted << buf;
  }
}

EnumeratedDistribution exact_target(const LanguageModel& lm, const Prompt& x,
                                    const GibbsTarget& target, double limit) {
  return exact_target_impl(lm, x, target, limit, true);
}

EnumeratedDistribution exact_target_serial(const LanguageModel& lm,
                                           const Prompt& x,
                                           const GibbsTarget& target,
                                           double limit) {
  return exact_target_impl(lm, x, target, limit, false);
}

EnumeratedDistribution exact_lm_distribution(const LanguageModel& lm,
                                             const Prompt& x, double tau,
                                             double limit) {
  return enumerate_weights(lm, limit, true,
                           [&](EnumeratedDistribution& d, std::size_t k) {
                             d.lm_logprobs[k] =
                                 lm.sequence_logprob(d.states[k], x, 1.0);
                             d.log_weights[k] =
                                 lm.sequence_logprob(d.states[k], x, tau);
                           });
}

// --- detailed balance / stationarity ------------------------------------------

DetailedBalanceReport detailed_balance_check(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const DetailedBalanceOptions& options) {
  return detailed_balance_impl(lm, x, target, spec, options, true);
}

DetailedBalanceReport detailed_balance_check_serial(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const DetailedBalanceOptions& options) {
  return detailed_balance_impl(lm, x, target, spec, options, false);
}

std::vector<std::vector<double>> transition_matrix(
    const LanguageModel& lm, const Prompt& x, const GibbsTarget& target,
    const ProposalSpec& spec, const EnumeratedDistribution& dist) {
  const KernelEnumerator kernel(lm, x, target, spec, dist, 1.0);
  const std::size_t n = dist.states.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  parallel_for(static_cast<std::int64_t>(n), true, [&](std::int64_t a) {
    auto& row = k[static_cast<std::size_t>(a)];
    for (const Move& m : kernel.moves_from(static_cast<std::size_t>(a))) {
      row[m.to] += m.forward;
    }
    double leave = 0.0;
    for (double v : row) leave += v;
    row[static_cast<std::size_t>(a)] = 1.0 - leave;
  });
  return k;
}

double stationarity_residual(const std::vector<std::vector<double>>& kernel,
                             const std::vector<double>& pi) {
  const std::size_t n = pi.size();
  if (kernel.size() != n) throw InvalidArgument("kernel and pi size mismatch");
  double worst = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    double mass = 0.0;
    for (std::size_t from = 0; from < n; ++from) mass += kernel[from][y] * pi[from];
    worst = std::max(worst, std::abs(mass - pi[y]));
  }
  return worst;
}

// --- truncated Gibbs -----------------------------------------------------------

Histogram truncated_gibbs_weights(const std::vector<Hypothesis>& samples,
                                  const LanguageModel& lm, const Prompt& x,
                                  const GibbsTarget& target) {
  if (samples.empty()) throw InvalidArgument("truncated Gibbs needs samples");
  target.validate();
  std::map<Sequence, double> log_weights;
  for (const auto& h : samples) {
    if (log_weights.count(h.sequence)) continue;
    const double r = h.reward ? *h.reward : target.reward->score(x, h.sequence);
    double lw = r / target.beta;
    if (target.variant == TargetVariant::kl_regularized) {
      lw += h.lm_logprob ? *h.lm_logprob : lm.sequence_logprob(h.sequence, x, 1.0);
    }
    log_weights.emplace(h.sequence, lw);
  }
  std::vector<double> values;
  values.reserve(log_weights.size());
  for (const auto& [s, lw] : log_weights) values.push_back(lw);
  const double norm = log_sum_exp(values);
  Histogram out;
  for (const auto& [s, lw] : log_weights) out.emplace(s, std::exp(lw - norm));
  return out;
}

std::vector<Hypothesis> truncated_gibbs_resample(
    const std::vector<Hypothesis>& samples, const LanguageModel& lm,
    const Prompt& x, const GibbsTarget& target, Rng& rng, std::size_t count) {
  const Histogram weights = truncated_gibbs_weights(samples, lm, x, target);
  std::vector<const Sequence*> keys;
  std::vector<double> probs;
  for (const auto& [s, p] : weights) {
    keys.push_back(&s);
    probs.push_back(p);
  }
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(Hypothesis{*keys[sample_categorical(probs, rng)], std::nullopt,
                             std::nullopt});
  }
  return out;
}

// --- histograms ----------------------------------------------------------------

Histogram empirical_histogram(const std::vector<Sequence>& samples) {
  Histogram h;
  if (samples.empty()) return h;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) h[s] += w;
  return h;
}

Histogram empirical_histogram(const std::vector<Hypothesis>& samples) {
  std::vector<Sequence> seqs;
  seqs.reserve(samples.size());
  for (const auto& h : samples) seqs.push_back(h.sequence);
  return empirical_histogram(seqs);
}

double tv_distance(const Histogram& p, const Histogram& q) {
  double total = 0.0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      total += std::abs(ip->second);
      ++ip;
    } else if (ip == p.end() || iq->first < ip->first) {
      total += std::abs(iq->second);
      ++iq;
    } else {
      total += std::abs(ip->second - iq->second);
      ++ip;
      ++iq;
    }
  }
  return std::min(1.0, 0.5 * total);
}

}  // namespace quest
