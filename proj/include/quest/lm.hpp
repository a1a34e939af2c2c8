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
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "quest/random.hpp"
#include "quest/vocab.hpp"

namespace quest {

enum class BackendKind { tabular, ngram, remote };

std::string_view to_string(BackendKind kind);

struct Continuation {
  Sequence suffix;
  // log p(suffix, EOS | prefix, x) at the sampling temperature.
  double logprob = 0.0;
};

// Autoregressive model over Vocab with a hard length cap: at position
// max_length() the model emits EOS with probability one.
//
// Instances are immutable after construction and may be shared by
// concurrently running chains.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual BackendKind kind() const = 0;
  virtual const Vocab& vocab() const = 0;
  virtual std::size_t max_length() const = 0;
  bool enumerable() const { return kind() != BackendKind::remote; }

  // Temperature-adjusted distribution over the full vocabulary for the
  // token following `prefix`. Requires |prefix| < max_length().
  virtual std::vector<double> next_token_distribution(const Sequence& prefix,
                                                      const Prompt& x,
                                                      double tau) const = 0;

  // Samples tokens after `prefix` until EOS or the length cap.
  virtual Continuation sample_continuation(const Sequence& prefix,
                                           const Prompt& x, double tau,
                                           Rng& rng) const = 0;

  // log p(suffix, EOS | prefix, x) at temperature tau.
  virtual double continuation_logprob(const Sequence& prefix,
                                      const Sequence& suffix, const Prompt& x,
                                      double tau) const = 0;

  // log p(y, EOS | x) at temperature tau.
  double sequence_logprob(const Sequence& y, const Prompt& x,
                          double tau) const {
    return continuation_logprob(Sequence{}, y, x, tau);
  }
};

// Tempers a normalized log-probability vector: p_i^(1/tau) renormalized.
std::vector<double> temper_logprobs(std::span<const double> logprobs,
                                    double tau);

double log_sum_exp(std::span<const double> values);

// Shared machinery for backends that expose explicit next-token tables.
class LocalLanguageModel : public LanguageModel {
 public:
  LocalLanguageModel(Vocab vocab, std::size_t max_length);

  const Vocab& vocab() const override { return vocab_; }
  std::size_t max_length() const override { return max_length_; }

  std::vector<double> next_token_distribution(const Sequence& prefix,
                                              const Prompt& x,
                                              double tau) const override;
  Continuation sample_continuation(const Sequence& prefix, const Prompt& x,
                                   double tau, Rng& rng) const override;
  double continuation_logprob(const Sequence& prefix, const Sequence& suffix,
                              const Prompt& x, double tau) const override;

  // Tempered log-probabilities for the next token; at the length cap all
  // mass is on EOS.
  std::vector<double> next_token_logprobs(std::span<const TokenId> context,
                                          const Prompt& x, double tau) const;

 protected:
  // Untempered, normalized log-probabilities over the vocabulary for the
  // token after `context`. Only called with |context| < max_length().
  virtual std::vector<double> base_logprobs(std::span<const TokenId> context,
                                            const Prompt& x) const = 0;

 private:
  Vocab vocab_;
  std::size_t max_length_;
};

// Explicit next-token tables keyed on the generated prefix (the prompt is
// ignored). Contexts without a row fall back to a default row.
class TabularLanguageModel final : public LocalLanguageModel {
 public:
  // Rows hold nonnegative weights over the full vocabulary; they are
  // normalized on construction.
  TabularLanguageModel(Vocab vocab, std::size_t max_length,
                       std::vector<double> default_row,
                       std::map<Sequence, std::vector<double>> rows = {});

  static TabularLanguageModel uniform(Vocab vocab, std::size_t max_length);
  // All mass on `path` followed by EOS.
  static TabularLanguageModel deterministic(Vocab vocab, const Sequence& path);
  // Every sequence has exactly `length` tokens, uniform over content.
  static TabularLanguageModel fixed_length(Vocab vocab, std::size_t length);
  // Independent Dirichlet(concentration) rows for every context of length
  // < max_length.
  static TabularLanguageModel random(Vocab vocab, std::size_t max_length,
                                     std::uint64_t seed,
                                     double concentration = 1.0);

  BackendKind kind() const override { return BackendKind::tabular; }

 protected:
  std::vector<double> base_logprobs(std::span<const TokenId> context,
                                    const Prompt& x) const override;

 private:
  std::vector<double> normalize_row(const std::vector<double>& row) const;

  std::vector<double> default_row_;
  std::map<Sequence, std::vector<double>> rows_;
};

}  // namespace quest
