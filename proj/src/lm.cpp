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
#include "quest/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quest/error.hpp"

namespace quest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw InvalidArgument("temperature must be positive and finite");
  }
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::tabular: return "tabular";
    case BackendKind::ngram: return "ngram";
    case BackendKind::remote: return "remote";
  }
  return "unknown";
}

double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

std::vector<double> temper_logprobs(std::span<const double> logprobs,
                                    double tau) {
  check_tau(tau);
  std::vector<double> out(logprobs.begin(), logprobs.end());
  if (tau == 1.0) return out;
  for (double& v : out) {
    if (v != kNegInf) v /= tau;
  }
  const double norm = log_sum_exp(out);
  for (double& v : out) {
    if (v != kNegInf) v -= norm;
  }
  return out;
}

LocalLanguageModel::LocalLanguageModel(Vocab vocab, std::size_t max_length)
    : vocab_(std::move(vocab)), max_length_(max_length) {}

std::vector<double> LocalLanguageModel::next_token_logprobs(
    std::span<const TokenId> context, const Prompt& x, double tau) const {
  check_tau(tau);
  if (context.size() > max_length_) {
    throw InvalidArgument("context longer than the maximum length");
  }
  if (context.size() == max_length_) {
    std::vector<double> forced(vocab_.size(), kNegInf);
    forced[static_cast<std::size_t>(vocab_.eos())] = 0.0;
    return forced;
  }
  return temper_logprobs(base_logprobs(context, x), tau);
}

std::vector<double> LocalLanguageModel::next_token_distribution(
    const Sequence& prefix, const Prompt& x, double tau) const {
  vocab_.validate(prefix);
  if (prefix.size() >= max_length_) {
    throw InvalidArgument(
        "prefix is at the maximum length; the next token is forced to EOS");
  }
  auto lp = next_token_logprobs(prefix.tokens, x, tau);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

Continuation LocalLanguageModel::sample_continuation(const Sequence& prefix,
                                                     const Prompt& x,
                                                     double tau,
                                                     Rng& rng) const {
  vocab_.validate(prefix);
  if (prefix.size() > max_length_) {
    throw InvalidArgument("prefix longer than the maximum length");
  }
  std::vector<TokenId> context = prefix.tokens;
  Continuation out;
  while (true) {
    const auto lp = next_token_logprobs(context, x, tau);
    const auto tok = static_cast<TokenId>(sample_categorical_log(lp, rng));
    out.logprob += lp[static_cast<std::size_t>(tok)];
    if (tok == vocab_.eos()) break;
    context.push_back(tok);
    out.suffix.tokens.push_back(tok);
  }
  return out;
}

double LocalLanguageModel::continuation_logprob(const Sequence& prefix,
                                                const Sequence& suffix,
                                                const Prompt& x,
                                                double tau) const {
  vocab_.validate(prefix);
  vocab_.validate(suffix);
  if (prefix.size() + suffix.size() > max_length_) {
    throw InvalidArgument("sequence longer than the maximum length");
  }
  std::vector<TokenId> context = prefix.tokens;
  context.reserve(prefix.size() + suffix.size());
  double total = 0.0;
  for (TokenId tok : suffix.tokens) {
    total += next_token_logprobs(context, x, tau)[static_cast<std::size_t>(tok)];
    if (total == kNegInf) return total;
    context.push_back(tok);
  }
  total += next_token_logprobs(context, x, tau)[static_cast<std::size_t>(
      vocab_.eos())];
  return total;
}

// --- tabular ---------------------------------------------------------------

TabularLanguageModel::TabularLanguageModel(
    Vocab vocab, std::size_t max_length, std::vector<double> default_row,
    std::map<Sequence, std::vector<double>> rows)
    : LocalLanguageModel(std::move(vocab), max_length) {
  default_row_ = normalize_row(default_row);
  for (auto& [context, row] : rows) {
    this->vocab().validate(context);
    rows_.emplace(context, normalize_row(row));
  }
}

std::vector<double> TabularLanguageModel::normalize_row(
    const std::vector<double>& row) const {
  if (row.size() != vocab().size()) {
    throw InvalidArgument("tabular row size does not match the vocabulary");
  }
  double total = 0.0;
  for (double w : row) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("tabular row weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("tabular row has no mass");
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = row[i] > 0.0 ? std::log(row[i] / total) : kNegInf;
  }
  return out;
}

std::vector<double> TabularLanguageModel::base_logprobs(
    std::span<const TokenId> context, const Prompt&) const {
  if (!rows_.empty()) {
    auto it = rows_.find(
        Sequence(std::vector<TokenId>(context.begin(), context.end())));
    if (it != rows_.end()) return it->second;
  }
  return default_row_;
}

TabularLanguageModel TabularLanguageModel::uniform(Vocab vocab,
                                                   std::size_t max_length) {
  std::vector<double> row(vocab.size(), 1.0);
  return TabularLanguageModel(std::move(vocab), max_length, std::move(row));
}

TabularLanguageModel TabularLanguageModel::deterministic(Vocab vocab,
                                                         const Sequence& path) {
  vocab.validate(path);
  std::vector<double> eos_row(vocab.size(), 0.0);
  eos_row[static_cast<std::size_t>(vocab.eos())] = 1.0;
  std::map<Sequence, std::vector<double>> rows;
  for (std::size_t k = 0; k < path.size(); ++k) {
    std::vector<double> row(vocab.size(), 0.0);
    row[static_cast<std::size_t>(path[k])] = 1.0;
    rows.emplace(path.prefix(k), std::move(row));
  }
  const std::size_t length = path.size();
  return TabularLanguageModel(std::move(vocab), length, std::move(eos_row),
                              std::move(rows));
}

TabularLanguageModel TabularLanguageModel::fixed_length(Vocab vocab,
                                                        std::size_t length) {
  std::vector<double> row(vocab.size(), 1.0);
  row[static_cast<std::size_t>(vocab.eos())] = 0.0;
  return TabularLanguageModel(std::move(vocab), length, std::move(row));
}

TabularLanguageModel TabularLanguageModel::random(Vocab vocab,
                                                  std::size_t max_length,
                                                  std::uint64_t seed,
                                                  double concentration) {
  if (!(concentration > 0.0)) {
    throw InvalidArgument("Dirichlet concentration must be positive");
  }
  Rng rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  auto draw_row = [&] {
    std::vector<double> row(vocab.size());
    for (double& w : row) {
      w = concentration == 1.0 ? standard_exponential(rng) : gamma(rng);
    }
    return row;
  };

  // Depth-first over every context shorter than max_length.
  std::map<Sequence, std::vector<double>> rows;
  std::vector<Sequence> stack{Sequence{}};
  const auto& content = vocab.content_ids();
  while (!stack.empty()) {
    Sequence context = std::move(stack.back());
    stack.pop_back();
    if (context.size() >= max_length) continue;
    rows.emplace(context, draw_row());
    for (auto it = content.rbegin(); it != content.rend(); ++it) {
      Sequence child = context;
      child.tokens.push_back(*it);
      stack.push_back(std::move(child));
    }
  }
  std::vector<double> fallback(vocab.size(), 1.0);
  return TabularLanguageModel(std::move(vocab), max_length, std::move(fallback),
                              std::move(rows));
}

}  // namespace quest
