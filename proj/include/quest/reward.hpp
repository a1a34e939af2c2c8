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

#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>

#include "quest/http.hpp"
#include "quest/lm.hpp"

namespace quest {

inline constexpr double kDefaultClampEps = 1e-2;

// Sequence-level reward r(x, y). Implementations are pure and shareable.
class RewardFn {
 public:
  virtual ~RewardFn() = default;
  virtual std::string_view kind() const = 0;
  virtual double score(const Prompt& x, const Sequence& y) const = 0;
};

// logit(max(eps, min(s, 1 - eps))). Requires s in [0, 1], 0 < eps < 0.5.
double logit_clamp(double s, double eps = kDefaultClampEps);

struct LengthGaussianParams {
  double mu = 7.5;
  double sigma = 3.75;
  double clamp_eps = kDefaultClampEps;

  void validate() const;
};

// logit_clamp(N(|y|; mu, sigma^2)).
double length_gaussian_reward(const Sequence& y,
                              const LengthGaussianParams& params);

class ConstantReward final : public RewardFn {
 public:
  explicit ConstantReward(double value = 0.0) : value_(value) {}
  std::string_view kind() const override { return "constant"; }
  double score(const Prompt&, const Sequence&) const override {
    return value_;
  }

 private:
  double value_;
};

class LengthGaussianReward final : public RewardFn {
 public:
  explicit LengthGaussianReward(LengthGaussianParams params = {});
  std::string_view kind() const override { return "length-gaussian"; }
  double score(const Prompt& x, const Sequence& y) const override;
  const LengthGaussianParams& params() const { return params_; }

 private:
  LengthGaussianParams params_;
};

// r~(x, y) = log p_LM(y | x) + r(x, y) / beta, with p_LM at temperature 1.
class KlRegularizedReward final : public RewardFn {
 public:
  KlRegularizedReward(std::shared_ptr<const LanguageModel> lm,
                      std::shared_ptr<const RewardFn> base, double beta);
  std::string_view kind() const override { return "kl-regularized"; }
  double score(const Prompt& x, const Sequence& y) const override;

 private:
  std::shared_ptr<const LanguageModel> lm_;
  std::shared_ptr<const RewardFn> base_;
  double beta_;
};

std::shared_ptr<const RewardFn> kl_regularized_reward(
    std::shared_ptr<const LanguageModel> lm,
    std::shared_ptr<const RewardFn> base, double beta);

// Client for a scorer speaking
//   POST {source, hypothesis} -> {score in [0, 1]}
// source is the prompt text, hypothesis the space-joined symbols. With a
// clamp epsilon the score is passed through logit_clamp.
class RemoteScorer final : public RewardFn {
 public:
  RemoteScorer(HttpEndpoint endpoint, Vocab vocab,
               std::optional<double> clamp_eps = kDefaultClampEps);
  std::string_view kind() const override { return "remote-scorer"; }
  double score(const Prompt& x, const Sequence& y) const override;

 private:
  HttpEndpoint endpoint_;
  Vocab vocab_;
  std::optional<double> clamp_eps_;
};

// Per-chain memo of r(x, y) for a fixed prompt. Not thread-safe; each
// chain owns one.
class RewardCache {
 public:
  RewardCache(const RewardFn& reward, const Prompt& x)
      : reward_(&reward), prompt_(&x) {}

  double operator()(const Sequence& y);
  std::size_t evaluations() const { return evaluations_; }

 private:
  const RewardFn* reward_;
  const Prompt* prompt_;
  std::unordered_map<Sequence, double, SequenceHash> memo_;
  std::size_t evaluations_ = 0;
};

}  // namespace quest
