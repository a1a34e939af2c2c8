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
#include "quest/reward.hpp"

#include <cmath>
#include <numbers>

#include "quest/error.hpp"

namespace quest {

double logit_clamp(double s, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw InvalidArgument("clamp epsilon must lie in (0, 0.5)");
  }
  if (!(s >= 0.0 && s <= 1.0)) {
    throw InvalidArgument("score must lie in [0, 1]");
  }
  const double p = std::max(eps, std::min(s, 1.0 - eps));
  return std::log(p / (1.0 - p));
}

void LengthGaussianParams::validate() const {
  if (!(sigma > 0.0)) throw InvalidArgument("length reward sigma must be > 0");
  if (!std::isfinite(mu)) throw InvalidArgument("length reward mu must be finite");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw InvalidArgument("clamp epsilon must lie in (0, 0.5)");
  }
}

double length_gaussian_reward(const Sequence& y,
                              const LengthGaussianParams& params) {
  const double z = (static_cast<double>(y.size()) - params.mu) / params.sigma;
  const double log_pdf =
      -0.5 * z * z - std::log(params.sigma * std::sqrt(2.0 * std::numbers::pi));
  // Decide the floor in log space; exponentiate only when it matters.
  const double density =
      log_pdf <= std::log(params.clamp_eps) ? params.clamp_eps : std::exp(log_pdf);
  return logit_clamp(std::min(density, 1.0), params.clamp_eps);
}

LengthGaussianReward::LengthGaussianReward(LengthGaussianParams params)
    : params_(params) {
  params_.validate();
}

double LengthGaussianReward::score(const Prompt&, const Sequence& y) const {
  return length_gaussian_reward(y, params_);
}

KlRegularizedReward::KlRegularizedReward(std::shared_ptr<const LanguageModel> lm,
                                         std::shared_ptr<const RewardFn> base,
                                         double beta)
    : lm_(std::move(lm)), base_(std::move(base)), beta_(beta) {
  if (!lm_ || !base_) throw InvalidArgument("kl-regularized reward needs lm and base");
  if (!(beta_ > 0.0)) throw InvalidArgument("beta must be positive");
}

double KlRegularizedReward::score(const Prompt& x, const Sequence& y) const {
  return lm_->sequence_logprob(y, x, 1.0) + base_->score(x, y) / beta_;
}

std::shared_ptr<const RewardFn> kl_regularized_reward(
    std::shared_ptr<const LanguageModel> lm,
    std::shared_ptr<const RewardFn> base, double beta) {
  return std::make_shared<KlRegularizedReward>(std::move(lm), std::move(base),
                                               beta);
}

RemoteScorer::RemoteScorer(HttpEndpoint endpoint, Vocab vocab,
                           std::optional<double> clamp_eps)
    : endpoint_(std::move(endpoint)),
      vocab_(std::move(vocab)),
      clamp_eps_(clamp_eps) {
  if (clamp_eps_ && !(*clamp_eps_ > 0.0 && *clamp_eps_ < 0.5)) {
    throw InvalidArgument("clamp epsilon must lie in (0, 0.5)");
  }
}

double RemoteScorer::score(const Prompt& x, const Sequence& y) const {
  const nlohmann::json request = {{"source", x.text},
                                  {"hypothesis", vocab_.decode(y)}};
  const auto response = post_json(endpoint_, request);
  if (!response.is_object() || !response.contains("score") ||
      !response["score"].is_number()) {
    throw ContractViolation("scorer response lacks a numeric 'score'");
  }
  const double s = response["score"].get<double>();
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ContractViolation("scorer returned " + std::to_string(s) +
                            ", outside [0, 1]");
  }
  return clamp_eps_ ? logit_clamp(s, *clamp_eps_) : s;
}

double RewardCache::operator()(const Sequence& y) {
  auto it = memo_.find(y);
  if (it != memo_.end()) return it->second;
  const double r = reward_->score(*prompt_, y);
  if (!std::isfinite(r)) throw Error("reward is not finite");
  ++evaluations_;
  memo_.emplace(y, r);
  return r;
}

}  // namespace quest
