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
#include "quest/target.hpp"

#include <cmath>

#include "quest/error.hpp"

namespace quest {

std::string_view to_string(TargetVariant v) {
  return v == TargetVariant::plain ? "plain" : "kl-regularized";
}

TargetVariant target_variant_from_string(std::string_view s) {
  if (s == "plain") return TargetVariant::plain;
  if (s == "kl-regularized") return TargetVariant::kl_regularized;
  throw InvalidArgument("unknown target variant '" + std::string(s) + "'");
}

void GibbsTarget::validate() const {
  if (!reward) throw InvalidArgument("target has no reward");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("target beta must be positive and finite");
  }
  if (variant == TargetVariant::kl_regularized && !lm) {
    throw InvalidArgument("kl-regularized target needs a language model");
  }
}

double GibbsTarget::log_density(const Prompt& x, const Sequence& y) const {
  const double scaled = reward->score(x, y) / beta;
  if (variant == TargetVariant::plain) return scaled;
  return lm->sequence_logprob(y, x, 1.0) + scaled;
}

TargetEvaluator::TargetEvaluator(const GibbsTarget& target,
                                 const LanguageModel& lm, const Prompt& x)
    : target_(&target), lm_(&lm), prompt_(&x), rewards_(*target.reward, x) {}

double TargetEvaluator::reward(const Sequence& y) { return rewards_(y); }

double TargetEvaluator::lm_logprob(const Sequence& y) {
  auto it = lm_memo_.find(y);
  if (it != lm_memo_.end()) return it->second;
  const double lp = lm_->sequence_logprob(y, *prompt_, 1.0);
  lm_memo_.emplace(y, lp);
  return lp;
}

double TargetEvaluator::log_density(const Sequence& y) {
  const double scaled = reward(y) / target_->beta;
  if (target_->variant == TargetVariant::plain) return scaled;
  return lm_logprob(y) + scaled;
}

}  // namespace quest
