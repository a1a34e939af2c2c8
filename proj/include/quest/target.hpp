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
#include <string_view>
#include <unordered_map>

#include "quest/lm.hpp"
#include "quest/reward.hpp"

namespace quest {

enum class TargetVariant {
  plain,           // exp(r / beta)
  kl_regularized,  // p_LM(y | x) exp(r / beta)
};

std::string_view to_string(TargetVariant v);
TargetVariant target_variant_from_string(std::string_view s);

// Unnormalized Gibbs density over sequences. The partition function is
// never computed here.
struct GibbsTarget {
  std::shared_ptr<const RewardFn> reward;
  double beta = 1.0;
  TargetVariant variant = TargetVariant::plain;
  // Required for the kl-regularized variant.
  std::shared_ptr<const LanguageModel> lm;

  void validate() const;
  double log_density(const Prompt& x, const Sequence& y) const;
};

// Per-chain memo of reward and LM likelihood (temperature 1) for each
// distinct state. Not thread-safe.
class TargetEvaluator {
 public:
  TargetEvaluator(const GibbsTarget& target, const LanguageModel& lm,
                  const Prompt& x);

  double reward(const Sequence& y);
  double lm_logprob(const Sequence& y);
  double log_density(const Sequence& y);

  const GibbsTarget& target() const { return *target_; }
  const Prompt& prompt() const { return *prompt_; }
  std::size_t reward_evaluations() const { return rewards_.evaluations(); }

 private:
  const GibbsTarget* target_;
  const LanguageModel* lm_;
  const Prompt* prompt_;
  RewardCache rewards_;
  std::unordered_map<Sequence, double, SequenceHash> lm_memo_;
};

}  // namespace quest
