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

#include <cmath>
#include <map>
#include <vector>

#include "quest/lm.hpp"
#include "quest/oracle.hpp"
#include "quest/reward.hpp"
#include "quest/target.hpp"
#include "quest/vocab.hpp"

namespace quest::testing {

inline Vocab abc() { return Vocab::with_eos({"a", "b", "c"}); }

inline std::shared_ptr<const TabularLanguageModel> toy_lm(std::size_t max_length = 5,
                                                          std::uint64_t seed = 7) {
  return std::make_shared<TabularLanguageModel>(
      TabularLanguageModel::random(abc(), max_length, seed));
}

inline GibbsTarget length_target(double beta,
                                 TargetVariant variant = TargetVariant::plain,
                                 std::shared_ptr<const LanguageModel> lm = nullptr) {
  GibbsTarget t;
  t.reward = std::make_shared<LengthGaussianReward>();
  t.beta = beta;
  t.variant = variant;
  t.lm = std::move(lm);
  return t;
}

inline GibbsTarget constant_target(double beta,
                                   TargetVariant variant = TargetVariant::plain,
                                   std::shared_ptr<const LanguageModel> lm = nullptr) {
  GibbsTarget t;
  t.reward = std::make_shared<ConstantReward>(0.0);
  t.beta = beta;
  t.variant = variant;
  t.lm = std::move(lm);
  return t;
}

// Upper 0.1% point of chi-square with k degrees of freedom
// (Wilson-Hilferty).
inline double chi_square_critical(double k) {
  const double z = 3.090232306167813;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

// Pearson statistic of observed counts against expected probabilities,
// pooling cells with expected count below 5. Returns {statistic, dof}.
template <typename Key>
std::pair<double, double> chi_square(const std::map<Key, double>& probs,
                                     const std::map<Key, std::size_t>& counts,
                                     std::size_t n) {
  double stat = 0.0;
  double cells = 0.0;
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  for (const auto& [key, p] : probs) {
    const double expected = p * static_cast<double>(n);
    auto it = counts.find(key);
    const double observed = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    if (expected < 5.0) {
      pooled_expected += expected;
      pooled_observed += observed;
      continue;
    }
    stat += (observed - expected) * (observed - expected) / expected;
    cells += 1.0;
  }
  if (pooled_expected >= 5.0) {
    stat += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) /
            pooled_expected;
    cells += 1.0;
  }
  return {stat, cells - 1.0};
}

inline bool chi_square_ok(const std::pair<double, double>& r) {
  return r.second < 1.0 || r.first < chi_square_critical(r.second);
}

}  // namespace quest::testing
