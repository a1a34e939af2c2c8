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

#include "quest/random.hpp"

#include <cmath>

#include "quest/error.hpp"

namespace quest {

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw InvalidArgument("sample_categorical: empty");
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) throw InvalidArgument("sample_categorical: no mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t sample_categorical_log(std::span<const double> logprobs, Rng& rng) {
  if (logprobs.empty()) throw InvalidArgument("sample_categorical_log: empty");
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = logprobs.size();
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (std::isinf(logprobs[i])) continue;
    acc += std::exp(logprobs[i]);
    last = i;
    if (u < acc) return i;
  }
  if (last == logprobs.size()) {
    throw InvalidArgument("sample_categorical_log: no mass");
  }
  return last;
}

double standard_exponential(Rng& rng) {
  // 1 - u lies in (0, 1].
  return -std::log(1.0 - uniform01(rng));
}

}  // namespace quest
