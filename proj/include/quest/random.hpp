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
#include <random>
#include <span>

namespace quest {

// All sampling draws from an explicitly passed engine. The helpers below
// avoid std::*_distribution so traces are identical across standard
// library implementations.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Draws an index from a probability vector by inverse CDF. Entries need
// not sum exactly to one; the last positive entry absorbs rounding.
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

// Same, for log-probabilities (already normalized).
std::size_t sample_categorical_log(std::span<const double> logprobs, Rng& rng);

// Exponential(1) variate; used for Dirichlet construction.
double standard_exponential(Rng& rng);

}  // namespace quest
