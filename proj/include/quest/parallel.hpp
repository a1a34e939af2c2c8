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

#include <cstdint>
#include <exception>
#include <mutex>

namespace quest {

// Thread count for the OpenMP kernels; <= 0 leaves the runtime default.
void set_num_threads(int n);
int max_threads();

// Runs body(k) for k in [0, n), in parallel when `parallel` is set. The
// first exception thrown by any iteration is rethrown after the loop.
template <typename Body>
void parallel_for(std::int64_t n, bool parallel, Body body) {
  if (!parallel) {
    for (std::int64_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      body(k);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace quest
