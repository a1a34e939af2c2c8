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

#include "quest/error.hpp"

#include <cstdio>

namespace quest {

namespace {

std::string limit_message(double states, double limit) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "state space has %.0f sequences, above the enumeration "
                "limit of %.0f",
                states, limit);
  return buf;
}

}  // namespace

EnumerationLimitExceeded::EnumerationLimitExceeded(double states, double limit)
    : Error(limit_message(states, limit)), states_(states) {}

}  // namespace quest
