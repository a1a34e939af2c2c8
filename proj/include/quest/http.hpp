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

#include <chrono>
#include <string>

#include <json.hpp>

namespace quest {

struct RetryPolicy {
  // Additional attempts after the first failure.
  int max_retries = 2;
  std::chrono::milliseconds backoff{50};
};

struct HttpEndpoint {
  std::string url;  // http://host[:port]/path
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

// POSTs a JSON body and returns the parsed JSON response. Transport
// failures and 5xx answers are retried per policy; other failures throw
// immediately. Throws TimeoutError, TransportError, ServerError or
// ContractViolation (non-JSON body). Safe to call concurrently.
nlohmann::json post_json(const HttpEndpoint& endpoint,
                         const nlohmann::json& body);

}  // namespace quest
