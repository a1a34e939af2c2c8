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
#include "quest/http.hpp"

#include <thread>

#include <httplib.h>

#include "quest/error.hpp"

namespace quest {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw InvalidArgument("endpoint must be an http:// URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_once(const ParsedUrl& target, const HttpEndpoint& endpoint,
                         const std::string& payload) {
  httplib::Client client(target.origin);
  const auto timeout = endpoint.timeout;
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(target.path, payload, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const std::string what =
        endpoint.url + ": " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= timeout * 9 / 10)) {
      throw TimeoutError(what);
    }
    throw TransportError(what);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ServerError(res->status, endpoint.url + ": HTTP " +
                                       std::to_string(res->status) + " " +
                                       res->body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation(endpoint.url + ": response is not JSON: " + e.what());
  }
}

}  // namespace

nlohmann::json post_json(const HttpEndpoint& endpoint,
                         const nlohmann::json& body) {
  const ParsedUrl target = parse_url(endpoint.url);
  const std::string payload = body.dump();
  const int attempts = 1 + std::max(0, endpoint.retry.max_retries);
  for (int attempt = 1;; ++attempt) {
    try {
      return post_once(target, endpoint, payload);
    } catch (const ServerError& e) {
      if (!e.retriable() || attempt >= attempts) throw;
    } catch (const TransportError&) {
      if (attempt >= attempts) throw;
    }
    std::this_thread::sleep_for(endpoint.retry.backoff * attempt);
  }
}

}  // namespace quest
