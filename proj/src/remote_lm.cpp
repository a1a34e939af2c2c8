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
#include "quest/remote_lm.hpp"

#include <cmath>

#include "quest/error.hpp"

namespace quest {

RemoteLanguageModel::RemoteLanguageModel(HttpEndpoint endpoint, Vocab vocab,
                                         std::size_t max_length)
    : endpoint_(std::move(endpoint)),
      vocab_(std::move(vocab)),
      max_length_(max_length) {}

std::vector<double> RemoteLanguageModel::next_token_distribution(
    const Sequence&, const Prompt&, double) const {
  throw Unsupported("remote LM does not expose next-token distributions");
}

nlohmann::json RemoteLanguageModel::base_request(const Sequence& prefix,
                                                 const Prompt& x,
                                                 double tau) const {
  if (x.text.empty()) throw InvalidArgument("remote LM needs a prompt text");
  if (!(tau > 0.0)) throw InvalidArgument("temperature must be positive");
  vocab_.validate(prefix);
  if (prefix.size() > max_length_) {
    throw InvalidArgument("prefix longer than the maximum length");
  }
  return {{"prompt", x.text},
          {"prefix_tokens", vocab_.to_symbols(prefix)},
          {"temperature", tau},
          {"max_tokens", max_length_ - prefix.size()}};
}

Continuation RemoteLanguageModel::parse_response(const nlohmann::json& response,
                                                 std::size_t max_tokens) const {
  if (!response.is_object()) {
    throw ContractViolation("LM response is not a JSON object");
  }
  auto tokens = response.find("tokens");
  auto logprobs = response.find("token_logprobs");
  if (tokens == response.end() || !tokens->is_array()) {
    throw ContractViolation("LM response lacks a 'tokens' array");
  }
  if (logprobs == response.end() || !logprobs->is_array()) {
    throw ContractViolation("LM response lacks a 'token_logprobs' array");
  }
  if (logprobs->size() != tokens->size() + 1) {
    throw ContractViolation(
        "LM response must carry one logprob per token plus one for EOS");
  }
  if (tokens->size() > max_tokens) {
    throw ContractViolation("LM response exceeds max_tokens");
  }
  Continuation out;
  for (const auto& t : *tokens) {
    if (!t.is_string()) throw ContractViolation("LM token is not a string");
    auto id = vocab_.find(t.get<std::string>());
    if (!id || *id == vocab_.eos()) {
      throw ContractViolation("LM token outside the vocabulary: " +
                              t.get<std::string>());
    }
    out.suffix.tokens.push_back(*id);
  }
  for (const auto& lp : *logprobs) {
    if (!lp.is_number()) throw ContractViolation("LM logprob is not a number");
    const double v = lp.get<double>();
    if (!std::isfinite(v) || v > 1e-9) {
      throw ContractViolation("LM logprob must be finite and <= 0");
    }
    out.logprob += v;
  }
  return out;
}

Continuation RemoteLanguageModel::sample_continuation(const Sequence& prefix,
                                                      const Prompt& x,
                                                      double tau,
                                                      Rng& rng) const {
  auto request = base_request(prefix, x, tau);
  // Forwarded so seeded servers can reproduce; also keeps the local stream
  // advancing identically whatever the server does.
  request["seed"] = rng() >> 1;
  return parse_response(post_json(endpoint_, request),
                        max_length_ - prefix.size());
}

double RemoteLanguageModel::continuation_logprob(const Sequence& prefix,
                                                 const Sequence& suffix,
                                                 const Prompt& x,
                                                 double tau) const {
  vocab_.validate(suffix);
  if (prefix.size() + suffix.size() > max_length_) {
    throw InvalidArgument("sequence longer than the maximum length");
  }
  auto request = base_request(prefix, x, tau);
  request["score_tokens"] = vocab_.to_symbols(suffix);
  auto scored = parse_response(post_json(endpoint_, request),
                               max_length_ - prefix.size());
  if (scored.suffix != suffix) {
    throw ContractViolation("LM score response does not echo score_tokens");
  }
  return scored.logprob;
}

}  // namespace quest
