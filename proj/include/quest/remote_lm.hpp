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

#include "quest/http.hpp"
#include "quest/lm.hpp"

namespace quest {

// Client for an LM server speaking
//
//   POST {prompt, prefix_tokens, temperature, max_tokens[, seed]}
//     -> {tokens, token_logprobs}
//
// with one logprob per returned token plus a trailing EOS logprob. A
// request carrying "score_tokens" asks the server to score those tokens
// after the prefix instead of sampling; the response has the same shape
// and must echo them.
//
// The server's tokens are mapped through a closed vocabulary. Logprobs
// are taken verbatim and never synthesized; the server is trusted to
// apply the requested temperature.
class RemoteLanguageModel final : public LanguageModel {
 public:
  RemoteLanguageModel(HttpEndpoint endpoint, Vocab vocab,
                      std::size_t max_length);

  BackendKind kind() const override { return BackendKind::remote; }
  const Vocab& vocab() const override { return vocab_; }
  std::size_t max_length() const override { return max_length_; }
  const HttpEndpoint& endpoint() const { return endpoint_; }

  // Throws Unsupported.
  std::vector<double> next_token_distribution(const Sequence& prefix,
                                              const Prompt& x,
                                              double tau) const override;
  Continuation sample_continuation(const Sequence& prefix, const Prompt& x,
                                   double tau, Rng& rng) const override;
  double continuation_logprob(const Sequence& prefix, const Sequence& suffix,
                              const Prompt& x, double tau) const override;

 private:
  Continuation parse_response(const nlohmann::json& response,
                              std::size_t max_tokens) const;
  nlohmann::json base_request(const Sequence& prefix, const Prompt& x,
                              double tau) const;

  HttpEndpoint endpoint_;
  Vocab vocab_;
  std::size_t max_length_;
};

}  // namespace quest
