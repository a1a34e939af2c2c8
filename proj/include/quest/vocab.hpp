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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace quest {

using TokenId = std::int32_t;

// A finite token sequence. EOS is never stored; termination is implicit.
struct Sequence {
  std::vector<TokenId> tokens;

  Sequence() = default;
  explicit Sequence(std::vector<TokenId> t) : tokens(std::move(t)) {}
  Sequence(std::initializer_list<TokenId> t) : tokens(t) {}

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  TokenId operator[](std::size_t i) const { return tokens[i]; }

  // Tokens [0, n).
  Sequence prefix(std::size_t n) const;
  // Tokens [n, size()).
  Sequence suffix_from(std::size_t n) const;
  Sequence concat(const Sequence& tail) const;

  friend bool operator==(const Sequence&, const Sequence&) = default;
  friend auto operator<=>(const Sequence&, const Sequence&) = default;
};

struct SequenceHash {
  std::size_t operator()(const Sequence& s) const noexcept;
};

class Vocab {
 public:
  Vocab(std::vector<std::string> symbols, TokenId eos_id);

  // Content symbols followed by a single EOS symbol.
  static Vocab with_eos(std::vector<std::string> content,
                        std::string eos = "</s>");

  std::size_t size() const { return symbols_.size(); }
  std::size_t content_size() const { return symbols_.size() - 1; }
  TokenId eos() const { return eos_; }
  bool is_content(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < symbols_.size() &&
           id != eos_;
  }
  const std::string& symbol(TokenId id) const;
  std::optional<TokenId> find(std::string_view symbol) const;
  const std::vector<std::string>& symbols() const { return symbols_; }
  // Non-EOS ids in increasing order.
  const std::vector<TokenId>& content_ids() const { return content_ids_; }

  // Whitespace tokenization. Unknown symbols throw InvalidArgument.
  Sequence encode(std::string_view text) const;
  Sequence encode(const std::vector<std::string>& symbols) const;
  std::string decode(const Sequence& s) const;
  std::vector<std::string> to_symbols(const Sequence& s) const;

  // Throws InvalidArgument unless every token is a content id.
  void validate(const Sequence& s) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.symbols_ == b.symbols_ && a.eos_ == b.eos_;
  }

 private:
  std::vector<std::string> symbols_;
  TokenId eos_;
  std::vector<TokenId> content_ids_;
  std::unordered_map<std::string, TokenId> index_;
};

// Conditioning input. Local backends read `tokens`; the remote backend
// reads `text`.
struct Prompt {
  Sequence tokens;
  std::string text;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

}  // namespace quest
