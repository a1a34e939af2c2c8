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
#include "quest/vocab.hpp"

#include <sstream>

#include "quest/error.hpp"

namespace quest {

Sequence Sequence::prefix(std::size_t n) const {
  if (n > tokens.size()) throw InvalidArgument("Sequence::prefix: too long");
  return Sequence(std::vector<TokenId>(tokens.begin(), tokens.begin() + n));
}

Sequence Sequence::suffix_from(std::size_t n) const {
  if (n > tokens.size()) throw InvalidArgument("Sequence::suffix_from: too long");
  return Sequence(std::vector<TokenId>(tokens.begin() + n, tokens.end()));
}

Sequence Sequence::concat(const Sequence& tail) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size() + tail.size());
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), tail.tokens.begin(), tail.tokens.end());
  return Sequence(std::move(out));
}

std::size_t SequenceHash::operator()(const Sequence& s) const noexcept {
  // FNV-1a over the ids.
  std::uint64_t h = 1469598103934665603ull;
  for (TokenId t : s.tokens) {
    h ^= static_cast<std::uint32_t>(t);
    h *= 1099511628211ull;
  }
  h ^= s.tokens.size();
  return static_cast<std::size_t>(h);
}

Vocab::Vocab(std::vector<std::string> symbols, TokenId eos_id)
    : symbols_(std::move(symbols)), eos_(eos_id) {
  if (symbols_.size() < 2) {
    throw InvalidArgument("Vocab: need at least one content token plus EOS");
  }
  if (eos_ < 0 || static_cast<std::size_t>(eos_) >= symbols_.size()) {
    throw InvalidArgument("Vocab: eos id out of range");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto& s = symbols_[i];
    if (s.empty()) throw InvalidArgument("Vocab: empty symbol");
    for (char c : s) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        throw InvalidArgument("Vocab: symbol contains whitespace: " + s);
      }
    }
    if (!index_.emplace(s, static_cast<TokenId>(i)).second) {
      throw InvalidArgument("Vocab: duplicate symbol " + s);
    }
    if (static_cast<TokenId>(i) != eos_) {
      content_ids_.push_back(static_cast<TokenId>(i));
    }
  }
}

Vocab Vocab::with_eos(std::vector<std::string> content, std::string eos) {
  content.push_back(std::move(eos));
  const auto eos_id = static_cast<TokenId>(content.size() - 1);
  return Vocab(std::move(content), eos_id);
}

const std::string& Vocab::symbol(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw InvalidArgument("Vocab: token id " + std::to_string(id) +
                          " out of range");
  }
  return symbols_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Sequence Vocab::encode(std::string_view text) const {
  std::istringstream in{std::string(text)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return encode(words);
}

Sequence Vocab::encode(const std::vector<std::string>& symbols) const {
  Sequence out;
  out.tokens.reserve(symbols.size());
  for (const auto& w : symbols) {
    auto id = find(w);
    if (!id) throw InvalidArgument("Vocab: unknown symbol '" + w + "'");
    if (*id == eos_) throw InvalidArgument("Vocab: EOS inside a sequence");
    out.tokens.push_back(*id);
  }
  return out;
}

std::string Vocab::decode(const Sequence& s) const {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out.push_back(' ');
    out += symbol(s[i]);
  }
  return out;
}

std::vector<std::string> Vocab::to_symbols(const Sequence& s) const {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (TokenId t : s.tokens) out.push_back(symbol(t));
  return out;
}

void Vocab::validate(const Sequence& s) const {
  for (TokenId t : s.tokens) {
    if (!is_content(t)) {
      throw InvalidArgument("token id " + std::to_string(t) +
                            " is not a content token of the vocabulary");
    }
  }
}

}  // namespace quest
