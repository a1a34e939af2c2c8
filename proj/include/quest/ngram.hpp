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

#include <filesystem>
#include <istream>
#include <map>
#include <vector>

#include "quest/lm.hpp"

namespace quest {

struct Corpus {
  Vocab vocab;
  std::vector<Sequence> sentences;
};

// Newline-delimited UTF-8, one sequence per line, whitespace-tokenized.
// The vocabulary is the sorted set of observed tokens plus "</s>".
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::filesystem::path& path);

// Additively smoothed n-gram model:
//   P(w | h) = (c(h, w) + k) / (c(h) + k |V|)
// where h is the last (order - 1) tokens of prompt ++ prefix, left-padded
// with a begin marker, and |V| counts EOS.
class NGramLanguageModel final : public LocalLanguageModel {
 public:
  NGramLanguageModel(Vocab vocab, std::size_t max_length, int order,
                     double smoothing,
                     std::map<std::vector<TokenId>, std::vector<double>> counts);

  BackendKind kind() const override { return BackendKind::ngram; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_; }

 protected:
  std::vector<double> base_logprobs(std::span<const TokenId> context,
                                    const Prompt& x) const override;

 private:
  int order_;
  double smoothing_;
  // context (order-1 ids, kBos padded) -> counts over the vocabulary
  std::map<std::vector<TokenId>, std::vector<double>> counts_;
};

inline constexpr TokenId kBos = -1;

NGramLanguageModel fit_ngram(const Corpus& corpus, int order, double smoothing,
                             std::size_t max_length);

}  // namespace quest
