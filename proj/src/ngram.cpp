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
#include "quest/ngram.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "quest/error.hpp"

namespace quest {

Corpus read_corpus(std::istream& in) {
  std::vector<std::vector<std::string>> lines;
  std::set<std::string> symbols;
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) {
      symbols.insert(w);
      tokens.push_back(std::move(w));
    }
    lines.push_back(std::move(tokens));
  }
  if (lines.empty() || symbols.empty()) {
    throw InvalidArgument("corpus is empty");
  }
  std::string eos = "</s>";
  if (symbols.count(eos)) {
    throw InvalidArgument("corpus contains the reserved symbol </s>");
  }
  Vocab vocab = Vocab::with_eos({symbols.begin(), symbols.end()}, eos);
  Corpus corpus{std::move(vocab), {}};
  corpus.sentences.reserve(lines.size());
  for (const auto& tokens : lines) {
    corpus.sentences.push_back(corpus.vocab.encode(tokens));
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open corpus " + path.string());
  return read_corpus(in);
}

NGramLanguageModel::NGramLanguageModel(
    Vocab vocab, std::size_t max_length, int order, double smoothing,
    std::map<std::vector<TokenId>, std::vector<double>> counts)
    : LocalLanguageModel(std::move(vocab), max_length),
      order_(order),
      smoothing_(smoothing),
      counts_(std::move(counts)) {
  if (order_ < 1) throw InvalidArgument("n-gram order must be >= 1");
  if (!(smoothing_ > 0.0)) {
    throw InvalidArgument("n-gram smoothing must be positive");
  }
  for (const auto& [context, row] : counts_) {
    if (context.size() != static_cast<std::size_t>(order_ - 1) ||
        row.size() != this->vocab().size()) {
      throw InvalidArgument("n-gram count table has the wrong shape");
    }
  }
}

std::vector<double> NGramLanguageModel::base_logprobs(
    std::span<const TokenId> context, const Prompt& x) const {
  const auto width = static_cast<std::size_t>(order_ - 1);
  std::vector<TokenId> history(width, kBos);
  // Fill from the right with the most recent tokens of prompt ++ context.
  std::size_t filled = 0;
  for (auto it = context.rbegin(); it != context.rend() && filled < width;
       ++it, ++filled) {
    history[width - 1 - filled] = *it;
  }
  const auto& prompt = x.tokens.tokens;
  for (auto it = prompt.rbegin(); it != prompt.rend() && filled < width;
       ++it, ++filled) {
    history[width - 1 - filled] = *it;
  }

  const std::size_t v = vocab().size();
  std::vector<double> out(v);
  auto it = counts_.find(history);
  if (it == counts_.end()) {
    const double lp = -std::log(static_cast<double>(v));
    std::fill(out.begin(), out.end(), lp);
    return out;
  }
  double total = 0.0;
  for (double c : it->second) total += c;
  const double denom = std::log(total + smoothing_ * static_cast<double>(v));
  for (std::size_t w = 0; w < v; ++w) {
    out[w] = std::log(it->second[w] + smoothing_) - denom;
  }
  return out;
}

NGramLanguageModel fit_ngram(const Corpus& corpus, int order, double smoothing,
                             std::size_t max_length) {
  if (corpus.sentences.empty()) throw InvalidArgument("corpus is empty");
  if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
  if (!(smoothing > 0.0)) {
    throw InvalidArgument("n-gram smoothing must be positive");
  }
  const auto width = static_cast<std::size_t>(order - 1);
  const std::size_t v = corpus.vocab.size();
  std::map<std::vector<TokenId>, std::vector<double>> counts;
  for (const auto& sentence : corpus.sentences) {
    corpus.vocab.validate(sentence);
    std::vector<TokenId> padded(width, kBos);
    padded.insert(padded.end(), sentence.tokens.begin(), sentence.tokens.end());
    padded.push_back(corpus.vocab.eos());
    for (std::size_t pos = width; pos < padded.size(); ++pos) {
      std::vector<TokenId> history(padded.begin() + (pos - width),
                                   padded.begin() + pos);
      auto& row = counts[history];
      if (row.empty()) row.assign(v, 0.0);
      row[static_cast<std::size_t>(padded[pos])] += 1.0;
    }
  }
  return NGramLanguageModel(corpus.vocab, max_length, order, smoothing,
                            std::move(counts));
}

}  // namespace quest
