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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "quest/error.hpp"
#include "quest/lm.hpp"
#include "quest/oracle.hpp"

using namespace quest;
using quest::testing::abc;
using quest::testing::toy_lm;

TEST_CASE("vocab puts EOS last and round-trips symbols") {
  const Vocab v = abc();
  CHECK(v.size() == 4);
  CHECK(v.content_size() == 3);
  CHECK(v.eos() == 3);
  CHECK(v.symbol(v.eos()) == "</s>");
  const Sequence s = v.encode("a c b");
  CHECK(s == Sequence{0, 2, 1});
  CHECK(v.decode(s) == "a c b");
  CHECK_THROWS_AS(v.encode("a d"), InvalidArgument);
  CHECK_THROWS_AS(v.validate(Sequence{3}), InvalidArgument);
  CHECK_THROWS_AS(Vocab({"a", "a", "</s>"}, 2), InvalidArgument);
  CHECK_THROWS_AS(Vocab({"</s>"}, 0), InvalidArgument);
}

TEST_CASE("temperature leaves a uniform distribution unchanged") {
  const auto lm = TabularLanguageModel::uniform(abc(), 3);
  for (double tau : {0.2, 0.5, 1.0, 1.7}) {
    const auto p = lm.next_token_distribution({}, {}, tau);
    REQUIRE(p.size() == 4);
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("temperature on a (0.9, 0.1) row") {
  const Vocab v = Vocab::with_eos({"a"});
  const TabularLanguageModel lm(v, 3, {0.9, 0.1});
  const auto p1 = lm.next_token_distribution({}, {}, 1.0);
  CHECK(p1[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(p1[1] == doctest::Approx(0.1).epsilon(1e-12));
  const auto p = lm.next_token_distribution({}, {}, 0.5);
  CHECK(p[0] == doctest::Approx(0.98780487804878).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.01219512195122).epsilon(1e-10));

  const std::vector<double> logs{std::log(0.9), std::log(0.1)};
  const auto same = temper_logprobs(logs, 1.0);
  CHECK(same == logs);
  CHECK_THROWS_AS(temper_logprobs(logs, 0.0), InvalidArgument);
}

TEST_CASE("deterministic LM returns its path with logprob 0") {
  const Vocab v = abc();
  const Sequence path{1, 0, 2};
  const auto lm = TabularLanguageModel::deterministic(v, path);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto c = lm.sample_continuation({}, {}, 1.0, rng);
    CHECK(c.suffix == path);
    CHECK(c.logprob == doctest::Approx(0.0));
  }
  CHECK(lm.sequence_logprob(path, {}, 1.0) == doctest::Approx(0.0));
  CHECK(lm.sequence_logprob(Sequence{1}, {}, 1.0) == -INFINITY);
}

TEST_CASE("a prefix at the length cap gets an empty suffix") {
  const auto lm = toy_lm();
  Rng rng(1);
  const Sequence full{0, 1, 2, 0, 1};
  const auto c = lm->sample_continuation(full, {}, 0.7, rng);
  CHECK(c.suffix.empty());
  CHECK(c.logprob == 0.0);
  CHECK_THROWS_AS(lm->next_token_distribution(full, {}, 1.0), InvalidArgument);
}

TEST_CASE("uniform LM over {a, b, EOS} with L_max = 2") {
  const auto lm = TabularLanguageModel::uniform(Vocab::with_eos({"a", "b"}), 2);
  CHECK(lm.sequence_logprob(Sequence{0}, {}, 1.0) ==
        doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-12));
  // Length-cap sequences skip the final EOS factor.
  CHECK(lm.sequence_logprob(Sequence{0, 1}, {}, 1.0) ==
        doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-12));
  CHECK(lm.sequence_logprob(Sequence{}, {}, 1.0) ==
        doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("uniform LM over {a, EOS}: geometric termination") {
  const auto lm = TabularLanguageModel::uniform(Vocab::with_eos({"a"}), 6);
  CHECK(std::exp(lm.sequence_logprob(Sequence{}, {}, 1.0)) == doctest::Approx(0.5));
  CHECK(std::exp(lm.sequence_logprob(Sequence{0}, {}, 1.0)) == doctest::Approx(0.25));
  CHECK(std::exp(lm.sequence_logprob(Sequence{0, 0}, {}, 1.0)) == doctest::Approx(0.125));
}

TEST_CASE("every next-token distribution sums to one") {
  const auto lm = toy_lm();
  for (const auto& s : enumerate_sequences(lm->vocab(), 4)) {
    for (double tau = 0.1; tau <= 2.0001; tau += 0.1) {
      const auto p = lm->next_token_distribution(s, {}, tau);
      double sum = 0.0;
      for (double v : p) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("lowering temperature never lowers the argmax probability") {
  const auto lm = toy_lm();
  for (const auto& s : enumerate_sequences(lm->vocab(), 4)) {
    double prev = -1.0;
    for (double tau : {2.0, 1.5, 1.0, 0.8, 0.5, 0.3, 0.1}) {
      const auto p = lm->next_token_distribution(s, {}, tau);
      const double top = *std::max_element(p.begin(), p.end());
      CHECK(top >= prev - 1e-12);
      prev = top;
    }
  }
}

TEST_CASE("sequence probabilities sum to one over the truncated space") {
  const auto lm = toy_lm();
  const auto states = enumerate_sequences(lm->vocab(), lm->max_length());
  for (double tau : {0.3, 1.0, 2.0}) {
    std::vector<double> logs;
    for (const auto& s : states) logs.push_back(lm->sequence_logprob(s, {}, tau));
    CHECK(std::abs(std::exp(log_sum_exp(logs)) - 1.0) < 1e-6);
  }
}

TEST_CASE("sampled logprob matches the scored continuation") {
  const auto lm = toy_lm();
  Rng rng(11);
  for (int k = 0; k < 500; ++k) {
    const Sequence prefix = Sequence{0, 2, 1}.prefix(static_cast<std::size_t>(k % 4));
    const double tau = k % 2 ? 0.6 : 1.0;
    const auto c = lm->sample_continuation(prefix, {}, tau, rng);
    CHECK(std::abs(c.logprob - lm->continuation_logprob(prefix, c.suffix, {}, tau)) < 1e-9);
    CHECK(prefix.size() + c.suffix.size() <= lm->max_length());
  }
}

TEST_CASE("empirical sampling frequencies match exact probabilities (100k draws)") {
  const auto lm = toy_lm();
  const auto states = enumerate_sequences(lm->vocab(), lm->max_length());
  for (double tau : {1.0, 0.7}) {
    std::map<Sequence, double> probs;
    for (const auto& s : states) probs[s] = std::exp(lm->sequence_logprob(s, {}, tau));
    std::map<Sequence, std::size_t> counts;
    Rng rng(2024);
    const std::size_t n = 100000;
    for (std::size_t k = 0; k < n; ++k) {
      counts[lm->sample_continuation({}, {}, tau, rng).suffix]++;
    }
    const auto r = quest::testing::chi_square(probs, counts, n);
    INFO("chi2 = " << r.first << " dof = " << r.second);
    CHECK(quest::testing::chi_square_ok(r));
  }
}

TEST_CASE("log_sum_exp handles -inf and large magnitudes") {
  const std::vector<double> v{-INFINITY, -INFINITY};
  CHECK(log_sum_exp(v) == -INFINITY);
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("random tables are reproducible from their seed") {
  const auto a = toy_lm(4, 5);
  const auto b = toy_lm(4, 5);
  const auto c = toy_lm(4, 6);
  const Sequence s{2, 1};
  CHECK(a->sequence_logprob(s, {}, 1.0) == b->sequence_logprob(s, {}, 1.0));
  CHECK(a->sequence_logprob(s, {}, 1.0) != c->sequence_logprob(s, {}, 1.0));
}

TEST_CASE("fixed-length tables produce exactly N tokens") {
  const auto lm = TabularLanguageModel::fixed_length(abc(), 6);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    CHECK(lm.sample_continuation({}, {}, 0.8, rng).suffix.size() == 6);
  }
}
