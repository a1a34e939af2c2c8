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

#include "quest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "quest/error.hpp"
#include "quest/parallel.hpp"

namespace quest {

namespace {

using NGramCounts = std::map<std::vector<TokenId>, std::size_t>;

NGramCounts ngram_counts(const Sequence& s, std::size_t n) {
  NGramCounts counts;
  if (s.size() < n) return counts;
  for (std::size_t k = 0; k + n <= s.size(); ++k) {
    counts[std::vector<TokenId>(s.tokens.begin() + static_cast<std::ptrdiff_t>(k),
                                s.tokens.begin() + static_cast<std::ptrdiff_t>(k + n))]++;
  }
  return counts;
}

struct PairRef {
  std::size_t set;
  std::size_t hyp;
  std::size_t ref;
};

std::vector<PairRef> ordered_pairs(const std::vector<HypothesisSet>& dataset) {
  if (dataset.empty()) throw InvalidArgument("diversity needs a non-empty dataset");
  std::vector<PairRef> pairs;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto n = dataset[s].hypotheses.size();
    if (n < 2) {
      throw InvalidArgument("diversity needs at least two hypotheses per set");
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a != b) pairs.push_back({s, a, b});
      }
    }
  }
  return pairs;
}

double diversity_from_scores(const std::vector<HypothesisSet>& dataset,
                             const std::vector<PairRef>& pairs,
                             const std::vector<double>& scores) {
  std::vector<double> sums(dataset.size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) sums[pairs[k].set] += scores[k];
  double macro = 0.0;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const double n = static_cast<double>(dataset[s].hypotheses.size());
    macro += sums[s] / (n * (n - 1.0));
  }
  macro /= static_cast<double>(dataset.size());
  return std::clamp(1.0 - macro, 0.0, 1.0);
}

}  // namespace

double mean_quality(const std::vector<HypothesisSet>& dataset,
                    const RewardFn& scorer) {
  if (dataset.empty()) throw InvalidArgument("mean_quality needs a non-empty dataset");
  double macro = 0.0;
  for (const auto& set : dataset) {
    if (set.hypotheses.empty()) throw InvalidArgument("empty hypothesis set");
    double sum = 0.0;
    for (const auto& y : set.hypotheses) sum += scorer.score(set.prompt, y);
    macro += sum / static_cast<double>(set.hypotheses.size());
  }
  return macro / static_cast<double>(dataset.size());
}

double sentence_bleu(const Sequence& hypothesis, const Sequence& reference) {
  if (hypothesis.empty() || reference.empty()) {
    throw InvalidArgument("sentence_bleu needs non-empty sequences");
  }
  const std::size_t orders =
      std::min({std::size_t{4}, hypothesis.size(), reference.size()});
  double log_precision = 0.0;
  double smoothing = 1.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto hyp = ngram_counts(hypothesis, n);
    const auto ref = ngram_counts(reference, n);
    std::size_t matches = 0;
    for (const auto& [gram, count] : hyp) {
      auto it = ref.find(gram);
      if (it != ref.end()) matches += std::min(count, it->second);
    }
    const double total = static_cast<double>(hypothesis.size() - n + 1);
    if (matches == 0) {
      smoothing *= 2.0;
      log_precision += std::log(1.0 / (smoothing * total));
    } else {
      log_precision += std::log(static_cast<double>(matches) / total);
    }
  }
  double bleu = std::exp(log_precision / static_cast<double>(orders));
  if (hypothesis.size() < reference.size()) {
    bleu *= std::exp(1.0 - static_cast<double>(reference.size()) /
                               static_cast<double>(hypothesis.size()));
  }
  return std::clamp(bleu, 0.0, 1.0);
}

double pairwise_bleu_diversity(const std::vector<HypothesisSet>& dataset) {
  const auto pairs = ordered_pairs(dataset);
  std::vector<double> scores(pairs.size());
  parallel_for(static_cast<std::int64_t>(pairs.size()), true, [&](std::int64_t k) {
    const auto& p = pairs[static_cast<std::size_t>(k)];
    const auto& hyps = dataset[p.set].hypotheses;
    scores[static_cast<std::size_t>(k)] = sentence_bleu(hyps[p.hyp], hyps[p.ref]);
  });
  return diversity_from_scores(dataset, pairs, scores);
}

double pairwise_bleu_diversity_serial(const std::vector<HypothesisSet>& dataset) {
  const auto pairs = ordered_pairs(dataset);
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& hyps = dataset[p.set].hypotheses;
    scores.push_back(sentence_bleu(hyps[p.hyp], hyps[p.ref]));
  }
  return diversity_from_scores(dataset, pairs, scores);
}

double set_overlap(const std::vector<Sequence>& a,
                   const std::vector<Sequence>& b) {
  const std::set<Sequence> distinct(a.begin(), a.end());
  if (distinct.empty()) throw InvalidArgument("set_overlap needs a non-empty set");
  const std::set<Sequence> other(b.begin(), b.end());
  std::size_t found = 0;
  for (const auto& s : distinct) found += other.count(s);
  return static_cast<double>(found) / static_cast<double>(distinct.size());
}

std::vector<TrajectoryPoint> reward_trajectory(
    const std::vector<ChainTrace>& traces) {
  if (traces.empty()) throw InvalidArgument("reward_trajectory needs traces");
  const std::size_t steps = traces.front().steps.size();
  for (const auto& t : traces) {
    if (t.steps.size() != steps) {
      throw InvalidArgument("reward_trajectory: traces have different lengths");
    }
    if (!t.initial.reward) throw InvalidArgument("trace without initial reward");
  }
  std::vector<TrajectoryPoint> out;
  out.reserve(steps + 1);
  std::vector<double> values(traces.size());
  for (std::size_t s = 0; s <= steps; ++s) {
    for (std::size_t c = 0; c < traces.size(); ++c) {
      values[c] = s == 0 ? *traces[c].initial.reward : traces[c].steps[s - 1].reward;
    }
    TrajectoryPoint p;
    p.step = s;
    p.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean) * (v - p.mean);
      p.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(p);
  }
  return out;
}

AcceptanceStats acceptance_stats(const ChainTrace& trace) {
  if (trace.steps.empty()) throw InvalidArgument("acceptance_stats needs steps");
  AcceptanceStats stats;
  std::map<Sequence, std::size_t> multiplicity;
  for (const auto& s : trace.steps) {
    if (!s.accepted) continue;
    ++stats.accepted_count;
    ++multiplicity[s.state];
  }
  stats.acceptance_rate = static_cast<double>(stats.accepted_count) /
                          static_cast<double>(trace.steps.size());
  stats.unique_accepted = multiplicity.size();
  for (const auto& [seq, m] : multiplicity) ++stats.repeats_histogram[m];
  return stats;
}

std::vector<std::size_t> accepted_index_histogram(
    const std::vector<ChainTrace>& traces, std::size_t n_buckets) {
  if (n_buckets < 1) throw InvalidArgument("n_buckets must be >= 1");
  std::vector<std::size_t> hist(n_buckets, 0);
  for (const auto& trace : traces) {
    std::size_t length = trace.initial.sequence.size();
    for (const auto& s : trace.steps) {
      if (s.accepted) {
        const std::size_t n = std::max<std::size_t>(length, 1);
        const std::size_t i = std::min(s.index, n);
        // ceil(n_buckets * i / n) - 1, in integers.
        const std::size_t bucket = (n_buckets * i + n - 1) / n - 1;
        ++hist[std::min(bucket, n_buckets - 1)];
      }
      length = s.state.size();
    }
  }
  return hist;
}

std::size_t token_cost(const ChainTrace& trace) {
  std::size_t total = trace.initial_tokens;
  for (const auto& s : trace.steps) total += s.tokens_generated;
  return total;
}

std::vector<double> proposal_reward_deltas(const LanguageModel& lm,
                                           const Prompt& x,
                                           const GibbsTarget& target,
                                           const ProposalSpec& spec,
                                           const Sequence& state,
                                           std::size_t count, Rng& rng) {
  spec.validate();
  target.validate();
  if (spec.kind != ProposalKind::suffix_resample && state.empty()) {
    throw InvalidArgument("token-level proposals need a non-empty state");
  }
  TargetEvaluator eval(target, lm, x);
  const double base = eval.reward(state);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto p = propose(lm, eval, state, spec, rng);
    out.push_back(eval.reward(p.candidate) - base);
  }
  return out;
}

double positive_fraction(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("positive_fraction needs values");
  const auto n = std::count_if(values.begin(), values.end(),
                               [](double v) { return v > 0.0; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

std::vector<HistogramBin> bin_values(const std::vector<double>& values,
                                     double lower, double upper,
                                     std::size_t n_bins) {
  if (n_bins < 1 || !(upper > lower)) {
    throw InvalidArgument("bin_values needs n_bins >= 1 and upper > lower");
  }
  const double width = (upper - lower) / static_cast<double>(n_bins);
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lower = lower + width * static_cast<double>(b);
    bins[b].upper = b + 1 == n_bins ? upper : lower + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    const double pos = std::floor((v - lower) / width);
    const auto b = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
    ++bins[b].count;
  }
  return bins;
}

std::vector<LengthBucket> quality_by_length(
    const std::vector<HypothesisSet>& dataset, const RewardFn& scorer,
    const std::vector<std::size_t>& upper_edges) {
  if (upper_edges.empty()) throw InvalidArgument("need at least one length edge");
  if (!std::is_sorted(upper_edges.begin(), upper_edges.end())) {
    throw InvalidArgument("length edges must be sorted");
  }
  std::vector<LengthBucket> buckets;
  std::size_t lo = 0;
  for (std::size_t edge : upper_edges) {
    buckets.push_back({lo, edge, 0, 0.0});
    lo = edge + 1;
  }
  for (const auto& set : dataset) {
    const std::size_t len = set.prompt.tokens.size();
    auto it = std::find_if(buckets.begin(), buckets.end(),
                           [&](const LengthBucket& b) { return len <= b.max_length; });
    if (it == buckets.end()) continue;
    for (const auto& y : set.hypotheses) {
      it->mean_quality += scorer.score(set.prompt, y);
      ++it->count;
    }
  }
  for (auto& b : buckets) {
    if (b.count > 0) b.mean_quality /= static_cast<double>(b.count);
  }
  return buckets;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["mean_quality"] = mean_quality;
  j["mean_diversity"] =
      mean_diversity ? nlohmann::json(*mean_diversity) : nlohmann::json(nullptr);
  j["acceptance_rate"] = acceptance_rate;
  j["unique_accepted"] = unique_accepted;
  auto& traj = j["reward_trajectory"] = nlohmann::json::array();
  for (const auto& p : reward_trajectory) {
    traj.push_back({{"step", p.step}, {"mean", p.mean}, {"std", p.stddev}});
  }
  j["index_histogram"] = index_histogram;
  auto& reps = j["repeats_histogram"] = nlohmann::json::object();
  for (const auto& [m, c] : repeats_histogram) reps[std::to_string(m)] = c;
  j["token_cost"] = token_cost;
  return j;
}

RunReport make_run_report(const std::vector<ChainTrace>& traces,
                          const RewardFn& scorer, const Prompt& x,
                          std::size_t burn_in, std::size_t n_index_buckets) {
  if (traces.empty()) throw InvalidArgument("make_run_report needs traces");
  RunReport r;
  std::vector<HypothesisSet> sets;
  std::vector<HypothesisSet> bleu_sets;
  bool diverse = true;
  std::size_t accepted = 0;
  std::size_t steps = 0;
  for (const auto& t : traces) {
    HypothesisSet set{x, t.accepted_states(burn_in), std::nullopt};
    if (set.hypotheses.empty()) set.hypotheses.push_back(t.steps.back().state);
    // BLEU is undefined for empty sequences; diversity uses the rest.
    HypothesisSet nonempty{x, {}, std::nullopt};
    for (const auto& y : set.hypotheses) {
      if (!y.empty()) nonempty.hypotheses.push_back(y);
    }
    diverse = diverse && nonempty.hypotheses.size() >= 2;
    bleu_sets.push_back(std::move(nonempty));
    sets.push_back(std::move(set));

    const auto stats = acceptance_stats(t);
    accepted += stats.accepted_count;
    steps += t.steps.size();
    r.unique_accepted += stats.unique_accepted;
    for (const auto& [m, c] : stats.repeats_histogram) r.repeats_histogram[m] += c;
    r.token_cost += token_cost(t);
  }
  r.mean_quality = mean_quality(sets, scorer);
  if (diverse) r.mean_diversity = pairwise_bleu_diversity(bleu_sets);
  r.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(steps);
  r.reward_trajectory = reward_trajectory(traces);
  r.index_histogram = accepted_index_histogram(traces, n_index_buckets);
  return r;
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TrajectoryPoint>& trajectory) {
  out << "step,mean,std,count\n";
  char buf[128];
  for (const auto& p : trajectory) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\n", p.step, p.mean,
                  p.stddev, p.count);
    out << buf;
  }
}

}  // namespace quest
