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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "quest/engine.hpp"
#include "quest/metrics.hpp"
#include "quest/ngram.hpp"
#include "quest/oracle.hpp"
#include "quest/parallel.hpp"
#include "quest/reward.hpp"

using namespace quest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vocab abc() { return Vocab::with_eos({"a", "b", "c"}); }

std::shared_ptr<const LanguageModel> toy_lm() {
  return std::make_shared<TabularLanguageModel>(TabularLanguageModel::random(abc(), 5, 7, 10.0));
}

GibbsTarget toy_target(double beta = 0.5, TargetVariant variant = TargetVariant::plain,
                       std::shared_ptr<const LanguageModel> lm = nullptr) {
  GibbsTarget t;
  t.reward = std::make_shared<LengthGaussianReward>();
  t.beta = beta;
  t.variant = variant;
  t.lm = std::move(lm);
  return t;
}

std::vector<std::uint64_t> seeds(std::size_t n, std::uint64_t base) {
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(base * 1000 + k);
  return out;
}

std::vector<ChainTrace> chains(const LanguageModel& lm, const GibbsTarget& target,
                               const ProposalSpec& spec, std::size_t steps,
                               const std::vector<std::uint64_t>& chain_seeds) {
  const Prompt x;
  ChainJob job{&lm, &x, &target, &spec, {}};
  job.config.steps = steps;
  job.config.record_rejected = false;
  std::vector<ChainTrace> out;
  for (auto& r : run_parallel_chains(job, chain_seeds)) {
    if (!r.ok()) throw Error("chain failed: " + *r.error);
    out.push_back(std::move(r.trace));
  }
  return out;
}

double long_chain_tv(const LanguageModel& lm, const GibbsTarget& target, std::uint64_t seed) {
  ChainConfig c;
  c.steps = 200000;
  c.burn_in = 10000;
  c.seed = seed;
  c.record_rejected = false;
  const auto trace = run_chain(lm, {}, target, ProposalSpec{}, c);
  const auto exact = exact_target(lm, {}, target);
  return tv_distance(empirical_histogram(trace.canonical_samples(c.burn_in)),
                     exact.histogram());
}

// 1 - P(chi2_k > x) via Wilson-Hilferty at the 0.1% level.
bool chi_square_ok(const std::map<Sequence, double>& probs,
                   const std::map<Sequence, std::size_t>& counts, std::size_t n,
                   std::string& detail) {
  double stat = 0.0, cells = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  for (const auto& [key, p] : probs) {
    const double e = p * static_cast<double>(n);
    auto it = counts.find(key);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += o;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    cells += 1.0;
  }
  if (pooled_e >= 5.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    cells += 1.0;
  }
  const double k = cells - 1.0;
  const double a = 2.0 / (9.0 * k);
  const double critical = k * std::pow(1.0 - a + 3.090232306167813 * std::sqrt(a), 3.0);
  detail += " chi2=" + fmt("%.1f", stat) + "/" + fmt("%.1f", critical);
  return stat < critical;
}

// --- criteria ------------------------------------------------------------------

Outcome exact_convergence() {
  const auto lm = toy_lm();
  const double tv = long_chain_tv(*lm, toy_target(), 11);
  return {tv <= 0.05, "TV=" + fmt("%.4f", tv) + " (<= 0.05)"};
}

Outcome detailed_balance() {
  const auto lm = toy_lm();
  const auto target = toy_target();
  const auto ok = detailed_balance_check(*lm, {}, target, ProposalSpec{});
  DetailedBalanceOptions corrupt;
  corrupt.alpha_scale = 1.01;
  const auto bad = detailed_balance_check(*lm, {}, target, ProposalSpec{}, corrupt);
  return {ok.passed(1e-9) && !bad.passed(1e-9),
          "violation=" + fmt("%.3g", ok.max_violation) + " corrupted=" +
              fmt("%.3g", bad.max_violation) + " pairs=" +
              std::to_string(ok.pairs_checked)};
}

Outcome rlhf_equivalence() {
  const auto lm = toy_lm();
  const double beta = 0.5;
  const auto base = std::make_shared<LengthGaussianReward>();
  const auto kl = toy_target(beta, TargetVariant::kl_regularized, lm);
  GibbsTarget plain;
  plain.reward = kl_regularized_reward(lm, base, beta);
  plain.beta = 1.0;
  const ProposalSpec spec;
  const Prompt x;
  Rng rng(3);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Sequence current = lm->sample_continuation(Sequence{}, x, 1.0, rng).suffix;
    const auto p = propose_suffix(*lm, current, x, spec, rng);
    const Hypothesis cur_r{current, std::nullopt, base->score(x, current)};
    const Hypothesis cand_r{p.candidate, std::nullopt, base->score(x, p.candidate)};
    const Hypothesis cur_t{current, std::nullopt, plain.reward->score(x, current)};
    const Hypothesis cand_t{p.candidate, std::nullopt, plain.reward->score(x, p.candidate)};
    const double a = acceptance_plain(p, cand_t, cur_t, plain, spec.index);
    const double b = acceptance_rlhf(p, cand_r, cur_r, kl, spec.index);
    worst = std::max(worst, std::abs(a - b));
  }
  const double tv = long_chain_tv(*lm, kl, 12);
  return {worst < 1e-9 && tv <= 0.05,
          "max|diff|=" + fmt("%.3g", worst) + " TV=" + fmt("%.4f", tv)};
}

Outcome toy_ordering() {
  const auto lm = toy_lm();
  const auto target = toy_target();
  const auto exact = exact_target(*lm, {}, target).histogram();
  int held = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<Sequence> quest;
    for (const auto& t : chains(*lm, target, ProposalSpec{}, 128, seeds(128, seed))) {
      quest.push_back(t.steps.back().state);
    }
    Rng rng(seed);
    const auto ancestral = ancestral_sample(*lm, {}, 1.0, 128, rng);
    const auto pool = ancestral_sample(*lm, {}, 1.0, 512, rng);
    const auto resampled = truncated_gibbs_resample(pool, *lm, {}, target, rng, 128);
    const double q = tv_distance(empirical_histogram(quest), exact);
    const double a = tv_distance(empirical_histogram(ancestral), exact);
    const double g = tv_distance(empirical_histogram(resampled), exact);
    if (q < a && g < a) ++held;
    if (seed == 1) {
      detail = "seed1 quest=" + fmt("%.3f", q) + " tg=" + fmt("%.3f", g) +
               " ancestral=" + fmt("%.3f", a);
    }
  }
  return {held >= 9, std::to_string(held) + "/10 seeds; " + detail};
}

Outcome reward_trajectory_rises() {
  const auto lm = toy_lm();
  const auto traj =
      reward_trajectory(chains(*lm, toy_target(), ProposalSpec{}, 128, seeds(32, 5)));
  const auto& first = traj[1];
  const auto& last = traj.back();
  const double n = static_cast<double>(first.count);
  const double se = std::sqrt(first.stddev * first.stddev / n + last.stddev * last.stddev / n);
  return {last.mean > first.mean + 2.0 * se && last.stddev < first.stddev,
          "step1 " + fmt("%.3f", first.mean) + "+-" + fmt("%.3f", first.stddev) +
              ", final " + fmt("%.3f", last.mean) + "+-" + fmt("%.3f", last.stddev) +
              ", 2SE=" + fmt("%.3f", 2.0 * se)};
}

Outcome beta_acceptance() {
  const auto lm = toy_lm();
  auto rate = [&](double beta) {
    std::size_t accepted = 0, total = 0;
    for (const auto& t : chains(*lm, toy_target(beta), ProposalSpec{}, 128, seeds(32, 6))) {
      accepted += t.accepted_count();
      total += t.steps.size();
    }
    return static_cast<double>(accepted) / static_cast<double>(total);
  };
  const double hi = rate(1.0);
  const double lo = rate(0.01);
  return {hi > lo && lo > 0.0 && hi < 1.0,
          "beta=1: " + fmt("%.4f", hi) + " beta=0.01: " + fmt("%.4f", lo)};
}

Outcome proposal_ablation() {
  const auto lm = toy_lm();
  const auto target = toy_target();
  const Sequence state{0, 1};
  std::vector<double> fractions;
  std::string detail = "state 'a b':";
  for (auto kind : {ProposalKind::suffix_resample, ProposalKind::token_uniform,
                    ProposalKind::token_full_conditional}) {
    ProposalSpec spec;
    spec.kind = kind;
    Rng rng(7);
    fractions.push_back(
        positive_fraction(proposal_reward_deltas(*lm, {}, target, spec, state, 25000, rng)));
    detail += " " + std::string(to_string(kind)) + "=" + fmt("%.4f", fractions.back());
  }
  return {fractions[0] > fractions[1] && fractions[0] > fractions[2], detail};
}

Outcome token_cost_law() {
  const std::size_t n = 32, steps = 128;
  const auto lm = std::make_shared<TabularLanguageModel>(TabularLanguageModel::fixed_length(abc(), n));
  double total = 0.0;
  const auto traces = chains(*lm, toy_target(), ProposalSpec{}, steps, seeds(100, 8));
  for (const auto& t : traces) total += static_cast<double>(token_cost(t));
  const double mean = total / static_cast<double>(traces.size());
  const double law = (static_cast<double>(steps) + 1.0) / 2.0 * static_cast<double>(n);
  Rng rng(8);
  const auto ancestral = ancestral_token_cost(ancestral_sample(*lm, {}, 1.0, 128, rng));
  const double rel = std::abs(mean - law) / law;
  return {rel <= 0.05 && ancestral == 128 * n,
          "N=32 mean=" + fmt("%.1f", mean) + " law=" + fmt("%.1f", law) + " rel=" +
              fmt("%.4f", rel) + " ancestral=" + std::to_string(ancestral)};
}

Outcome primitives() {
  bool ok = true;
  std::string detail;

  std::istringstream corpus_text("a b c\nb c a a\nc\na b\n");
  const auto corpus = read_corpus(corpus_text);
  std::vector<std::shared_ptr<const LanguageModel>> models{
      toy_lm(),
      std::make_shared<TabularLanguageModel>(TabularLanguageModel::uniform(abc(), 5)),
      std::make_shared<TabularLanguageModel>(TabularLanguageModel::fixed_length(abc(), 4)),
      std::make_shared<NGramLanguageModel>(fit_ngram(corpus, 2, 0.1, 5))};
  double worst = 0.0;
  for (const auto& lm : models) {
    for (double tau : {1.0, 0.7}) {
      std::vector<double> lps;
      for (const auto& s : enumerate_sequences(lm->vocab(), lm->max_length())) {
        lps.push_back(lm->sequence_logprob(s, {}, tau));
      }
      worst = std::max(worst, std::abs(std::exp(log_sum_exp(lps)) - 1.0));
    }
  }
  ok = ok && worst <= 1e-6;
  detail += "norm=" + fmt("%.2g", worst);

  Rng rng(9);
  double bleu_self = 1.0;
  double div_lo = 1.0, div_hi = 0.0;
  for (int k = 0; k < 200; ++k) {
    HypothesisSet set;
    for (int h = 0; h < 4; ++h) {
      Sequence s;
      for (std::size_t j = 0, len = 1 + rng() % 6; j < len; ++j) {
        s.tokens.push_back(static_cast<TokenId>(rng() % 3));
      }
      set.hypotheses.push_back(s);
      bleu_self = std::min(bleu_self, sentence_bleu(s, s));
    }
    const double d = pairwise_bleu_diversity({set});
    div_lo = std::min(div_lo, d);
    div_hi = std::max(div_hi, d);
  }
  ok = ok && std::abs(bleu_self - 1.0) < 1e-12 && div_lo >= 0.0 && div_hi <= 1.0;
  detail += " bleu(y,y)=" + fmt("%.6f", bleu_self) + " diversity in [" + fmt("%.3f", div_lo) +
            ", " + fmt("%.3f", div_hi) + "]";

  const auto lm = toy_lm();
  const std::size_t draws = 100000;
  for (double tau : {1.0, 0.7}) {
    std::map<Sequence, std::size_t> counts;
    for (std::size_t k = 0; k < draws; ++k) {
      ++counts[lm->sample_continuation(Sequence{}, {}, tau, rng).suffix];
    }
    ok = chi_square_ok(exact_lm_distribution(*lm, {}, tau).histogram(), counts, draws, detail) && ok;
  }
  const auto pool = ancestral_sample(*lm, {}, 1.0, 64, rng);
  const auto target = toy_target();
  std::map<Sequence, std::size_t> counts;
  for (const auto& h : truncated_gibbs_resample(pool, *lm, {}, target, rng, draws)) {
    ++counts[h.sequence];
  }
  ok = chi_square_ok(truncated_gibbs_weights(pool, *lm, {}, target), counts, draws, detail) && ok;
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "quest_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = std::string(QUEST_CONFIG_DIR) + "/toy.json";
  const std::vector<std::pair<std::string, int>> runs{{"a", 1}, {"b", 1}, {"c", 4}};
  for (const auto& [name, jobs] : runs) {
    const std::string cmd = std::string(QUEST_BIN) + " run --config " + config + " --out " +
                            (root / name).string() + " --jobs " + std::to_string(jobs) +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "quest run failed: " + cmd};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a" / "traces")) {
    const auto name = entry.path().filename();
    const std::string ref = slurp(entry.path());
    for (const char* other : {"b", "c"}) {
      if (slurp(root / other / "traces" / name) != ref) {
        return {false, name.string() + " differs in run " + other};
      }
    }
    ++files;
  }
  fs::remove_all(root);
  return {files > 0, std::to_string(files) + " trace files identical over 3 runs (jobs 1,1,4)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact-target convergence", exact_convergence},
      {"detailed balance", detailed_balance},
      {"rlhf equivalence", rlhf_equivalence},
      {"toy-task ordering", toy_ordering},
      {"reward trajectory", reward_trajectory_rises},
      {"beta vs acceptance", beta_acceptance},
      {"proposal ablation", proposal_ablation},
      {"token-cost law", token_cost_law},
      {"sampler primitives", primitives},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
