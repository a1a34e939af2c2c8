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

#include "quest/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "quest/metrics.hpp"
#include "quest/oracle.hpp"
#include "quest/parallel.hpp"

namespace quest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Dense transition matrices are only built for small state spaces.
constexpr std::size_t kMaxDenseStates = 2000;

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json symbols(const Vocab& vocab, const Sequence& s) {
  return vocab.to_symbols(s);
}

Sequence parse_symbols(const json& j, const std::vector<std::string>& vocab,
                       const std::string& where) {
  if (!j.is_array()) throw TraceFormatError(where + ": expected a token array");
  Sequence s;
  for (const auto& t : j) {
    if (!t.is_string()) throw TraceFormatError(where + ": tokens must be strings");
    auto it = std::find(vocab.begin(), vocab.end(), t.get<std::string>());
    if (it == vocab.end()) {
      throw TraceFormatError(where + ": unknown token '" + t.get<std::string>() + "'");
    }
    s.tokens.push_back(static_cast<TokenId>(it - vocab.begin()));
  }
  return s;
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw TraceFormatError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw TraceFormatError(where + ": bad field '" + key + "'");
  }
}

double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::nan("");
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      throw TraceFormatError(path.string() + ":" + std::to_string(lineno) +
                             ": not valid JSON");
    }
  }
  if (records.empty()) throw TraceFormatError(path.string() + ": empty file");
  return records;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string histogram_csv(const std::vector<std::size_t>& counts) {
  std::ostringstream out;
  out << "bucket,lower,upper,count\n";
  const double n = static_cast<double>(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    out << b << ',' << csv_number(b / n) << ',' << csv_number((b + 1) / n) << ','
        << counts[b] << '\n';
  }
  return out.str();
}

std::string repeats_csv(const std::map<std::size_t, std::size_t>& repeats) {
  std::ostringstream out;
  out << "multiplicity,count\n";
  for (const auto& [m, c] : repeats) out << m << ',' << c << '\n';
  return out.str();
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory) {
  std::ostringstream out;
  write_trajectory_csv(out, trajectory);
  return out.str();
}

std::string chain_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chain_%03zu.jsonl", k);
  return buf;
}

std::string ancestral_jsonl(const Experiment& e, std::uint64_t seed) {
  const Vocab& vocab = e.lm->vocab();
  std::ostringstream out;
  out << json{{"record", "header"},
              {"schema", kAncestralSchema},
              {"config", config_to_json(e.config)},
              {"vocab", vocab.symbols()},
              {"seed", seed}}
             .dump()
      << '\n';
  RewardCache reward(*e.target.reward, e.prompt);
  const auto& temps = e.config.baselines.temperatures;
  for (std::size_t g = 0; g < temps.size(); ++g) {
    Rng rng(mix(seed, g + 1));
    const auto samples =
        ancestral_sample(*e.lm, e.prompt, temps[g], e.config.baselines.ancestral_count, rng);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto& y = samples[k].sequence;
      out << json{{"record", "sample"},
                  {"temperature", temps[g]},
                  {"sample", k},
                  {"tokens", symbols(vocab, y)},
                  {"reward", reward(y)},
                  {"tokens_generated", y.size()}}
                 .dump()
          << '\n';
    }
  }
  return out.str();
}

struct RunSummary {
  bool ok = true;
  RunReport report;
};

RunSummary run_experiment(const Experiment& e, const fs::path& dir, int jobs) {
  fs::create_directories(dir / "traces");
  const auto seeds = chain_seeds(e.config);
  ChainJob job{e.lm.get(), &e.prompt, &e.target, &e.proposal, e.chain};
  const auto results = run_parallel_chains(job, seeds, jobs);

  RunSummary summary;
  std::vector<ChainTrace> traces;
  json chains = json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    write_file_atomic(dir / "traces" / chain_file(k),
                      trace_to_jsonl(r.trace, e.lm->vocab(), e.config, k, seeds[k],
                                     r.error));
    json c{{"chain", k}, {"seed", seeds[k]}, {"ok", r.ok()}};
    if (r.error) {
      summary.ok = false;
      c["error"] = *r.error;
      std::cerr << "chain " << k << " failed: " << *r.error << '\n';
    } else {
      const auto stats = acceptance_stats(r.trace);
      c["acceptance_rate"] = stats.acceptance_rate;
      c["token_cost"] = token_cost(r.trace);
      traces.push_back(r.trace);
    }
    chains.push_back(c);
  }

  write_file_atomic(dir / "ancestral.jsonl", ancestral_jsonl(e, mix(e.config.chain.seed, 0)));

  json report{{"config", config_to_json(e.config)}, {"chains", chains}};
  if (!traces.empty()) {
    summary.report = make_run_report(traces, *e.target.reward, e.prompt,
                                     e.config.chain.burn_in, 10);
    report["report"] = summary.report.to_json();
    write_file_atomic(dir / "trajectory.csv", trajectory_csv(summary.report.reward_trajectory));
    write_file_atomic(dir / "index_histogram.csv",
                      histogram_csv(summary.report.index_histogram));
    write_file_atomic(dir / "repeats.csv", repeats_csv(summary.report.repeats_histogram));
  }
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  return summary;
}

// The echoed config keeps its own output_dir so traces do not depend on
// where they are written.
ExperimentConfig with_options(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.chain.seed = *options.seed;
  validate_config(config);
  return config;
}

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  return options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string trace_to_jsonl(const ChainTrace& trace, const Vocab& vocab,
                           const ExperimentConfig& config, std::size_t chain,
                           std::uint64_t seed,
                           const std::optional<std::string>& error) {
  std::ostringstream out;
  json initial{{"tokens", symbols(vocab, trace.initial.sequence)},
               {"tokens_generated", trace.initial_tokens}};
  initial["reward"] = trace.initial.reward ? json(*trace.initial.reward) : json(nullptr);
  initial["lm_logprob"] =
      trace.initial.lm_logprob ? json(*trace.initial.lm_logprob) : json(nullptr);
  out << json{{"record", "header"}, {"schema", kTraceSchema},
              {"chain", chain},     {"seed", seed},
              {"vocab", vocab.symbols()}, {"config", config_to_json(config)},
              {"initial", initial}}
             .dump()
      << '\n';
  for (const auto& s : trace.steps) {
    out << json{{"record", "step"},
                {"step", s.step},
                {"index", s.index},
                {"candidate_tokens", symbols(vocab, s.candidate)},
                {"candidate_reward", s.candidate_reward},
                {"alpha", s.alpha},
                {"accepted", s.accepted},
                {"state_tokens", symbols(vocab, s.state)},
                {"reward", s.reward},
                {"lm_logprob", s.lm_logprob},
                {"tokens_generated", s.tokens_generated},
                {"cumulative_tokens", s.cumulative_tokens}}
               .dump()
        << '\n';
  }
  if (error) out << json{{"record", "error"}, {"message", *error}}.dump() << '\n';
  return out.str();
}

LoadedTrace read_trace(const fs::path& path) {
  const auto records = read_jsonl(path);
  const std::string where = path.string();
  const json& header = records.front();
  if (field<std::string>(header, "record", where) != "header" ||
      field<std::string>(header, "schema", where) != kTraceSchema) {
    throw TraceFormatError(where + ": not a " + std::string(kTraceSchema) + " file");
  }
  LoadedTrace t;
  t.header = header;
  t.vocab = field<std::vector<std::string>>(header, "vocab", where);
  try {
    t.config = config_from_json(field<json>(header, "config", where));
  } catch (const ConfigError& e) {
    throw TraceFormatError(where + ": embedded config: " + e.what());
  }
  const json initial = field<json>(header, "initial", where);
  t.trace.initial.sequence = parse_symbols(field<json>(initial, "tokens", where), t.vocab, where);
  t.trace.initial_tokens = field<std::size_t>(initial, "tokens_generated", where);
  if (initial.contains("reward") && initial["reward"].is_number()) {
    t.trace.initial.reward = initial["reward"].get<double>();
  }
  if (initial.contains("lm_logprob") && initial["lm_logprob"].is_number()) {
    t.trace.initial.lm_logprob = initial["lm_logprob"].get<double>();
  }
  for (std::size_t k = 1; k < records.size(); ++k) {
    const json& r = records[k];
    const std::string at = where + ":" + std::to_string(k + 1);
    const auto kind = field<std::string>(r, "record", at);
    if (kind == "error") {
      t.error = field<std::string>(r, "message", at);
      continue;
    }
    if (kind != "step") throw TraceFormatError(at + ": unexpected record '" + kind + "'");
    ChainStep s;
    s.step = field<std::size_t>(r, "step", at);
    s.index = field<std::size_t>(r, "index", at);
    s.candidate = parse_symbols(field<json>(r, "candidate_tokens", at), t.vocab, at);
    s.candidate_reward = number_or_nan(field<json>(r, "candidate_reward", at));
    s.alpha = field<double>(r, "alpha", at);
    s.accepted = field<bool>(r, "accepted", at);
    s.state = parse_symbols(field<json>(r, "state_tokens", at), t.vocab, at);
    s.reward = number_or_nan(field<json>(r, "reward", at));
    s.lm_logprob = number_or_nan(field<json>(r, "lm_logprob", at));
    s.tokens_generated = field<std::size_t>(r, "tokens_generated", at);
    s.cumulative_tokens = field<std::size_t>(r, "cumulative_tokens", at);
    if (s.step != t.trace.steps.size() + 1) {
      throw TraceFormatError(at + ": steps out of order");
    }
    t.trace.steps.push_back(std::move(s));
  }
  return t;
}

LoadedSamples read_samples(const fs::path& path) {
  const auto records = read_jsonl(path);
  const std::string where = path.string();
  const auto schema = field<std::string>(records.front(), "schema", where);
  LoadedSamples out;
  out.schema = schema;
  if (schema == kTraceSchema) {
    auto t = read_trace(path);
    out.vocab = t.vocab;
    out.samples = t.trace.accepted_states();
    return out;
  }
  if (schema != kAncestralSchema) {
    throw TraceFormatError(where + ": unknown schema '" + schema + "'");
  }
  out.vocab = field<std::vector<std::string>>(records.front(), "vocab", where);
  for (std::size_t k = 1; k < records.size(); ++k) {
    const std::string at = where + ":" + std::to_string(k + 1);
    if (field<std::string>(records[k], "record", at) != "sample") {
      throw TraceFormatError(at + ": expected a sample record");
    }
    out.samples.push_back(parse_symbols(field<json>(records[k], "tokens", at), out.vocab, at));
  }
  return out;
}

// --- run ----------------------------------------------------------------------

int cmd_run(const ExperimentConfig& input, const RunOptions& options) {
  const ExperimentConfig config = with_options(input, options);
  set_num_threads(options.jobs);
  const fs::path out = output_dir(config, options);
  bool ok = true;

  if (!config.sweep.enabled) {
    ok = run_experiment(build_experiment(config), out, options.jobs).ok;
    return ok ? 0 : 1;
  }

  std::ostringstream sweep;
  sweep << "beta,acceptance_rate,mean_quality,unique_accepted,token_cost\n";
  for (double beta : config.sweep.betas) {
    ExperimentConfig c = config;
    c.target.beta = beta;
    const auto dir = out / ("beta_" + csv_number(beta));
    const auto summary = run_experiment(build_experiment(c), dir, options.jobs);
    ok = ok && summary.ok;
    sweep << csv_number(beta) << ',' << csv_number(summary.report.acceptance_rate) << ','
          << csv_number(summary.report.mean_quality) << ','
          << summary.report.unique_accepted << ',' << summary.report.token_cost << '\n';
  }
  write_file_atomic(out / "sweep.csv", sweep.str());
  return ok ? 0 : 1;
}

// --- oracle -------------------------------------------------------------------

int cmd_oracle(const ExperimentConfig& input, const RunOptions& options) {
  const ExperimentConfig config = with_options(input, options);
  set_num_threads(options.jobs);
  const Experiment e = build_experiment(config);
  if (!e.lm->enumerable()) {
    throw InvalidArgument("oracle needs a local (enumerable) LM backend");
  }
  // Fails fast with the state count when the guard is exceeded.
  const auto dist = exact_target(*e.lm, e.prompt, e.target, config.oracle.limit);
  const fs::path out = output_dir(config, options);
  {
    std::ostringstream csv;
    dist.write_csv(csv, e.lm->vocab());
    write_file_atomic(out / "exact_target.csv", csv.str());
  }
  const Histogram exact = dist.histogram();

  ChainConfig long_chain = e.chain;
  long_chain.steps = config.oracle.chain_steps;
  long_chain.burn_in = config.oracle.burn_in;
  long_chain.record_rejected = false;
  ChainJob job{e.lm.get(), &e.prompt, &e.target, &e.proposal, long_chain};
  const auto results = run_parallel_chains(job, chain_seeds(config), options.jobs);
  std::vector<Sequence> quest_samples;
  for (const auto& r : results) {
    if (!r.ok()) throw Error("oracle chain failed: " + *r.error);
    auto s = r.trace.canonical_samples(config.oracle.burn_in);
    quest_samples.insert(quest_samples.end(), s.begin(), s.end());
  }

  Rng rng(mix(config.chain.seed, 0x0a));
  const auto ancestral = ancestral_sample(*e.lm, e.prompt, 1.0, config.oracle.samples, rng);
  const auto pool = ancestral_sample(*e.lm, e.prompt, 1.0, config.oracle.pool, rng);
  const auto resampled = truncated_gibbs_resample(pool, *e.lm, e.prompt, e.target, rng,
                                                  config.oracle.samples);

  const auto balance = detailed_balance_check(*e.lm, e.prompt, e.target, e.proposal,
                                              {1.0, config.oracle.limit});
  const Vocab& vocab = e.lm->vocab();
  json report{
      {"config", config_to_json(config)},
      {"states", dist.states.size()},
      {"log_z", dist.log_z},
      {"tv",
       {{"quest", tv_distance(empirical_histogram(quest_samples), exact)},
        {"ancestral", tv_distance(empirical_histogram(ancestral), exact)},
        {"truncated_gibbs", tv_distance(empirical_histogram(resampled), exact)}}},
      {"quest_samples", quest_samples.size()},
      {"detailed_balance",
       {{"max_violation", balance.max_violation},
        {"pairs_checked", balance.pairs_checked},
        {"worst_from", vocab.to_symbols(balance.worst_from)},
        {"worst_to", vocab.to_symbols(balance.worst_to)},
        {"worst_index", balance.worst_index},
        {"tolerance", config.oracle.tolerance},
        {"passed", balance.passed(config.oracle.tolerance)}}}};
  if (dist.states.size() <= kMaxDenseStates) {
    const auto kernel = transition_matrix(*e.lm, e.prompt, e.target, e.proposal, dist);
    report["stationarity_residual"] = stationarity_residual(kernel, dist.probabilities);
  }
  write_file_atomic(out / "oracle.json", report.dump(2) + "\n");
  return 0;
}

// --- compare ------------------------------------------------------------------

int cmd_compare(const CompareOptions& options) {
  if (options.traces.empty()) throw InvalidArgument("compare needs at least one trace");
  std::vector<LoadedTrace> loaded;
  for (const auto& p : options.traces) loaded.push_back(read_trace(p));
  const auto& vocab_symbols = loaded.front().vocab;
  std::vector<ChainTrace> traces;
  for (std::size_t k = 0; k < loaded.size(); ++k) {
    if (loaded[k].vocab != vocab_symbols) {
      throw TraceFormatError(options.traces[k].string() + ": vocabulary differs");
    }
    if (loaded[k].trace.steps.size() != loaded.front().trace.steps.size()) {
      throw TraceFormatError(options.traces[k].string() + ": step count differs");
    }
    traces.push_back(loaded[k].trace);
  }

  std::vector<Sequence> baseline;
  for (const auto& p : options.baselines) {
    auto s = read_samples(p);
    if (s.vocab != vocab_symbols) {
      throw TraceFormatError(p.string() + ": vocabulary differs from the traces");
    }
    baseline.insert(baseline.end(), s.samples.begin(), s.samples.end());
  }

  const fs::path out = options.out_dir;
  json summary = json::object();

  std::vector<double> overlaps;
  {
    std::ostringstream csv;
    csv << "trace,overlap\n";
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const double o = set_overlap(traces[k].accepted_states(), baseline);
      overlaps.push_back(o);
      csv << options.traces[k].filename().string() << ',' << csv_number(o) << '\n';
    }
    write_file_atomic(out / "overlap.csv", csv.str());
    std::ostringstream hist;
    hist << "lower,upper,count\n";
    for (const auto& b : bin_values(overlaps, 0.0, 1.0, 10)) {
      hist << csv_number(b.lower) << ',' << csv_number(b.upper) << ',' << b.count << '\n';
    }
    write_file_atomic(out / "overlap_histogram.csv", hist.str());
    summary["overlap"] = overlaps;
  }

  write_file_atomic(out / "trajectory.csv", trajectory_csv(reward_trajectory(traces)));

  {
    std::ostringstream csv;
    csv << "trace,acceptance_rate,accepted_count,unique_accepted,token_cost\n";
    std::map<std::size_t, std::size_t> repeats;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const auto s = acceptance_stats(traces[k]);
      csv << options.traces[k].filename().string() << ',' << csv_number(s.acceptance_rate)
          << ',' << s.accepted_count << ',' << s.unique_accepted << ','
          << token_cost(traces[k]) << '\n';
      for (const auto& [m, c] : s.repeats_histogram) repeats[m] += c;
    }
    write_file_atomic(out / "acceptance.csv", csv.str());
    write_file_atomic(out / "repeats.csv", repeats_csv(repeats));
  }

  write_file_atomic(out / "index_histogram.csv",
                    histogram_csv(accepted_index_histogram(traces, options.index_buckets)));

  if (options.proposals > 0) {
    const Experiment e = build_experiment(loaded.front().config);
    // Fixed state: the first trace's initial (ancestral) sample, or its
    // first non-empty state so token-level moves are defined.
    const auto states = traces.front().canonical_states();
    Sequence state = states.front();
    if (state.empty()) {
      auto it = std::find_if(states.begin(), states.end(),
                             [](const Sequence& s) { return !s.empty(); });
      if (it != states.end()) state = *it;
    }
    std::vector<std::pair<ProposalKind, std::vector<double>>> deltas;
    for (ProposalKind kind : {ProposalKind::suffix_resample, ProposalKind::token_uniform,
                              ProposalKind::token_full_conditional}) {
      if (kind != ProposalKind::suffix_resample && state.empty()) continue;
      ProposalSpec spec = e.proposal;
      spec.kind = kind;
      Rng rng(mix(e.config.chain.seed, 0x100 + static_cast<std::uint64_t>(kind)));
      deltas.emplace_back(kind, proposal_reward_deltas(*e.lm, e.prompt, e.target, spec,
                                                       state, options.proposals, rng));
    }
    double lo = 0.0, hi = 0.0;
    for (const auto& [kind, d] : deltas) {
      for (double v : d) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) hi = lo + 1.0;
    std::ostringstream csv;
    csv << "kind,lower,upper,count\n";
    json fractions = json::object();
    for (const auto& [kind, d] : deltas) {
      const std::string name(to_string(kind));
      fractions[name] = positive_fraction(d);
      for (const auto& b : bin_values(d, lo, hi, 20)) {
        csv << name << ',' << csv_number(b.lower) << ',' << csv_number(b.upper) << ','
            << b.count << '\n';
      }
    }
    write_file_atomic(out / "reward_deltas.csv", csv.str());
    summary["reward_delta_state"] = e.lm->vocab().to_symbols(state);
    summary["positive_delta_fraction"] = fractions;
  }

  write_file_atomic(out / "compare.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace quest
