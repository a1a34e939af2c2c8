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

#include "quest/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "quest/error.hpp"
#include "quest/ngram.hpp"
#include "quest/remote_lm.hpp"

namespace quest {

namespace {

using nlohmann::json;

// Typed, key-checked access to one config section.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key), "wrong type");
    }
  }

  void get(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      throw ConfigError(name(key), "expected a number or null");
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    static const json kEmpty = json::object();
    return Section(it == j_.end() ? kEmpty : *it, name(key));
  }

  std::string name(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(name(k.c_str()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void fill_endpoint(std::string& endpoint, const char* env) {
  if (!endpoint.empty()) return;
  if (const char* v = std::getenv(env)) endpoint = v;
}

HttpEndpoint make_endpoint(const std::string& url, double timeout_s, int retries) {
  HttpEndpoint e;
  e.url = url;
  e.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
  e.retry.max_retries = retries;
  return e;
}

std::shared_ptr<const LanguageModel> build_lm(const LmConfig& c) {
  if (c.backend == "ngram") {
    return std::make_shared<NGramLanguageModel>(
        fit_ngram(read_corpus(c.corpus), c.order, c.smoothing, c.max_length));
  }
  Vocab vocab = Vocab::with_eos(c.vocab);
  if (c.backend == "remote") {
    return std::make_shared<RemoteLanguageModel>(
        make_endpoint(c.endpoint, c.timeout_s, c.max_retries), vocab, c.max_length);
  }
  if (c.table == "uniform") {
    return std::make_shared<TabularLanguageModel>(
        TabularLanguageModel::uniform(vocab, c.max_length));
  }
  if (c.table == "fixed-length") {
    return std::make_shared<TabularLanguageModel>(
        TabularLanguageModel::fixed_length(vocab, c.length));
  }
  return std::make_shared<TabularLanguageModel>(TabularLanguageModel::random(
      vocab, c.max_length, c.table_seed, c.concentration));
}

std::shared_ptr<const RewardFn> build_reward(const RewardConfig& c,
                                             const Vocab& vocab) {
  if (c.kind == "constant") return std::make_shared<ConstantReward>(c.value);
  if (c.kind == "remote-scorer") {
    return std::make_shared<RemoteScorer>(
        make_endpoint(c.endpoint, c.timeout_s, c.max_retries), vocab, c.clamp_eps);
  }
  LengthGaussianParams p;
  p.mu = c.mu;
  p.sigma = c.sigma;
  p.clamp_eps = c.clamp_eps.value_or(kDefaultClampEps);
  return std::make_shared<LengthGaussianReward>(p);
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.proposal.temperature = 0.8;
  c.chain.steps = 128;
  c.baselines.ancestral_count = 128;
  c.baselines.temperatures.clear();
  for (int k = 2; k <= 10; ++k) c.baselines.temperatures.push_back(k / 10.0);
  c.sweep.betas = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = default_config();
  Section root(j, "");

  Section lm = root.sub("lm");
  lm.get("backend", c.lm.backend);
  lm.get("table", c.lm.table);
  lm.get("vocab", c.lm.vocab);
  lm.get("max_length", c.lm.max_length);
  lm.get("table_seed", c.lm.table_seed);
  lm.get("concentration", c.lm.concentration);
  lm.get("length", c.lm.length);
  lm.get("corpus", c.lm.corpus);
  lm.get("order", c.lm.order);
  lm.get("smoothing", c.lm.smoothing);
  lm.get("endpoint", c.lm.endpoint);
  lm.get("timeout_s", c.lm.timeout_s);
  lm.get("max_retries", c.lm.max_retries);
  lm.finish();

  Section prompt = root.sub("prompt");
  prompt.get("text", c.prompt.text);
  prompt.get("tokens", c.prompt.tokens);
  prompt.finish();

  Section reward = root.sub("reward");
  reward.get("kind", c.reward.kind);
  reward.get("mu", c.reward.mu);
  reward.get("sigma", c.reward.sigma);
  reward.get("value", c.reward.value);
  reward.get("clamp_eps", c.reward.clamp_eps);
  reward.get("endpoint", c.reward.endpoint);
  reward.get("timeout_s", c.reward.timeout_s);
  reward.get("max_retries", c.reward.max_retries);
  reward.finish();

  Section target = root.sub("target");
  target.get("beta", c.target.beta);
  std::string variant(to_string(c.target.variant));
  target.get("variant", variant);
  try {
    c.target.variant = target_variant_from_string(variant);
  } catch (const InvalidArgument& e) {
    throw ConfigError("target.variant", e.what());
  }
  target.finish();

  Section proposal = root.sub("proposal");
  std::string kind(to_string(c.proposal.kind));
  proposal.get("kind", kind);
  try {
    c.proposal.kind = proposal_kind_from_string(kind);
  } catch (const InvalidArgument& e) {
    throw ConfigError("proposal.kind", e.what());
  }
  proposal.get("temperature", c.proposal.temperature);
  proposal.get("index_weights", c.proposal.index_weights);
  proposal.get("top_k", c.proposal.top_k);
  proposal.finish();

  Section chain = root.sub("chain");
  chain.get("steps", c.chain.steps);
  chain.get("burn_in", c.chain.burn_in);
  chain.get("seed", c.chain.seed);
  chain.get("n_chains", c.chain.n_chains);
  chain.get("record_rejected", c.chain.record_rejected);
  chain.finish();

  Section baselines = root.sub("baselines");
  baselines.get("ancestral_count", c.baselines.ancestral_count);
  baselines.get("temperatures", c.baselines.temperatures);
  baselines.finish();

  Section sweep = root.sub("sweep");
  sweep.get("enabled", c.sweep.enabled);
  sweep.get("betas", c.sweep.betas);
  sweep.finish();

  Section oracle = root.sub("oracle");
  oracle.get("limit", c.oracle.limit);
  oracle.get("chain_steps", c.oracle.chain_steps);
  oracle.get("burn_in", c.oracle.burn_in);
  oracle.get("samples", c.oracle.samples);
  oracle.get("pool", c.oracle.pool);
  oracle.get("tolerance", c.oracle.tolerance);
  oracle.finish();

  root.get("output_dir", c.output_dir);
  root.finish();

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["lm"] = {{"backend", c.lm.backend},       {"table", c.lm.table},
             {"vocab", c.lm.vocab},           {"max_length", c.lm.max_length},
             {"table_seed", c.lm.table_seed}, {"concentration", c.lm.concentration},
             {"length", c.lm.length},         {"corpus", c.lm.corpus},
             {"order", c.lm.order},           {"smoothing", c.lm.smoothing},
             {"endpoint", c.lm.endpoint},     {"timeout_s", c.lm.timeout_s},
             {"max_retries", c.lm.max_retries}};
  j["prompt"] = {{"text", c.prompt.text}, {"tokens", c.prompt.tokens}};
  j["reward"] = {{"kind", c.reward.kind},
                 {"mu", c.reward.mu},
                 {"sigma", c.reward.sigma},
                 {"value", c.reward.value},
                 {"clamp_eps", c.reward.clamp_eps ? json(*c.reward.clamp_eps) : json(nullptr)},
                 {"endpoint", c.reward.endpoint},
                 {"timeout_s", c.reward.timeout_s},
                 {"max_retries", c.reward.max_retries}};
  j["target"] = {{"beta", c.target.beta},
                 {"variant", std::string(to_string(c.target.variant))}};
  j["proposal"] = {{"kind", std::string(to_string(c.proposal.kind))},
                   {"temperature", c.proposal.temperature},
                   {"index_weights", c.proposal.index_weights},
                   {"top_k", c.proposal.top_k}};
  j["chain"] = {{"steps", c.chain.steps},
                {"burn_in", c.chain.burn_in},
                {"seed", c.chain.seed},
                {"n_chains", c.chain.n_chains},
                {"record_rejected", c.chain.record_rejected}};
  j["baselines"] = {{"ancestral_count", c.baselines.ancestral_count},
                    {"temperatures", c.baselines.temperatures}};
  j["sweep"] = {{"enabled", c.sweep.enabled}, {"betas", c.sweep.betas}};
  j["oracle"] = {{"limit", c.oracle.limit},     {"chain_steps", c.oracle.chain_steps},
                 {"burn_in", c.oracle.burn_in}, {"samples", c.oracle.samples},
                 {"pool", c.oracle.pool},       {"tolerance", c.oracle.tolerance}};
  j["output_dir"] = c.output_dir;
  return j;
}

void validate_config(ExperimentConfig& c) {
  const auto& lm = c.lm;
  require(lm.backend == "tabular" || lm.backend == "ngram" || lm.backend == "remote",
          "lm.backend", "expected tabular, ngram or remote");
  require(lm.max_length >= 1, "lm.max_length", "must be >= 1");
  if (lm.backend != "ngram") {
    require(!lm.vocab.empty(), "lm.vocab", "must list at least one token");
    std::set<std::string> unique(lm.vocab.begin(), lm.vocab.end());
    require(unique.size() == lm.vocab.size(), "lm.vocab", "symbols must be unique");
  }
  if (lm.backend == "tabular") {
    require(lm.table == "random" || lm.table == "uniform" || lm.table == "fixed-length",
            "lm.table", "expected random, uniform or fixed-length");
    require(positive(lm.concentration), "lm.concentration", "must be > 0");
    if (lm.table == "fixed-length") {
      require(lm.length >= 1, "lm.length", "must be >= 1");
      require(lm.length == lm.max_length, "lm.max_length",
              "must equal lm.length for fixed-length tables");
    }
  } else if (lm.backend == "ngram") {
    require(!lm.corpus.empty(), "lm.corpus", "path required for the ngram backend");
    require(std::filesystem::exists(lm.corpus), "lm.corpus",
            "file does not exist: " + lm.corpus);
    require(lm.order >= 1, "lm.order", "must be >= 1");
    require(positive(lm.smoothing), "lm.smoothing", "must be > 0");
  } else {
    fill_endpoint(c.lm.endpoint, kLmEndpointEnv);
    require(c.lm.endpoint.rfind("http://", 0) == 0, "lm.endpoint",
            std::string("http:// URL required (or set ") + kLmEndpointEnv + ")");
    require(positive(lm.timeout_s), "lm.timeout_s", "must be > 0");
    require(lm.max_retries >= 0, "lm.max_retries", "must be >= 0");
  }

  if (lm.backend != "ngram") {
    for (const auto& t : c.prompt.tokens) {
      require(std::find(lm.vocab.begin(), lm.vocab.end(), t) != lm.vocab.end(),
              "prompt.tokens", "unknown token '" + t + "'");
    }
  }
  if (lm.backend == "remote") {
    require(!c.prompt.text.empty(), "prompt.text", "remote backends need prompt text");
    require(c.proposal.kind != ProposalKind::token_full_conditional, "proposal.kind",
            "token-full-conditional needs next-token tables from a local backend");
  }

  const auto& r = c.reward;
  require(r.kind == "length-gaussian" || r.kind == "constant" ||
              r.kind == "remote-scorer",
          "reward.kind", "expected length-gaussian, constant or remote-scorer");
  if (r.clamp_eps) {
    require(*r.clamp_eps > 0.0 && *r.clamp_eps < 0.5, "reward.clamp_eps",
            "must lie in (0, 0.5)");
  }
  if (r.kind == "length-gaussian") {
    require(std::isfinite(r.mu), "reward.mu", "must be finite");
    require(positive(r.sigma), "reward.sigma", "must be > 0");
    require(r.clamp_eps.has_value(), "reward.clamp_eps",
            "length-gaussian needs a clamp epsilon");
  } else if (r.kind == "constant") {
    require(std::isfinite(r.value), "reward.value", "must be finite");
  } else {
    fill_endpoint(c.reward.endpoint, kScorerEndpointEnv);
    require(c.reward.endpoint.rfind("http://", 0) == 0, "reward.endpoint",
            std::string("http:// URL required (or set ") + kScorerEndpointEnv + ")");
    require(positive(r.timeout_s), "reward.timeout_s", "must be > 0");
    require(r.max_retries >= 0, "reward.max_retries", "must be >= 0");
  }

  require(positive(c.target.beta), "target.beta", "must be > 0");
  if (c.target.variant == TargetVariant::kl_regularized) {
    require(c.proposal.kind == ProposalKind::suffix_resample, "proposal.kind",
            "the kl-regularized target requires suffix-resample");
  }

  require(positive(c.proposal.temperature), "proposal.temperature", "must be > 0");
  if (!c.proposal.index_weights.empty()) {
    require(positive(c.proposal.index_weights.front()), "proposal.index_weights",
            "first weight must be > 0");
    for (double w : c.proposal.index_weights) {
      require(std::isfinite(w) && w >= 0.0, "proposal.index_weights",
              "weights must be finite and >= 0");
    }
  }

  require(c.chain.steps >= 1, "chain.steps", "must be >= 1");
  require(c.chain.burn_in < c.chain.steps, "chain.burn_in", "must be below chain.steps");
  require(c.chain.n_chains >= 1, "chain.n_chains", "must be >= 1");

  require(c.baselines.ancestral_count >= 1, "baselines.ancestral_count", "must be >= 1");
  require(!c.baselines.temperatures.empty(), "baselines.temperatures",
          "grid must not be empty");
  for (double t : c.baselines.temperatures) {
    require(positive(t), "baselines.temperatures", "temperatures must be > 0");
  }

  if (c.sweep.enabled) {
    require(!c.sweep.betas.empty(), "sweep.betas", "grid must not be empty");
  }
  for (double b : c.sweep.betas) require(positive(b), "sweep.betas", "betas must be > 0");

  require(positive(c.oracle.limit), "oracle.limit", "must be > 0");
  require(c.oracle.chain_steps >= 1, "oracle.chain_steps", "must be >= 1");
  require(c.oracle.burn_in < c.oracle.chain_steps, "oracle.burn_in",
          "must be below oracle.chain_steps");
  require(c.oracle.samples >= 1, "oracle.samples", "must be >= 1");
  require(c.oracle.pool >= 1, "oracle.pool", "must be >= 1");
  require(positive(c.oracle.tolerance), "oracle.tolerance", "must be > 0");

  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

std::vector<std::uint64_t> chain_seeds(const ExperimentConfig& config) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(config.chain.n_chains);
  for (std::size_t k = 0; k < config.chain.n_chains; ++k) {
    seeds.push_back(splitmix64(config.chain.seed * 0x100000001b3ULL + k));
  }
  return seeds;
}

Experiment build_experiment(const ExperimentConfig& config) {
  Experiment e;
  e.config = config;
  e.lm = build_lm(config.lm);
  e.prompt.text = config.prompt.text;
  if (!config.prompt.tokens.empty()) {
    e.prompt.tokens = e.lm->vocab().encode(config.prompt.tokens);
  }
  e.target.reward = build_reward(config.reward, e.lm->vocab());
  e.target.beta = config.target.beta;
  e.target.variant = config.target.variant;
  if (config.target.variant == TargetVariant::kl_regularized) e.target.lm = e.lm;
  e.proposal.kind = config.proposal.kind;
  e.proposal.temperature = config.proposal.temperature;
  e.proposal.top_k = config.proposal.top_k;
  if (!config.proposal.index_weights.empty()) {
    e.proposal.index = IndexDistribution::custom(config.proposal.index_weights);
  }
  e.chain.steps = config.chain.steps;
  e.chain.burn_in = config.chain.burn_in;
  e.chain.seed = config.chain.seed;
  e.chain.record_rejected = config.chain.record_rejected;
  return e;
}

}  // namespace quest
