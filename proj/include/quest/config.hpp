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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quest/engine.hpp"
#include "quest/lm.hpp"
#include "quest/proposal.hpp"
#include "quest/reward.hpp"
#include "quest/target.hpp"

namespace quest {

inline constexpr const char* kLmEndpointEnv = "QUEST_LM_ENDPOINT";
inline constexpr const char* kScorerEndpointEnv = "QUEST_SCORER_ENDPOINT";

struct LmConfig {
  std::string backend = "tabular";  // tabular | ngram | remote
  // tabular: random | uniform | fixed-length
  std::string table = "random";
  std::vector<std::string> vocab{"a", "b", "c"};
  std::size_t max_length = 5;
  std::uint64_t table_seed = 7;
  double concentration = 1.0;
  std::size_t length = 4;  // fixed-length tables
  // ngram
  std::string corpus;
  int order = 2;
  double smoothing = 0.01;
  // remote
  std::string endpoint;
  double timeout_s = 30.0;
  int max_retries = 2;

  bool operator==(const LmConfig&) const = default;
};

struct PromptConfig {
  std::string text = "toy";
  std::vector<std::string> tokens;

  bool operator==(const PromptConfig&) const = default;
};

struct RewardConfig {
  std::string kind = "length-gaussian";  // length-gaussian | constant | remote-scorer
  double mu = 7.5;
  double sigma = 3.75;
  double value = 0.0;
  std::optional<double> clamp_eps = kDefaultClampEps;
  std::string endpoint;
  double timeout_s = 30.0;
  int max_retries = 2;

  bool operator==(const RewardConfig&) const = default;
};

struct TargetConfig {
  double beta = 0.5;
  TargetVariant variant = TargetVariant::plain;

  bool operator==(const TargetConfig&) const = default;
};

struct ProposalConfig {
  ProposalKind kind = ProposalKind::suffix_resample;
  double temperature = 1.0;
  std::vector<double> index_weights;  // empty: uniform
  std::size_t top_k = 0;

  bool operator==(const ProposalConfig&) const = default;
};

struct ChainSection {
  std::size_t steps = 128;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  std::size_t n_chains = 4;
  bool record_rejected = true;

  bool operator==(const ChainSection&) const = default;
};

struct BaselineConfig {
  std::size_t ancestral_count = 128;
  std::vector<double> temperatures;

  bool operator==(const BaselineConfig&) const = default;
};

struct SweepConfig {
  bool enabled = false;
  std::vector<double> betas;

  bool operator==(const SweepConfig&) const = default;
};

struct OracleConfig {
  double limit = 1e7;
  std::size_t chain_steps = 200000;
  std::size_t burn_in = 10000;
  std::size_t samples = 128;
  std::size_t pool = 512;
  double tolerance = 1e-9;

  bool operator==(const OracleConfig&) const = default;
};

struct ExperimentConfig {
  LmConfig lm;
  PromptConfig prompt;
  RewardConfig reward;
  TargetConfig target;
  ProposalConfig proposal;
  ChainSection chain;
  BaselineConfig baselines;
  SweepConfig sweep;
  OracleConfig oracle;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

// Shipped defaults: toy tabular LM and the standard decoding grids
// (temperatures 0.2..1.0 step 0.1, beta in {0.01, ..., 1.0}, T = 128,
// 128 ancestral samples, proposal temperature 0.8).
ExperimentConfig default_config();

// Parses and validates. Missing keys take defaults; unknown keys and bad
// values throw ConfigError naming the key (e.g. "target.beta").
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Throws ConfigError on the first invalid key. Fills endpoints from the
// environment when unset.
void validate_config(ExperimentConfig& config);

// Chain seeds derived from chain.seed, one per chain.
std::vector<std::uint64_t> chain_seeds(const ExperimentConfig& config);

// Objects built from a validated config.
struct Experiment {
  ExperimentConfig config;
  std::shared_ptr<const LanguageModel> lm;
  Prompt prompt;
  GibbsTarget target;
  ProposalSpec proposal;
  ChainConfig chain;
};

Experiment build_experiment(const ExperimentConfig& config);

}  // namespace quest
