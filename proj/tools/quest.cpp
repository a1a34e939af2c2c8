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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quest/commands.hpp"
#include "quest/config.hpp"
#include "quest/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"quest: Metropolis-Hastings sampling from reward-weighted LMs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "base seed (overrides chain.seed)");
    cmd->add_option("--jobs", jobs, "worker threads; 0 uses the OpenMP default");
  };
  auto* run = app.add_subcommand("run", "run chains and baselines, write traces and a report");
  add_common(run);
  auto* oracle = app.add_subcommand("oracle", "exact-target checks on an enumerable setup");
  add_common(oracle);

  quest::CompareOptions compare_opts;
  std::string compare_out = "compare";
  auto* compare = app.add_subcommand("compare", "ablation statistics over traces");
  compare->add_option("--trace", compare_opts.traces, "chain trace files")->required();
  compare->add_option("--baseline", compare_opts.baselines,
                      "ancestral or trace files to compare against");
  compare->add_option("--out", compare_out, "output directory");
  compare->add_option("--proposals", compare_opts.proposals,
                      "proposals per kind for the reward-delta histograms (0 skips)");
  compare->add_option("--index-buckets", compare_opts.index_buckets,
                      "buckets for the accepted-index histogram");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compare) {
      compare_opts.out_dir = compare_out;
      return quest::cmd_compare(compare_opts);
    }
    const auto config = quest::load_config(config_path);
    quest::RunOptions options{out_dir, seed, jobs};
    return *run ? quest::cmd_run(config, options) : quest::cmd_oracle(config, options);
  } catch (const quest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
