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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quest/config.hpp"
#include "quest/engine.hpp"

namespace quest {

inline constexpr const char* kTraceSchema = "quest-trace/1";
inline constexpr const char* kAncestralSchema = "quest-ancestral/1";

// Malformed or mismatched trace / baseline files.
class TraceFormatError : public Error {
 public:
  using Error::Error;
};

// Writes `content` to path.tmp and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

// One header record followed by one record per step (and an error record
// when `error` is set).
std::string trace_to_jsonl(const ChainTrace& trace, const Vocab& vocab,
                           const ExperimentConfig& config, std::size_t chain,
                           std::uint64_t seed,
                           const std::optional<std::string>& error = std::nullopt);

struct LoadedTrace {
  nlohmann::json header;
  ExperimentConfig config;
  std::vector<std::string> vocab;
  ChainTrace trace;
  std::optional<std::string> error;
};

LoadedTrace read_trace(const std::filesystem::path& path);

struct LoadedSamples {
  std::string schema;
  std::vector<std::string> vocab;
  std::vector<Sequence> samples;
};

// Accepts either a trace (accepted states) or an ancestral baseline file.
LoadedSamples read_samples(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: config.output_dir
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

// Each command returns 0 when every output was written, non-zero
// otherwise. Errors before any work starts are thrown.
int cmd_run(const ExperimentConfig& config, const RunOptions& options);
int cmd_oracle(const ExperimentConfig& config, const RunOptions& options);

struct CompareOptions {
  std::vector<std::filesystem::path> traces;
  std::vector<std::filesystem::path> baselines;
  std::filesystem::path out_dir = "compare";
  std::size_t proposals = 25000;  // per proposal kind; 0 skips the deltas
  std::size_t index_buckets = 10;
};

int cmd_compare(const CompareOptions& options);

}  // namespace quest
