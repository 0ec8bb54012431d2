// Copyright 2026 The kic-cascade Authors
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
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kic/cascade.hpp"
#include "kic/evalharness.hpp"

namespace kic::cli {

enum class Mode { kLive, kReplay };
enum class JudgeChoice { kLlm, kOffline };

// Everything a command needs. Populated from defaults, then an optional JSON
// config file, then command-line flags. Relative paths in a config file are
// resolved against the file's directory.
struct RunConfig {
  std::filesystem::path dataset;
  DatasetFormat dataset_format = DatasetFormat::kJsonl;
  std::filesystem::path fixtures;
  Mode mode = Mode::kReplay;
  CascadeParams params;
  RoutingMethod method = RoutingMethod::kKic;
  std::filesystem::path pricing;
  JudgeChoice judge = JudgeChoice::kOffline;
  std::filesystem::path out_dir = "kic_out";
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;

  std::string weak_model = "gpt-3.5-turbo";
  std::string strong_model = "gpt-4";
  std::string judge_model = "gpt-4";
  std::string endpoint = "https://api.openai.com/v1";
  std::size_t max_output_tokens = 512;
  std::int64_t retry_backoff_ms = 1000;
  std::optional<std::filesystem::path> stopwords;

  std::size_t tau_min = 1;
  std::optional<std::size_t> tau_max;  // defaults to n_samples
  bool record_greedy = false;
  bool overwrite = false;
};

// Applies the keys of a JSON config object. Unknown keys are rejected.
void apply_config_json(RunConfig& config, const nlohmann::json& j,
                       const std::filesystem::path& base_dir);

// Entry point shared by the `kic` binary and the tests. Returns the process
// exit code: 0 success, 1 runtime failure, 2 usage or config error, 3 a
// post-run invariant check failed.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace kic::cli
