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

// Weak-to-strong cascade for a single query: sample the weak model, pick a
// representative, measure consistency, and escalate when N_sim < tau.

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kic/backends.hpp"
#include "kic/consistency.hpp"
#include "kic/textproc.hpp"

namespace kic {

class EmptyResponseSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CascadeParams {
  std::size_t n_samples = 10;
  std::size_t k = 10;
  double alpha = 1.5;
  double beta = 2.0;
  std::size_t tau = 8;
  NormalizationConfig normalization = default_normalization();
  RepKeywordOptions rep_keywords;

  // 1 <= tau <= n_samples, 1 < alpha < beta, n_samples >= 1, k >= 1.
  // Throws std::invalid_argument.
  void validate() const;
};

enum class Decision { kAcceptedWeak, kEscalated };

const char* to_string(Decision d);

// Accept the weak representative iff n_sim >= tau.
Decision decide(std::size_t n_sim, std::size_t tau);

struct CascadeOutcome {
  std::string query_id;
  Decision decision = Decision::kAcceptedWeak;
  std::size_t rep_id = 0;
  std::size_t n_sim = 0;
  double s_star = 0.0;
  std::string final_answer;
  Usage weak_usage;
  std::optional<Usage> strong_usage;
  std::chrono::nanoseconds elapsed{0};
};

// Timing is left out unless requested so replayed outcomes serialize
// byte-identically.
nlohmann::ordered_json to_json(const CascadeOutcome& outcome,
                               bool include_timing = false);

// What a routing rule extracts from the weak responses.
struct ResponseAnalysis {
  std::size_t rep_id = 0;
  std::size_t n_sim = 0;
  double s_star = 0.0;
};

using ResponseAnalyzer = std::function<ResponseAnalysis(
    const std::vector<std::string>& responses, const CascadeParams& params)>;

// Keyword-weighted selection followed by consistency counting.
ResponseAnalysis analyze_responses(const std::vector<std::string>& responses,
                                   const CascadeParams& params);

struct CascadeModels {
  ModelBackend& weak;
  ModelSpec weak_spec;
  ModelBackend& strong;
  ModelSpec strong_spec;
  // Optional; every backend call made by run_query is added to it.
  UsageLedger* ledger = nullptr;
};

// BackendError and EmptyResponseSet propagate; there is no fallback to the
// weak answer when the strong model fails.
CascadeOutcome run_query(const Query& query, const CascadeModels& models,
                         const CascadeParams& params);

// Same orchestration with a caller-supplied routing rule.
CascadeOutcome run_query(const Query& query, const CascadeModels& models,
                         const CascadeParams& params,
                         const ResponseAnalyzer& analyzer);

}  // namespace kic
