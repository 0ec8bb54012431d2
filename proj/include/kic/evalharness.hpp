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

// Evaluation protocol: dataset loading, correctness judges, representative
// selection baselines, per-run metrics and threshold sweeps.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kic/backends.hpp"
#include "kic/cascade.hpp"
#include "kic/scoring.hpp"

namespace kic {

// ---------------------------------------------------------------------------
// Datasets

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct EvalItem {
  std::string query_id;
  std::string question;
  std::string reference_answer;
};

enum class DatasetFormat {
  // {"id": ..., "question": ..., "reference_answer": ...} per line.
  kJsonl,
  // CSV with a header containing "Question" and "Best Answer" columns (the
  // TruthfulQA release layout). Ids come from an "id" column when present,
  // otherwise "tqa-<row>" counting data rows from 1.
  kTruthfulQaCsv,
};

DatasetFormat parse_dataset_format(const std::string& name);

std::vector<EvalItem> parse_dataset(std::istream& in, DatasetFormat format);
std::vector<EvalItem> load_dataset(const std::filesystem::path& path,
                                   DatasetFormat format);

// RFC 4180 record splitter: quoted fields, doubled quotes, embedded newlines.
// Returns each record with the line number it started on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(
    std::istream& in);

// ---------------------------------------------------------------------------
// Judges

class JudgeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JudgeKind { kLlm, kOffline };

struct JudgeVerdict {
  std::string query_id;
  bool correct = false;
  JudgeKind judge_kind = JudgeKind::kOffline;
  std::string raw_judge_output;
};

std::string build_judge_prompt(const std::string& question,
                               const std::string& answer,
                               const std::string& reference);

// Leading "true"/"false" token, case-insensitive, surrounding whitespace,
// quotes and punctuation ignored. Anything else throws JudgeParseError.
bool parse_judge_output(const std::string& raw);

JudgeVerdict judge_llm(const std::string& question, const std::string& answer,
                       const std::string& reference, ModelBackend& judge_backend,
                       const ModelSpec& judge_spec);

// Lowercase, drop punctuation, collapse whitespace.
std::string normalize_for_match(const std::string& text);

// Correct iff the normalized reference is a substring of the normalized
// answer. An empty normalized answer or reference is never correct.
JudgeVerdict judge_offline(const std::string& answer,
                           const std::string& reference);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeVerdict judge(const EvalItem& item, const std::string& answer) = 0;
};

class OfflineJudge final : public Judge {
 public:
  JudgeVerdict judge(const EvalItem& item, const std::string& answer) override;
};

class LlmJudge final : public Judge {
 public:
  LlmJudge(ModelBackend& backend, ModelSpec spec);
  JudgeVerdict judge(const EvalItem& item, const std::string& answer) override;

 private:
  ModelBackend& backend_;
  ModelSpec spec_;
};

// Memoizes verdicts per (query_id, answer); sweeps re-judge the same final
// answers at many thresholds.
class CachingJudge final : public Judge {
 public:
  explicit CachingJudge(Judge& inner);
  JudgeVerdict judge(const EvalItem& item, const std::string& answer) override;
  std::size_t inner_calls() const;

 private:
  Judge& inner_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, JudgeVerdict> cache_;
  std::size_t inner_calls_ = 0;
};

// ---------------------------------------------------------------------------
// Representative selection baselines

enum class SelectionStrategy { kGreedy, kRandom, kExactMatch, kKic };

SelectionStrategy parse_selection_strategy(const std::string& name);
const char* to_string(SelectionStrategy s);

struct ExactMatchClusters {
  std::size_t rep_id = 0;        // first member of the largest cluster
  std::size_t largest_size = 0;  // its size
};

// Clusters raw texts by normalize_for_match equality. Ties between equally
// large clusters go to the one containing the lowest index.
ExactMatchClusters exact_match_clusters(const std::vector<std::string>& texts);

struct BaselineOptions {
  std::size_t k = 10;
  double alpha = 1.5;
  std::uint64_t seed = 0;
  // Mixed into the random baseline's seed so each query draws independently.
  std::string draw_key;
};

// greedy -> 0 (the fallback when no temperature-0 response is recorded),
// random -> uniform under the seed, exact-match -> exact_match_clusters,
// kic -> select_representative.
std::size_t baseline_select(const Corpus& corpus, SelectionStrategy strategy,
                            const BaselineOptions& options = {});

// Answer text a strategy picks for a recorded query; greedy prefers the
// record's greedy_response.
std::string baseline_answer(const ReplayRecord& record,
                            SelectionStrategy strategy,
                            const CascadeParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Runs and sweeps

enum class RoutingMethod {
  kKic,         // keyword-weighted consistency
  kExactMatch,  // escalate when the largest exact-match cluster < tau
};

RoutingMethod parse_routing_method(const std::string& name);
const char* to_string(RoutingMethod m);

// Exact-match routing rule for run_query.
ResponseAnalysis analyze_exact_match(const std::vector<std::string>& responses,
                                     const CascadeParams& params);

struct QueryResult {
  std::string query_id;
  std::optional<CascadeOutcome> outcome;
  std::optional<JudgeVerdict> verdict;
  Dollars cost;
  std::string error;  // non-empty iff the query failed

  bool failed() const { return !error.empty(); }
};

struct RunReport {
  std::string dataset_name;
  std::string method;
  CascadeParams params;
  std::size_t n_queries = 0;  // completed (judged) queries
  std::size_t n_failed = 0;
  std::size_t n_correct = 0;
  std::size_t n_escalated = 0;
  double accuracy = 0.0;               // n_correct / n_queries
  double strong_usage_fraction = 0.0;  // n_escalated / n_queries
  Dollars total_cost;
  std::vector<QueryResult> per_query;
};

struct BenchmarkConfig {
  std::string dataset_name;
  CascadeParams params;
  RoutingMethod method = RoutingMethod::kKic;
  PricingTable pricing;
  ModelSpec weak_spec = ModelSpec::weak_default("gpt-3.5-turbo", 10);
  ModelSpec strong_spec = ModelSpec::strong_default("gpt-4");
  // Queries evaluated concurrently; results are always folded in item order.
  std::size_t parallelism = 1;
};

// Runs the cascade on every item and judges the final answer against the
// item's reference. Failing queries are kept in per_query with their error
// and counted in n_failed, outside the accuracy denominator.
RunReport run_benchmark(const std::vector<EvalItem>& items, ModelBackend& weak,
                        ModelBackend& strong, Judge& judge,
                        const BenchmarkConfig& config);

// Reference run answering every query with the strong model alone.
RunReport run_strong_only(const std::vector<EvalItem>& items,
                          ModelBackend& strong, Judge& judge,
                          const BenchmarkConfig& config);

// Rebuilds the aggregate fields of a report from its per_query records.
RunReport recompute_aggregates(RunReport report);

// 100 * value / reference. Throws std::domain_error on a zero reference.
double relative_percent(double value, double reference);

struct SweepRow {
  std::size_t tau = 0;
  RunReport report;
  std::optional<double> relative_performance;  // percent of strong-only accuracy
  std::optional<double> relative_cost;         // percent of strong-only cost
};

struct SweepReport {
  std::string dataset_name;
  std::string method;
  std::vector<SweepRow> rows;
  std::optional<RunReport> strong_reference;
};

SweepReport sweep_tau(const std::vector<EvalItem>& items, ModelBackend& weak,
                      ModelBackend& strong, Judge& judge,
                      const BenchmarkConfig& config,
                      const std::vector<std::size_t>& taus,
                      bool with_strong_reference = true);

// Columns: tau,accuracy,total_cost_usd,strong_usage_fraction,n_queries,n_failed
void write_sweep_csv(const SweepReport& sweep, std::ostream& out);

nlohmann::ordered_json to_json(const RunReport& report,
                               bool include_per_query = true);
nlohmann::ordered_json to_json(const SweepReport& sweep);

// One CascadeOutcome (plus verdict) per line, in item order.
void write_outcomes_jsonl(const RunReport& report, std::ostream& out);

struct SelectorAccuracy {
  SelectionStrategy strategy;
  std::size_t n_queries = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

// Judges each strategy's chosen weak answer without any escalation.
std::vector<SelectorAccuracy> compare_selectors(
    const std::vector<EvalItem>& items, const ReplayStore& store, Judge& judge,
    const CascadeParams& params, const std::vector<SelectionStrategy>& strategies,
    std::uint64_t seed);

}  // namespace kic
