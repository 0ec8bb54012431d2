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

#include "kic/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <thread>

namespace kic {
namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::ordered_json params_json(const CascadeParams& p) {
  return {{"n_samples", p.n_samples}, {"k", p.k},       {"alpha", p.alpha},
          {"beta", p.beta},           {"tau", p.tau}};
}

double cost_usd(Dollars d) {
  return static_cast<double>(d.micros_rounded()) / 1e6;
}

Dollars outcome_cost(const CascadeOutcome& o, const BenchmarkConfig& config) {
  Dollars total = cost(o.weak_usage, config.weak_spec.model_name, config.pricing);
  if (o.strong_usage) {
    total += cost(*o.strong_usage, config.strong_spec.model_name, config.pricing);
  }
  return total;
}

// Evaluates `fn(i)` for every index with up to `parallelism` workers and
// returns results in index order.
template <typename Fn>
std::vector<QueryResult> for_each_item(std::size_t n, std::size_t parallelism,
                                       Fn&& fn) {
  std::vector<QueryResult> results(n);
  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) results[i] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "truthfulqa-csv") return DatasetFormat::kTruthfulQaCsv;
  throw std::invalid_argument("unknown dataset format '" + name +
                              "' (expected jsonl or truthfulqa-csv)");
}

std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(
    std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  char c;
  auto end_record = [&] {
    fields.push_back(std::move(field));
    field.clear();
    const bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) records.emplace_back(record_line, std::move(fields));
    fields.clear();
    any = false;
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (!any) {
      record_line = line;
      any = true;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // CRLF line endings.
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw ParseError(record_line, "unterminated quoted field");
  if (any) end_record();
  return records;
}

namespace {

std::vector<EvalItem> parse_jsonl_dataset(std::istream& in) {
  std::vector<EvalItem> items;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;
    EvalItem item;
    try {
      const auto j = nlohmann::json::parse(line);
      item.query_id = j.at("id").get<std::string>();
      item.question = j.at("question").get<std::string>();
      item.reference_answer = j.at("reference_answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (item.question.empty()) throw ParseError(line_no, "empty question");
    if (item.reference_answer.empty()) {
      throw ParseError(line_no, "empty reference_answer");
    }
    if (!seen.insert(item.query_id).second) {
      throw ParseError(line_no, "duplicate id '" + item.query_id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<EvalItem> parse_truthfulqa_csv(std::istream& in) {
  const auto records = parse_csv(in);
  if (records.empty()) throw ParseError(1, "missing CSV header");
  const auto& header = records.front().second;
  std::optional<std::size_t> q_col, a_col, id_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = lower_ascii(trim_copy(header[i]));
    if (name == "question") q_col = i;
    if (name == "best answer") a_col = i;
    if (name == "id") id_col = i;
  }
  if (!q_col || !a_col) {
    throw ParseError(records.front().first,
                     "header needs 'Question' and 'Best Answer' columns");
  }
  std::vector<EvalItem> items;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& [line_no, row] = records[r];
    const std::size_t need = std::max({*q_col, *a_col, id_col.value_or(0)}) + 1;
    if (row.size() < need) throw ParseError(line_no, "too few columns");
    EvalItem item;
    item.query_id = id_col ? trim_copy(row[*id_col]) : "tqa-" + std::to_string(r);
    item.question = trim_copy(row[*q_col]);
    item.reference_answer = trim_copy(row[*a_col]);
    if (item.question.empty()) throw ParseError(line_no, "empty question");
    if (item.reference_answer.empty()) {
      throw ParseError(line_no, "empty best answer");
    }
    if (!seen.insert(item.query_id).second) {
      throw ParseError(line_no, "duplicate id '" + item.query_id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

std::vector<EvalItem> parse_dataset(std::istream& in, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kJsonl:
      return parse_jsonl_dataset(in);
    case DatasetFormat::kTruthfulQaCsv:
      return parse_truthfulqa_csv(in);
  }
  return {};
}

std::vector<EvalItem> load_dataset(const std::filesystem::path& path,
                                   DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
  return parse_dataset(in, format);
}

// ---------------------------------------------------------------------------
// Judges

std::string build_judge_prompt(const std::string& question,
                               const std::string& answer,
                               const std::string& reference) {
  return "You are grading an answer to a question against a reference "
         "answer.\n\n"
         "Question:\n" + question + "\n\n"
         "Reference answer:\n" + reference + "\n\n"
         "Model answer:\n" + answer + "\n\n"
         "Is the model answer correct with respect to the reference answer? "
         "Reply with exactly one word: True or False.";
}

bool parse_judge_output(const std::string& raw) {
  std::size_t i = 0;
  while (i < raw.size() &&
         !std::isalpha(static_cast<unsigned char>(raw[i]))) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (!std::isspace(c) && !std::ispunct(c)) break;
    ++i;
  }
  std::size_t j = i;
  while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) ++j;
  const auto word = lower_ascii(raw.substr(i, j - i));
  if (word == "true") return true;
  if (word == "false") return false;
  throw JudgeParseError("unparseable judge output: '" + raw.substr(0, 80) + "'");
}

JudgeVerdict judge_llm(const std::string& question, const std::string& answer,
                       const std::string& reference, ModelBackend& judge_backend,
                       const ModelSpec& judge_spec) {
  ModelSpec spec = judge_spec;
  spec.n_choices = 1;
  const auto result = judge_backend.sample(
      Query{"judge", build_judge_prompt(question, answer, reference)}, spec);
  if (result.responses.empty()) {
    throw JudgeParseError("judge returned no output");
  }
  JudgeVerdict v;
  v.judge_kind = JudgeKind::kLlm;
  v.raw_judge_output = result.responses.front();
  v.correct = parse_judge_output(v.raw_judge_output);
  return v;
}

std::string normalize_for_match(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (std::ispunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

JudgeVerdict judge_offline(const std::string& answer,
                           const std::string& reference) {
  const auto a = normalize_for_match(answer);
  const auto r = normalize_for_match(reference);
  JudgeVerdict v;
  v.judge_kind = JudgeKind::kOffline;
  v.correct = !a.empty() && !r.empty() && a.find(r) != std::string::npos;
  v.raw_judge_output = v.correct ? "True" : "False";
  return v;
}

JudgeVerdict OfflineJudge::judge(const EvalItem& item,
                                 const std::string& answer) {
  auto v = judge_offline(answer, item.reference_answer);
  v.query_id = item.query_id;
  return v;
}

LlmJudge::LlmJudge(ModelBackend& backend, ModelSpec spec)
    : backend_(backend), spec_(std::move(spec)) {}

JudgeVerdict LlmJudge::judge(const EvalItem& item, const std::string& answer) {
  auto v = judge_llm(item.question, answer, item.reference_answer, backend_,
                     spec_);
  v.query_id = item.query_id;
  return v;
}

CachingJudge::CachingJudge(Judge& inner) : inner_(inner) {}

JudgeVerdict CachingJudge::judge(const EvalItem& item,
                                 const std::string& answer) {
  auto key = std::make_pair(item.query_id, answer);
  {
    std::lock_guard lock(mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto v = inner_.judge(item, answer);
  std::lock_guard lock(mu_);
  ++inner_calls_;
  return cache_.emplace(std::move(key), std::move(v)).first->second;
}

std::size_t CachingJudge::inner_calls() const {
  std::lock_guard lock(mu_);
  return inner_calls_;
}

// ---------------------------------------------------------------------------
// Baselines

SelectionStrategy parse_selection_strategy(const std::string& name) {
  if (name == "greedy") return SelectionStrategy::kGreedy;
  if (name == "random") return SelectionStrategy::kRandom;
  if (name == "exact-match") return SelectionStrategy::kExactMatch;
  if (name == "kic") return SelectionStrategy::kKic;
  throw std::invalid_argument("unknown selection strategy '" + name + "'");
}

const char* to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kGreedy: return "greedy";
    case SelectionStrategy::kRandom: return "random";
    case SelectionStrategy::kExactMatch: return "exact-match";
    case SelectionStrategy::kKic: return "kic";
  }
  return "?";
}

ExactMatchClusters exact_match_clusters(const std::vector<std::string>& texts) {
  ExactMatchClusters out;
  // normalized text -> (first index, size); first index order doubles as
  // the tie-break order.
  std::map<std::string, std::pair<std::size_t, std::size_t>> clusters;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto [it, inserted] =
        clusters.try_emplace(normalize_for_match(texts[i]), i, 0);
    ++it->second.second;
  }
  for (const auto& [text, entry] : clusters) {
    const auto [first, size] = entry;
    if (size > out.largest_size ||
        (size == out.largest_size && first < out.rep_id)) {
      out.rep_id = first;
      out.largest_size = size;
    }
  }
  return out;
}

std::size_t baseline_select(const Corpus& corpus, SelectionStrategy strategy,
                            const BaselineOptions& options) {
  switch (strategy) {
    case SelectionStrategy::kGreedy:
      return 0;
    case SelectionStrategy::kRandom: {
      std::mt19937_64 rng(options.seed ^ fnv1a64(options.draw_key));
      return static_cast<std::size_t>(rng() % corpus.size());
    }
    case SelectionStrategy::kExactMatch: {
      std::vector<std::string> texts;
      for (const auto& d : corpus.docs()) texts.push_back(d.raw_text);
      return exact_match_clusters(texts).rep_id;
    }
    case SelectionStrategy::kKic:
      return select_representative(corpus, options.k, options.alpha).rep_id;
  }
  return 0;
}

std::string baseline_answer(const ReplayRecord& record,
                            SelectionStrategy strategy,
                            const CascadeParams& params, std::uint64_t seed) {
  if (strategy == SelectionStrategy::kGreedy && record.greedy_response) {
    return *record.greedy_response;
  }
  const std::size_t n = std::min(params.n_samples, record.weak_responses.size());
  std::vector<std::string> texts(record.weak_responses.begin(),
                                 record.weak_responses.begin() +
                                     static_cast<std::ptrdiff_t>(n));
  const auto corpus = Corpus::from_texts(texts, params.normalization);
  BaselineOptions options{params.k, params.alpha, seed, record.query_id};
  return texts.at(baseline_select(corpus, strategy, options));
}

// ---------------------------------------------------------------------------
// Runs

RoutingMethod parse_routing_method(const std::string& name) {
  if (name == "kic") return RoutingMethod::kKic;
  if (name == "exact-match") return RoutingMethod::kExactMatch;
  throw std::invalid_argument("unknown routing method '" + name +
                              "' (expected kic or exact-match)");
}

const char* to_string(RoutingMethod m) {
  return m == RoutingMethod::kKic ? "kic" : "exact-match";
}

ResponseAnalysis analyze_exact_match(const std::vector<std::string>& responses,
                                     const CascadeParams&) {
  const auto clusters = exact_match_clusters(responses);
  return {clusters.rep_id, clusters.largest_size,
          static_cast<double>(clusters.largest_size)};
}

RunReport recompute_aggregates(RunReport report) {
  report.n_queries = report.n_failed = report.n_correct = report.n_escalated = 0;
  report.total_cost = Dollars{};
  for (const auto& q : report.per_query) {
    report.total_cost += q.cost;
    if (q.failed()) {
      ++report.n_failed;
      continue;
    }
    ++report.n_queries;
    if (q.verdict && q.verdict->correct) ++report.n_correct;
    if (q.outcome && q.outcome->decision == Decision::kEscalated) {
      ++report.n_escalated;
    }
  }
  const double n = static_cast<double>(report.n_queries);
  report.accuracy = report.n_queries ? report.n_correct / n : 0.0;
  report.strong_usage_fraction = report.n_queries ? report.n_escalated / n : 0.0;
  return report;
}

RunReport run_benchmark(const std::vector<EvalItem>& items, ModelBackend& weak,
                        ModelBackend& strong, Judge& judge,
                        const BenchmarkConfig& config) {
  config.params.validate();
  const CascadeModels models{weak, config.weak_spec, strong, config.strong_spec};
  const ResponseAnalyzer analyzer = config.method == RoutingMethod::kKic
                                        ? ResponseAnalyzer(analyze_responses)
                                        : ResponseAnalyzer(analyze_exact_match);
  RunReport report;
  report.dataset_name = config.dataset_name;
  report.method = to_string(config.method);
  report.params = config.params;
  report.per_query =
      for_each_item(items.size(), config.parallelism, [&](std::size_t i) {
        const auto& item = items[i];
        QueryResult r;
        r.query_id = item.query_id;
        try {
          auto outcome = run_query(Query{item.query_id, item.question}, models,
                                   config.params, analyzer);
          r.cost = outcome_cost(outcome, config);
          r.outcome = std::move(outcome);
          r.verdict = judge.judge(item, r.outcome->final_answer);
        } catch (const std::exception& e) {
          r.error = e.what();
          r.verdict.reset();
        }
        return r;
      });
  return recompute_aggregates(std::move(report));
}

RunReport run_strong_only(const std::vector<EvalItem>& items,
                          ModelBackend& strong, Judge& judge,
                          const BenchmarkConfig& config) {
  RunReport report;
  report.dataset_name = config.dataset_name;
  report.method = "strong-only";
  report.params = config.params;
  ModelSpec spec = config.strong_spec;
  spec.n_choices = 1;
  report.per_query =
      for_each_item(items.size(), config.parallelism, [&](std::size_t i) {
        const auto& item = items[i];
        QueryResult r;
        r.query_id = item.query_id;
        try {
          auto result = strong.sample(Query{item.query_id, item.question}, spec);
          if (result.responses.empty()) {
            throw BackendError("strong model returned no response");
          }
          CascadeOutcome o;
          o.query_id = item.query_id;
          o.decision = Decision::kEscalated;
          o.final_answer = result.responses.front();
          o.strong_usage = result.usage;
          r.cost = cost(result.usage, spec.model_name, config.pricing);
          r.verdict = judge.judge(item, o.final_answer);
          r.outcome = std::move(o);
        } catch (const std::exception& e) {
          r.error = e.what();
          r.verdict.reset();
        }
        return r;
      });
  return recompute_aggregates(std::move(report));
}

double relative_percent(double value, double reference) {
  if (reference == 0.0) throw std::domain_error("zero reference value");
  return 100.0 * value / reference;
}

SweepReport sweep_tau(const std::vector<EvalItem>& items, ModelBackend& weak,
                      ModelBackend& strong, Judge& judge,
                      const BenchmarkConfig& config,
                      const std::vector<std::size_t>& taus,
                      bool with_strong_reference) {
  CachingJudge cached(judge);
  SweepReport sweep;
  sweep.dataset_name = config.dataset_name;
  sweep.method = to_string(config.method);
  if (with_strong_reference) {
    sweep.strong_reference = run_strong_only(items, strong, cached, config);
  }
  for (const auto tau : taus) {
    BenchmarkConfig c = config;
    c.params.tau = tau;
    SweepRow row;
    row.tau = tau;
    row.report = run_benchmark(items, weak, strong, cached, c);
    if (sweep.strong_reference) {
      const auto& ref = *sweep.strong_reference;
      if (ref.accuracy > 0.0) {
        row.relative_performance =
            relative_percent(row.report.accuracy, ref.accuracy);
      }
      if (ref.total_cost.picos() > 0) {
        row.relative_cost =
            relative_percent(static_cast<double>(row.report.total_cost.picos()),
                             static_cast<double>(ref.total_cost.picos()));
      }
    }
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

void write_sweep_csv(const SweepReport& sweep, std::ostream& out) {
  out << "tau,accuracy,total_cost_usd,strong_usage_fraction,n_queries,n_failed\n";
  for (const auto& row : sweep.rows) {
    const auto& r = row.report;
    out << row.tau << ',' << format_fixed(r.accuracy) << ','
        << r.total_cost.to_string() << ',' << format_fixed(r.strong_usage_fraction)
        << ',' << r.n_queries << ',' << r.n_failed << '\n';
  }
}

nlohmann::ordered_json to_json(const RunReport& report, bool include_per_query) {
  nlohmann::ordered_json j;
  j["dataset_name"] = report.dataset_name;
  j["method"] = report.method;
  j["params"] = params_json(report.params);
  j["n_queries"] = report.n_queries;
  j["n_failed"] = report.n_failed;
  j["n_correct"] = report.n_correct;
  j["n_escalated"] = report.n_escalated;
  j["accuracy"] = report.accuracy;
  j["strong_usage_fraction"] = report.strong_usage_fraction;
  j["total_cost_usd"] = cost_usd(report.total_cost);
  j["total_cost_picos"] = report.total_cost.picos();
  if (include_per_query) {
    auto per = nlohmann::ordered_json::array();
    for (const auto& q : report.per_query) {
      nlohmann::ordered_json e;
      e["query_id"] = q.query_id;
      if (q.failed()) {
        e["error"] = q.error;
      } else {
        e["outcome"] = to_json(*q.outcome);
        e["correct"] = q.verdict->correct;
        e["judge_output"] = q.verdict->raw_judge_output;
      }
      e["cost_picos"] = q.cost.picos();
      per.push_back(std::move(e));
    }
    j["per_query"] = std::move(per);
  }
  return j;
}

nlohmann::ordered_json to_json(const SweepReport& sweep) {
  nlohmann::ordered_json j;
  j["dataset_name"] = sweep.dataset_name;
  j["method"] = sweep.method;
  if (sweep.strong_reference) {
    j["strong_reference"] = to_json(*sweep.strong_reference, false);
  }
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : sweep.rows) {
    nlohmann::ordered_json r;
    r["tau"] = row.tau;
    r["report"] = to_json(row.report, false);
    r["relative_performance"] =
        row.relative_performance ? nlohmann::ordered_json(*row.relative_performance)
                                 : nlohmann::ordered_json(nullptr);
    r["relative_cost"] = row.relative_cost
                             ? nlohmann::ordered_json(*row.relative_cost)
                             : nlohmann::ordered_json(nullptr);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

void write_outcomes_jsonl(const RunReport& report, std::ostream& out) {
  for (const auto& q : report.per_query) {
    nlohmann::ordered_json j;
    if (q.failed()) {
      j["query_id"] = q.query_id;
      j["error"] = q.error;
    } else {
      j = to_json(*q.outcome);
      j["correct"] = q.verdict->correct;
    }
    out << j.dump() << '\n';
  }
}

std::vector<SelectorAccuracy> compare_selectors(
    const std::vector<EvalItem>& items, const ReplayStore& store, Judge& judge,
    const CascadeParams& params, const std::vector<SelectionStrategy>& strategies,
    std::uint64_t seed) {
  std::vector<SelectorAccuracy> out;
  for (const auto strategy : strategies) {
    SelectorAccuracy acc{strategy};
    for (const auto& item : items) {
      const auto& record = store.at(item.query_id);
      const auto answer = baseline_answer(record, strategy, params, seed);
      ++acc.n_queries;
      if (judge.judge(item, answer).correct) ++acc.n_correct;
    }
    acc.accuracy = acc.n_queries
                       ? static_cast<double>(acc.n_correct) / acc.n_queries
                       : 0.0;
    out.push_back(acc);
  }
  return out;
}

}  // namespace kic
