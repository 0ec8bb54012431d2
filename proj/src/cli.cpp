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

#include "kic/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

namespace kic::cli {
namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Mode parse_mode(const std::string& s) {
  if (s == "live") return Mode::kLive;
  if (s == "replay") return Mode::kReplay;
  throw ConfigError("mode must be live or replay, got '" + s + "'");
}

JudgeChoice parse_judge(const std::string& s) {
  if (s == "llm") return JudgeChoice::kLlm;
  if (s == "offline") return JudgeChoice::kOffline;
  throw ConfigError("judge must be llm or offline, got '" + s + "'");
}

// Flag values; unset options leave the config untouched.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> dataset_format;
  std::optional<std::string> fixtures;
  std::optional<std::string> mode;
  std::optional<std::string> pricing;
  std::optional<std::string> judge;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::optional<std::string> method;
  std::optional<std::size_t> tau;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n_samples;
  std::optional<std::string> weak_model;
  std::optional<std::string> strong_model;
  std::optional<std::string> judge_model;
  std::optional<std::string> endpoint;
  std::optional<std::size_t> max_output_tokens;
  std::optional<std::int64_t> retry_backoff_ms;
  std::optional<std::string> stopwords;
  std::optional<std::string> tau_range;
  bool record_greedy = false;
  bool overwrite = false;
};

void add_common_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file");
  cmd.add_option("--dataset", f.dataset, "Dataset path");
  cmd.add_option("--dataset-format", f.dataset_format, "jsonl | truthfulqa-csv");
  cmd.add_option("--fixtures", f.fixtures, "Replay fixture file (JSON lines)");
  cmd.add_option("--pricing", f.pricing, "Pricing config (JSON)");
  cmd.add_option("--out-dir", f.out_dir, "Directory for reports");
  cmd.add_option("--seed", f.seed, "Seed for all randomness");
  cmd.add_option("--parallelism", f.parallelism, "Concurrent queries");
  cmd.add_option("--n-samples", f.n_samples, "Weak responses per query");
  cmd.add_option("--k", f.k, "Number of global keywords");
  cmd.add_option("--alpha", f.alpha, "Global keyword weight (> 1)");
  cmd.add_option("--beta", f.beta, "Representative keyword weight (> alpha)");
  cmd.add_option("--weak-model", f.weak_model, "Weak model name");
  cmd.add_option("--strong-model", f.strong_model, "Strong model name");
  cmd.add_option("--endpoint", f.endpoint, "Chat-completion base URL");
  cmd.add_option("--max-tokens", f.max_output_tokens, "Max output tokens");
  cmd.add_option("--retry-backoff-ms", f.retry_backoff_ms,
                 "Initial retry backoff in milliseconds");
  cmd.add_option("--stopwords", f.stopwords, "Stopword list file");
}

void add_eval_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--mode", f.mode, "replay | live");
  cmd.add_option("--judge", f.judge, "offline | llm");
  cmd.add_option("--judge-model", f.judge_model, "Model used by the llm judge");
  cmd.add_option("--method", f.method, "kic | exact-match");
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::pair<std::size_t, std::size_t> parse_tau_range(const std::string& s) {
  const auto dash = s.find('-');
  try {
    if (dash == std::string::npos) {
      const auto v = static_cast<std::size_t>(std::stoul(s));
      return {v, v};
    }
    return {static_cast<std::size_t>(std::stoul(s.substr(0, dash))),
            static_cast<std::size_t>(std::stoul(s.substr(dash + 1)))};
  } catch (const std::exception&) {
    throw ConfigError("tau range must look like 1-10 or 8, got '" + s + "'");
  }
}

void apply_flags(RunConfig& c, const Flags& f) {
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw ConfigError("cannot open config file: " + *f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("invalid config file " + *f.config + ": " + e.what());
    }
    apply_config_json(c, j, std::filesystem::path(*f.config).parent_path());
  }
  if (f.dataset) c.dataset = *f.dataset;
  if (f.dataset_format) c.dataset_format = parse_dataset_format(*f.dataset_format);
  if (f.fixtures) c.fixtures = *f.fixtures;
  if (f.mode) c.mode = parse_mode(*f.mode);
  if (f.pricing) c.pricing = *f.pricing;
  if (f.judge) c.judge = parse_judge(*f.judge);
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.seed) c.seed = *f.seed;
  if (f.parallelism) c.parallelism = *f.parallelism;
  if (f.method) c.method = parse_routing_method(*f.method);
  if (f.n_samples) c.params.n_samples = *f.n_samples;
  if (f.tau) c.params.tau = *f.tau;
  if (f.alpha) c.params.alpha = *f.alpha;
  if (f.beta) c.params.beta = *f.beta;
  if (f.k) c.params.k = *f.k;
  if (f.weak_model) c.weak_model = *f.weak_model;
  if (f.strong_model) c.strong_model = *f.strong_model;
  if (f.judge_model) c.judge_model = *f.judge_model;
  if (f.endpoint) c.endpoint = *f.endpoint;
  if (f.max_output_tokens) c.max_output_tokens = *f.max_output_tokens;
  if (f.retry_backoff_ms) c.retry_backoff_ms = *f.retry_backoff_ms;
  if (f.stopwords) c.stopwords = *f.stopwords;
  if (f.tau_range) {
    const auto [lo, hi] = parse_tau_range(*f.tau_range);
    c.tau_min = lo;
    c.tau_max = hi;
  }
  if (f.record_greedy) c.record_greedy = true;
  if (f.overwrite) c.overwrite = true;
  if (c.stopwords) c.params.normalization.stopwords = load_stopwords(*c.stopwords);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string api_key_or_throw() {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw ConfigError(std::string("live mode needs an API key: export ") +
                      kApiKeyEnv + "=<key>");
  }
  return key;
}

HttpBackendConfig http_config(const RunConfig& c) {
  HttpBackendConfig h;
  h.endpoint = c.endpoint;
  h.api_key = api_key_or_throw();
  h.retry.initial_backoff = std::chrono::milliseconds(c.retry_backoff_ms);
  h.max_in_flight = std::max<std::size_t>(c.parallelism, 1);
  return h;
}

ModelSpec weak_spec(const RunConfig& c) {
  auto s = ModelSpec::weak_default(c.weak_model, c.params.n_samples);
  s.max_output_tokens = c.max_output_tokens;
  return s;
}

ModelSpec strong_spec(const RunConfig& c) {
  auto s = ModelSpec::strong_default(c.strong_model);
  s.max_output_tokens = c.max_output_tokens;
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Backends and judge wired for run/sweep/report.
struct EvalSetup {
  std::vector<EvalItem> items;
  std::shared_ptr<const ReplayStore> store;
  std::unique_ptr<ModelBackend> weak;
  std::unique_ptr<ModelBackend> strong;
  std::unique_ptr<ModelBackend> judge_backend;
  std::unique_ptr<Judge> judge;
  BenchmarkConfig bench;
};

EvalSetup make_eval_setup(const RunConfig& c) {
  require(!c.dataset.empty(), "--dataset is required");
  require(!c.pricing.empty(), "--pricing is required");
  if (c.mode == Mode::kReplay) {
    require(!c.fixtures.empty(), "replay mode requires --fixtures");
  }
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  EvalSetup s;
  s.items = load_dataset(c.dataset, c.dataset_format);
  s.bench.dataset_name = c.dataset.stem().string();
  s.bench.params = c.params;
  s.bench.method = c.method;
  s.bench.pricing = PricingTable::load(c.pricing);
  s.bench.weak_spec = weak_spec(c);
  s.bench.strong_spec = strong_spec(c);
  s.bench.parallelism = c.parallelism;
  for (const auto& model : {c.weak_model, c.strong_model}) {
    require(s.bench.pricing.contains(model),
            "pricing config has no entry for model '" + model + "'");
  }

  if (c.mode == Mode::kReplay) {
    s.store = std::make_shared<const ReplayStore>(ReplayStore::load(c.fixtures));
    for (const auto& item : s.items) {
      require(s.store->find(item.query_id) != nullptr,
              "fixtures have no record for query '" + item.query_id + "'");
    }
    s.weak = std::make_unique<ReplayBackend>(s.store);
    s.strong = std::make_unique<ReplayBackend>(s.store);
  } else {
    const auto h = http_config(c);
    s.weak = std::make_unique<HttpChatBackend>(h);
    s.strong = std::make_unique<HttpChatBackend>(h);
  }

  if (c.judge == JudgeChoice::kLlm) {
    s.judge_backend = std::make_unique<HttpChatBackend>(http_config(c));
    auto spec = ModelSpec::strong_default(c.judge_model);
    spec.max_output_tokens = 8;
    s.judge = std::make_unique<LlmJudge>(*s.judge_backend, spec);
  } else {
    s.judge = std::make_unique<OfflineJudge>();
  }
  return s;
}

void check_report(const RunReport& report) {
  const auto again = recompute_aggregates(report);
  if (again.n_correct != report.n_correct ||
      again.n_escalated != report.n_escalated ||
      again.total_cost != report.total_cost) {
    throw InvariantViolation("report aggregates disagree with per-query records");
  }
}

void warn_failures(const RunReport& report, std::ostream& err) {
  if (report.n_failed == 0) return;
  err << "WARNING: " << report.n_failed << " of "
      << report.per_query.size() << " queries failed and are excluded from "
      << "accuracy:\n";
  for (const auto& q : report.per_query) {
    if (q.failed()) err << "  " << q.query_id << ": " << q.error << '\n';
  }
}

std::string summary_line(const RunReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << "tau=" << r.params.tau
    << " accuracy=" << r.accuracy << " cost_usd=" << r.total_cost.to_string()
    << " strong_usage=" << r.strong_usage_fraction << " n_queries=" << r.n_queries
    << " n_failed=" << r.n_failed;
  return s.str();
}

// --------------------------------------------------------------------------

int cmd_record(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require(!c.dataset.empty(), "--dataset is required");
  require(!c.fixtures.empty(), "--fixtures (output path) is required");
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto h = http_config(c);
  const auto items = load_dataset(c.dataset, c.dataset_format);

  // Append-only: records already present are kept and skipped.
  std::set<std::string> done;
  if (!c.overwrite && std::filesystem::exists(c.fixtures)) {
    const auto existing = ReplayStore::load(c.fixtures);
    for (const auto& r : existing.records()) done.insert(r.query_id);
  }
  std::vector<RecordItem> todo;
  for (const auto& item : items) {
    if (!done.contains(item.query_id)) {
      todo.push_back({{item.query_id, item.question}, item.reference_answer});
    }
  }

  std::optional<PricingTable> pricing;
  if (!c.pricing.empty()) pricing = PricingTable::load(c.pricing);

  std::ofstream sink(c.fixtures, c.overwrite ? std::ios::trunc : std::ios::app);
  if (!sink) throw std::runtime_error("cannot open " + c.fixtures.string());

  HttpChatBackend weak(h);
  HttpChatBackend strong(h);
  const auto ws = weak_spec(c);
  const auto ss = strong_spec(c);
  UsageLedger ledger;
  RecordOptions options;
  options.record_greedy = c.record_greedy;
  options.on_record = [&](std::size_t i, const ReplayRecord& r) {
    ledger.add(ws.model_name, r.weak_usage);
    ledger.add(ss.model_name, r.strong_usage);
    out << "[" << (i + 1) << "/" << todo.size() << "] " << r.query_id
        << " weak_tokens=" << r.weak_usage.input_tokens << "+"
        << r.weak_usage.output_tokens
        << " strong_tokens=" << r.strong_usage.input_tokens << "+"
        << r.strong_usage.output_tokens << '\n';
  };
  if (!done.empty()) {
    err << "skipping " << done.size() << " queries already in "
        << c.fixtures.string() << '\n';
  }
  const auto n = record_run(todo, weak, ws, strong, ss, sink, options);

  out << "recorded " << n << " queries to " << c.fixtures.string() << '\n';
  for (const auto& [model, usage] : ledger.snapshot()) {
    out << "  " << model << ": input_tokens=" << usage.input_tokens
        << " output_tokens=" << usage.output_tokens
        << " requests=" << usage.n_requests;
    if (pricing && pricing->contains(model)) {
      out << " cost_usd=" << cost(usage, model, *pricing).to_string();
    }
    out << '\n';
  }
  if (pricing) {
    try {
      out << "total cost_usd=" << ledger.total_cost(*pricing).to_string() << '\n';
    } catch (const UnknownModel& e) {
      err << "cost total unavailable: " << e.what() << '\n';
    }
  }
  return 0;
}

int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto s = make_eval_setup(c);
  const auto report = run_benchmark(s.items, *s.weak, *s.strong, *s.judge, s.bench);
  check_report(report);

  std::filesystem::create_directories(c.out_dir);
  write_file(c.out_dir / "run_report.json", to_json(report).dump(2) + "\n");
  std::ostringstream outcomes;
  write_outcomes_jsonl(report, outcomes);
  write_file(c.out_dir / "outcomes.jsonl", outcomes.str());

  out << summary_line(report) << '\n';
  warn_failures(report, err);
  return report.n_failed == 0 ? 0 : 1;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto s = make_eval_setup(c);
  const std::size_t hi = c.tau_max.value_or(c.params.n_samples);
  require(c.tau_min >= 1 && c.tau_min <= hi && hi <= c.params.n_samples,
          "tau range must satisfy 1 <= min <= max <= n_samples");
  std::vector<std::size_t> taus;
  for (std::size_t t = c.tau_min; t <= hi; ++t) taus.push_back(t);

  const auto sweep = sweep_tau(s.items, *s.weak, *s.strong, *s.judge, s.bench, taus);

  std::filesystem::create_directories(c.out_dir);
  std::ostringstream csv;
  write_sweep_csv(sweep, csv);
  write_file(c.out_dir / "sweep.csv", csv.str());
  write_file(c.out_dir / "sweep.json", to_json(sweep).dump(2) + "\n");

  if (sweep.strong_reference) {
    out << "strong-only: " << summary_line(*sweep.strong_reference) << '\n';
  }
  std::size_t failed = 0;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& row = sweep.rows[i];
    check_report(row.report);
    out << summary_line(row.report);
    if (row.relative_performance) {
      out << std::fixed << std::setprecision(2)
          << " rel_perf=" << *row.relative_performance << "%";
    }
    if (row.relative_cost) {
      out << std::fixed << std::setprecision(2)
          << " rel_cost=" << *row.relative_cost << "%";
    }
    out << '\n';
    failed += row.report.n_failed;
    if (i > 0 && row.report.n_escalated < sweep.rows[i - 1].report.n_escalated) {
      throw InvariantViolation("strong usage decreased between tau=" +
                               std::to_string(sweep.rows[i - 1].tau) +
                               " and tau=" + std::to_string(row.tau));
    }
  }
  if (failed > 0) {
    for (const auto& row : sweep.rows) warn_failures(row.report, err);
    return 1;
  }
  return 0;
}

int cmd_report(const RunConfig& c, const std::optional<std::string>& input,
               bool selectors, std::ostream& out) {
  if (selectors) {
    require(!c.dataset.empty() && !c.fixtures.empty(),
            "--selectors needs --dataset and --fixtures");
    const auto items = load_dataset(c.dataset, c.dataset_format);
    const auto store = ReplayStore::load(c.fixtures);
    std::unique_ptr<ModelBackend> judge_backend;
    std::unique_ptr<Judge> judge;
    if (c.judge == JudgeChoice::kLlm) {
      judge_backend = std::make_unique<HttpChatBackend>(http_config(c));
      auto spec = ModelSpec::strong_default(c.judge_model);
      spec.max_output_tokens = 8;
      judge = std::make_unique<LlmJudge>(*judge_backend, spec);
    } else {
      judge = std::make_unique<OfflineJudge>();
    }
    const auto rows = compare_selectors(
        items, store, *judge, c.params,
        {SelectionStrategy::kGreedy, SelectionStrategy::kRandom,
         SelectionStrategy::kExactMatch, SelectionStrategy::kKic},
        c.seed);
    std::ostringstream csv;
    csv << "strategy,accuracy,n_correct,n_queries\n";
    for (const auto& r : rows) {
      csv << to_string(r.strategy) << ',' << std::fixed << std::setprecision(6)
          << r.accuracy << ',' << r.n_correct << ',' << r.n_queries << '\n';
    }
    std::filesystem::create_directories(c.out_dir);
    write_file(c.out_dir / "selectors.csv", csv.str());
    out << csv.str();
    return 0;
  }

  require(input.has_value(), "report needs --input <report.json> or --selectors");
  std::ifstream in(*input);
  if (!in) throw ConfigError("cannot open " + *input);
  const auto j = nlohmann::json::parse(in);
  auto print_row = [&](const std::string& label, const nlohmann::json& r) {
    out << std::left << std::setw(14) << label << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << r.at("accuracy").get<double>()
        << std::setw(14) << std::setprecision(6)
        << r.at("total_cost_usd").get<double>() << std::setw(10)
        << std::setprecision(4) << r.at("strong_usage_fraction").get<double>()
        << std::setw(8) << r.at("n_queries").get<std::size_t>() << std::setw(8)
        << r.at("n_failed").get<std::size_t>();
  };
  out << std::left << std::setw(14) << "run" << std::right << std::setw(10)
      << "accuracy" << std::setw(14) << "cost_usd" << std::setw(10) << "usage"
      << std::setw(8) << "n" << std::setw(8) << "failed" << std::setw(10)
      << "rel_perf" << std::setw(10) << "rel_cost" << '\n';
  if (j.contains("rows")) {
    if (j.contains("strong_reference")) {
      print_row("strong-only", j.at("strong_reference"));
      out << '\n';
    }
    for (const auto& row : j.at("rows")) {
      print_row("tau=" + std::to_string(row.at("tau").get<std::size_t>()),
                row.at("report"));
      for (const char* key : {"relative_performance", "relative_cost"}) {
        const auto& v = row.at(key);
        if (v.is_null()) {
          out << std::setw(10) << "-";
        } else {
          out << std::setw(9) << std::setprecision(2) << v.get<double>() << '%';
        }
      }
      out << '\n';
    }
  } else {
    print_row(j.at("method").get<std::string>(), j);
    out << '\n';
  }
  return 0;
}

RepKeywordRule parse_rep_keyword_rule(const std::string& s) {
  if (s == "all-terms") return RepKeywordRule::kAllTerms;
  if (s == "top-tfidf") return RepKeywordRule::kTopTfidf;
  if (s == "global-intersection") return RepKeywordRule::kGlobalIntersection;
  throw ConfigError("unknown rep_keyword_rule '" + s +
                    "' (all-terms, top-tfidf, global-intersection)");
}

}  // namespace

void apply_config_json(RunConfig& c, const nlohmann::json& j,
                       const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") c.dataset = resolve(base_dir, v.get<std::string>());
    else if (key == "dataset_format") c.dataset_format = parse_dataset_format(v.get<std::string>());
    else if (key == "fixtures") c.fixtures = resolve(base_dir, v.get<std::string>());
    else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
    else if (key == "pricing") c.pricing = resolve(base_dir, v.get<std::string>());
    else if (key == "judge") c.judge = parse_judge(v.get<std::string>());
    else if (key == "out_dir") c.out_dir = resolve(base_dir, v.get<std::string>());
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "parallelism") c.parallelism = v.get<std::size_t>();
    else if (key == "method") c.method = parse_routing_method(v.get<std::string>());
    else if (key == "n_samples") c.params.n_samples = v.get<std::size_t>();
    else if (key == "tau") c.params.tau = v.get<std::size_t>();
    else if (key == "k") c.params.k = v.get<std::size_t>();
    else if (key == "alpha") c.params.alpha = v.get<double>();
    else if (key == "beta") c.params.beta = v.get<double>();
    else if (key == "weak_model") c.weak_model = v.get<std::string>();
    else if (key == "strong_model") c.strong_model = v.get<std::string>();
    else if (key == "judge_model") c.judge_model = v.get<std::string>();
    else if (key == "endpoint") c.endpoint = v.get<std::string>();
    else if (key == "max_output_tokens") c.max_output_tokens = v.get<std::size_t>();
    else if (key == "retry_backoff_ms") c.retry_backoff_ms = v.get<std::int64_t>();
    else if (key == "rep_keyword_rule") c.params.rep_keywords.rule = parse_rep_keyword_rule(v.get<std::string>());
    else if (key == "rep_top_m") c.params.rep_keywords.top_m = v.get<std::size_t>();
    else if (key == "stopwords") c.stopwords = resolve(base_dir, v.get<std::string>());
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Keyword-weighted weak/strong LLM cascade toolkit", "kic"};
  app.require_subcommand(1);

  Flags record_flags, run_flags, sweep_flags, report_flags;
  auto* record = app.add_subcommand("record", "Sample a dataset live and write replay fixtures");
  add_common_flags(*record, record_flags);
  record->add_flag("--record-greedy", record_flags.record_greedy,
                   "Also record a temperature-0 weak response");
  record->add_flag("--overwrite", record_flags.overwrite,
                   "Truncate the fixture file instead of resuming");

  auto* run = app.add_subcommand("run", "Run the cascade over a dataset and judge it");
  add_common_flags(*run, run_flags);
  add_eval_flags(*run, run_flags);
  run->add_option("--tau", run_flags.tau, "Consistency threshold");

  auto* sweep = app.add_subcommand("sweep", "Run every tau in a range and emit the frontier");
  add_common_flags(*sweep, sweep_flags);
  add_eval_flags(*sweep, sweep_flags);
  sweep->add_option("--tau-range", sweep_flags.tau_range, "e.g. 1-10 (default 1-n_samples)");

  auto* report = app.add_subcommand("report", "Summarize a report file or compare selectors");
  add_common_flags(*report, report_flags);
  add_eval_flags(*report, report_flags);
  std::optional<std::string> report_input;
  bool selectors = false;
  report->add_option("--input", report_input, "run_report.json or sweep.json");
  report->add_flag("--selectors", selectors,
                   "Judge greedy/random/exact-match/kic picks without escalation");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config;
    if (record->parsed()) {
      apply_flags(config, record_flags);
      return cmd_record(config, out, err);
    }
    if (run->parsed()) {
      apply_flags(config, run_flags);
      return cmd_run(config, out, err);
    }
    if (sweep->parsed()) {
      apply_flags(config, sweep_flags);
      return cmd_sweep(config, out, err);
    }
    apply_flags(config, report_flags);
    return cmd_report(config, report_input, selectors, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kic::cli
