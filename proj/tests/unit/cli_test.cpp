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
#include <sstream>

#include <gtest/gtest.h>

#include "support/stub_server.hpp"
#include "support/temp_dir.hpp"

namespace kic {
namespace {

using testing::read_file;
using testing::StubServer;
using testing::TempDir;
using testing::write_text;

const std::filesystem::path kData = KIC_DATA_DIR;
const std::filesystem::path kDemoConfig = kData / "demo" / "config.json";

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) {
      ::setenv(name, value, 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

void write_two_item_dataset(const std::filesystem::path& p) {
  write_text(p,
             R"({"id":"c1","question":"Name the red planet.","reference_answer":"red planet"})"
             "\n"
             R"({"id":"c2","question":"Largest ocean?","reference_answer":"Pacific"})"
             "\n");
}

std::vector<std::string> record_args(const TempDir& dir, const StubServer& s) {
  return {"record",      "--dataset",  (dir / "data.jsonl").string(),
          "--fixtures",  (dir / "fx.jsonl").string(),
          "--endpoint",  s.endpoint(),
          "--pricing",   (kData / "pricing.json").string(),
          "--retry-backoff-ms", "1"};
}

TEST(Cli, RecordThenReplay) {
  TempDir dir;
  write_two_item_dataset(dir / "data.jsonl");
  StubServer server;
  ScopedEnv key(kApiKeyEnv, "secret");

  auto r = cli(record_args(dir, server));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("recorded 2 queries"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("total cost_usd="), std::string::npos);
  EXPECT_EQ(server.hits(), 4);
  EXPECT_EQ(server.requests().front().authorization, "Bearer secret");

  const auto store = ReplayStore::load(dir / "fx.jsonl");
  ASSERT_EQ(store.records().size(), 2u);
  EXPECT_EQ(store.at("c1").weak_responses.size(), 10u);
  EXPECT_EQ(store.at("c1").reference_answer, "red planet");

  // Resuming skips recorded ids.
  r = cli(record_args(dir, server));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(server.hits(), 4);
  EXPECT_NE(r.err.find("skipping 2"), std::string::npos);

  const auto before = HttpChatBackend::requests_sent();
  std::vector<std::string> run = {"run",
                                  "--dataset", (dir / "data.jsonl").string(),
                                  "--fixtures", (dir / "fx.jsonl").string(),
                                  "--pricing", (kData / "pricing.json").string(),
                                  "--out-dir", (dir / "out").string()};
  r = cli(run);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(HttpChatBackend::requests_sent(), before);
  EXPECT_EQ(server.hits(), 4);
  const auto report = nlohmann::json::parse(read_file(dir / "out" / "run_report.json"));
  EXPECT_EQ(report["n_queries"], 2);
  // Weak answers echo the question and contain "red planet" but not "Pacific".
  EXPECT_EQ(report["n_correct"], 1);
}

TEST(Cli, RecordOverwriteTruncates) {
  TempDir dir;
  write_two_item_dataset(dir / "data.jsonl");
  StubServer server;
  ScopedEnv key(kApiKeyEnv, "secret");
  ASSERT_EQ(cli(record_args(dir, server)).code, 0);
  auto args = record_args(dir, server);
  args.push_back("--overwrite");
  ASSERT_EQ(cli(args).code, 0);
  EXPECT_EQ(server.hits(), 8);
  EXPECT_EQ(ReplayStore::load(dir / "fx.jsonl").records().size(), 2u);
}

TEST(Cli, RecordWithoutKeyIsConfigError) {
  TempDir dir;
  write_two_item_dataset(dir / "data.jsonl");
  StubServer server;
  ScopedEnv key(kApiKeyEnv, nullptr);
  const auto r = cli(record_args(dir, server));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("KIC_API_KEY"), std::string::npos) << r.err;
  EXPECT_EQ(server.hits(), 0);
}

TEST(Cli, LiveRunWithoutKeyIsConfigError) {
  ScopedEnv key(kApiKeyEnv, nullptr);
  TempDir dir;
  const auto r = cli({"run", "--config", kDemoConfig.string(), "--mode", "live",
                      "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, UnreachableEndpointFails) {
  TempDir dir;
  write_two_item_dataset(dir / "data.jsonl");
  const int port = testing::refused_port();
  ScopedEnv key(kApiKeyEnv, "secret");
  const auto r = cli({"record", "--dataset", (dir / "data.jsonl").string(),
                      "--fixtures", (dir / "fx.jsonl").string(), "--endpoint",
                      "http://127.0.0.1:" + std::to_string(port) + "/v1",
                      "--retry-backoff-ms", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, TauOutOfRangeIsConfigError) {
  TempDir dir;
  for (const char* tau : {"0", "11"}) {
    const auto r = cli({"run", "--config", kDemoConfig.string(), "--tau", tau,
                        "--out-dir", dir.path().string()});
    EXPECT_EQ(r.code, 2) << tau << ": " << r.err;
  }
}

TEST(Cli, UnknownFlagAndConfigKey) {
  EXPECT_EQ(cli({"run", "--no-such-flag"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  TempDir dir;
  write_text(dir / "bad.json", R"({"tua": 8})");
  EXPECT_EQ(cli({"run", "--config", (dir / "bad.json").string()}).code, 2);
}

TEST(Cli, RepKeywordRuleConfig) {
  TempDir dir;
  write_text(dir / "rule.json", R"({"rep_keyword_rule": "top-tfidf", "rep_top_m": 3})");
  cli::RunConfig c;
  cli::apply_config_json(c, nlohmann::json::parse(read_file(dir / "rule.json")), dir.path());
  EXPECT_EQ(c.params.rep_keywords.rule, RepKeywordRule::kTopTfidf);
  EXPECT_EQ(c.params.rep_keywords.top_m, 3u);
  write_text(dir / "bad.json", R"({"rep_keyword_rule": "none"})");
  EXPECT_EQ(cli({"run", "--config", (dir / "bad.json").string()}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sweep"), std::string::npos);
}

TEST(Cli, DemoRunPinnedValues) {
  TempDir dir;
  const auto r = cli({"run", "--config", kDemoConfig.string(), "--out-dir",
                      dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(read_file(dir / "run_report.json"));
  EXPECT_EQ(report["n_queries"], 19);
  EXPECT_EQ(report["n_correct"], 18);
  EXPECT_EQ(report["n_escalated"], 10);
  EXPECT_EQ(report["total_cost_picos"], 17'619'500'000);
  EXPECT_NE(r.out.find("cost_usd=0.017620"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("accuracy=0.9474"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("strong_usage=0.5263"), std::string::npos);
}

TEST(Cli, RunTwiceIdentical) {
  TempDir a, b;
  ASSERT_EQ(cli({"run", "--config", kDemoConfig.string(), "--out-dir", a.path().string()}).code, 0);
  ASSERT_EQ(cli({"run", "--config", kDemoConfig.string(), "--out-dir", b.path().string(),
                 "--parallelism", "4"}).code, 0);
  EXPECT_EQ(read_file(a / "run_report.json"), read_file(b / "run_report.json"));
  EXPECT_EQ(read_file(a / "outcomes.jsonl"), read_file(b / "outcomes.jsonl"));
}

TEST(Cli, SingleTauSweepMatchesRun) {
  TempDir run_dir, sweep_dir;
  ASSERT_EQ(cli({"run", "--config", kDemoConfig.string(), "--tau", "6",
                 "--out-dir", run_dir.path().string()}).code, 0);
  const auto r = cli({"sweep", "--config", kDemoConfig.string(), "--tau-range", "6",
                      "--out-dir", sweep_dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto run = nlohmann::json::parse(read_file(run_dir / "run_report.json"));
  const auto sweep = nlohmann::json::parse(read_file(sweep_dir / "sweep.json"));
  ASSERT_EQ(sweep["rows"].size(), 1u);
  const auto& row = sweep["rows"][0];
  EXPECT_EQ(row["tau"], 6);
  for (const char* key : {"accuracy", "strong_usage_fraction", "total_cost_usd",
                          "n_queries", "n_escalated", "n_correct"}) {
    const auto& src = row.contains("report") ? row["report"] : row;
    EXPECT_EQ(src[key], run[key]) << key;
  }
}

TEST(Cli, SweepTwiceByteIdenticalAndMonotone) {
  TempDir a, b;
  ASSERT_EQ(cli({"sweep", "--config", kDemoConfig.string(), "--out-dir", a.path().string()}).code, 0);
  ASSERT_EQ(cli({"sweep", "--config", kDemoConfig.string(), "--out-dir", b.path().string()}).code, 0);
  EXPECT_EQ(read_file(a / "sweep.csv"), read_file(b / "sweep.csv"));
  EXPECT_EQ(read_file(a / "sweep.json"), read_file(b / "sweep.json"));

  std::istringstream csv(read_file(a / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  double prev = -1.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 6u);
    const double usage = std::stod(cells[3]);
    EXPECT_GE(usage, prev);
    prev = usage;
    if (rows == 0) EXPECT_EQ(usage, 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}

TEST(Cli, ReportSummarizesFiles) {
  TempDir dir;
  ASSERT_EQ(cli({"sweep", "--config", kDemoConfig.string(), "--out-dir", dir.path().string()}).code, 0);
  auto r = cli({"report", "--input", (dir / "sweep.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("strong-only"), std::string::npos) << r.out;

  r = cli({"report", "--config", kDemoConfig.string(), "--selectors", "--out-dir",
           dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = read_file(dir / "selectors.csv");
  EXPECT_NE(csv.find("kic,0.736842,14,19"), std::string::npos) << csv;
  EXPECT_NE(csv.find("exact-match,0.789474,15,19"), std::string::npos) << csv;
}

TEST(Cli, ReplayCoverageCheckedUpFront) {
  TempDir dir;
  write_text(dir / "data.jsonl",
             R"({"id":"demo-01","question":"q","reference_answer":"r"})"
             "\n"
             R"({"id":"nope","question":"q","reference_answer":"r"})"
             "\n");
  const auto r = cli({"run", "--config", kDemoConfig.string(), "--dataset",
                      (dir / "data.jsonl").string(), "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("'nope'"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "run_report.json"));
}

}  // namespace
}  // namespace kic
