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

#include "kic/cascade.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "support/fakes.hpp"

namespace kic {
namespace {

using testing::FakeBackend;
using testing::make_record;
using testing::make_store;

const std::vector<std::string> kDisjoint = {
    "alpha bravo",   "charlie delta", "echo foxtrot",  "golf hotel",
    "india juliet",  "kilo lima",     "mike november", "oscar papa",
    "quebec romeo",  "sierra tango"};

// Disjoint vocabularies where response i has i+1 distinct terms, so the last
// one scores sqrt(n) and every other response scores strictly lower.
std::vector<std::string> graded_disjoint(std::size_t n) {
  std::vector<std::string> out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (std::size_t j = 0; j <= i; ++j) text += "w" + std::to_string(next++) + " ";
    out.push_back(text);
  }
  return out;
}

struct Harness {
  explicit Harness(std::vector<ReplayRecord> records)
      : replay(make_store(std::move(records))) {}

  CascadeModels models(UsageLedger* ledger = nullptr) {
    return {replay, ModelSpec::weak_default("weak", 10), replay,
            ModelSpec::strong_default("strong"), ledger};
  }

  ReplayBackend replay;
};

TEST(Decide, Boundaries) {
  EXPECT_EQ(decide(8, 8), Decision::kAcceptedWeak);
  EXPECT_EQ(decide(7, 8), Decision::kEscalated);
  EXPECT_EQ(decide(10, 10), Decision::kAcceptedWeak);
  EXPECT_EQ(decide(1, 1), Decision::kAcceptedWeak);
  EXPECT_EQ(decide(0, 1), Decision::kEscalated);
  EXPECT_STREQ(to_string(Decision::kAcceptedWeak), "accepted-weak");
  EXPECT_STREQ(to_string(Decision::kEscalated), "escalated");
}

TEST(Decide, FullGrid) {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::size_t t = 1; t <= 10; ++t) {
      EXPECT_EQ(decide(n, t) == Decision::kAcceptedWeak, n >= t);
    }
  }
}

TEST(CascadeParams, Validation) {
  CascadeParams p;
  EXPECT_NO_THROW(p.validate());
  p.tau = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.tau = 11;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.tau = 8;
  p.beta = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.beta = 2.0;
  p.alpha = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.alpha = 1.5;
  p.k = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(RunQuery, IdenticalResponsesAcceptedAtStrictestTau) {
  Harness h({make_record("q1",
                         std::vector<std::string>(10, "The answer is Paris."),
                         "Paris.")});
  CascadeParams p;
  p.tau = 10;
  const auto out = run_query({"q1", "question q1"}, h.models(), p);
  EXPECT_EQ(out.decision, Decision::kAcceptedWeak);
  EXPECT_EQ(out.n_sim, 10u);
  EXPECT_EQ(out.rep_id, 0u);
  EXPECT_EQ(out.final_answer, "The answer is Paris.");
  EXPECT_FALSE(out.strong_usage.has_value());
}

TEST(RunQuery, DisjointResponsesEscalate) {
  Harness h({make_record("q1", graded_disjoint(10), "Strong answer.")});
  CascadeParams p;
  p.tau = 10;
  const auto out = run_query({"q1", "question q1"}, h.models(), p);
  EXPECT_EQ(out.decision, Decision::kEscalated);
  EXPECT_EQ(out.n_sim, 1u);
  EXPECT_EQ(out.rep_id, 9u);
  EXPECT_EQ(out.final_answer, "Strong answer.");
  ASSERT_TRUE(out.strong_usage.has_value());
  EXPECT_EQ(*out.strong_usage, (Usage{20, 30, 1}));
}

TEST(RunQuery, FlatDisjointResponsesTie) {
  // The score measures how evenly mass spreads over a response's terms, not
  // overlap: ten disjoint two-term responses with equal idf and uniform
  // weights all score sqrt(2) and all count toward n_sim.
  Harness h({make_record("q1", kDisjoint, "Strong answer.")});
  CascadeParams p;
  p.tau = 10;
  const auto out = run_query({"q1", "question q1"}, h.models(), p);
  EXPECT_EQ(out.rep_id, 0u);
  EXPECT_EQ(out.n_sim, 10u);
  EXPECT_NEAR(out.s_star, std::sqrt(2.0), 1e-12);
}

TEST(RunQuery, ForcesSampleCounts) {
  FakeBackend weak([](const Query&, const ModelSpec& s) {
    return SampleResult{std::vector<std::string>(s.n_choices, "same text"),
                        {1, 1, 1}};
  });
  FakeBackend strong([](const Query&, const ModelSpec&) {
    return SampleResult{{"strong"}, {1, 1, 1}};
  });
  CascadeParams p;
  p.n_samples = 4;
  p.tau = 4;
  auto weak_spec = ModelSpec::weak_default("weak", 99);
  auto strong_spec = ModelSpec::strong_default("strong");
  strong_spec.n_choices = 5;
  CascadeModels m{weak, weak_spec, strong, strong_spec};
  EXPECT_EQ(run_query({"q", "t"}, m, p).decision, Decision::kAcceptedWeak);
  EXPECT_EQ(weak.last_spec.n_choices, 4u);
  EXPECT_EQ(strong.calls, 0);

  FakeBackend mixed([](const Query&, const ModelSpec& s) {
    return SampleResult{graded_disjoint(s.n_choices), {1, 1, 1}};
  });
  CascadeModels m2{mixed, weak_spec, strong, strong_spec};
  EXPECT_EQ(run_query({"q", "t"}, m2, p).decision, Decision::kEscalated);
  EXPECT_EQ(strong.calls, 1);
  EXPECT_EQ(strong.last_spec.n_choices, 1u);
}

TEST(RunQuery, EmptyWeakResponseSetThrows) {
  FakeBackend weak([](const Query&, const ModelSpec&) { return SampleResult{}; });
  FakeBackend strong([](const Query&, const ModelSpec&) {
    return SampleResult{{"strong"}, {}};
  });
  CascadeModels m{weak, ModelSpec::weak_default("weak", 10), strong,
                  ModelSpec::strong_default("strong")};
  EXPECT_THROW(run_query({"q", "t"}, m, CascadeParams{}), EmptyResponseSet);
  EXPECT_EQ(strong.calls, 0);
}

TEST(RunQuery, StrongFailurePropagates) {
  FakeBackend weak([](const Query&, const ModelSpec& s) {
    return SampleResult{graded_disjoint(s.n_choices), {1, 1, 1}};
  });
  FakeBackend strong([](const Query&, const ModelSpec&) -> SampleResult {
    throw BackendError("service unavailable", 503);
  });
  CascadeModels m{weak, ModelSpec::weak_default("weak", 10), strong,
                  ModelSpec::strong_default("strong")};
  CascadeParams p;
  p.tau = 10;
  try {
    run_query({"q", "t"}, m, p);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.http_status(), 503);
  }
}

TEST(RunQuery, InvalidParamsRejectedBeforeSampling) {
  FakeBackend weak([](const Query&, const ModelSpec&) { return SampleResult{}; });
  CascadeModels m{weak, ModelSpec::weak_default("weak", 10), weak,
                  ModelSpec::strong_default("strong")};
  CascadeParams p;
  p.tau = 11;
  EXPECT_THROW(run_query({"q", "t"}, m, p), std::invalid_argument);
  EXPECT_EQ(weak.calls, 0);
}

TEST(RunQuery, LedgerCostMatchesOutcomeUsage) {
  Harness h({make_record("q1", graded_disjoint(10), "Strong."),
             make_record("q2", std::vector<std::string>(10, "same same"), "S.")});
  UsageLedger ledger;
  CascadeParams p;
  p.tau = 10;
  const auto pricing = testing::demo_pricing();
  Dollars expected;
  for (const char* id : {"q1", "q2"}) {
    const auto out = run_query({id, "t"}, h.models(&ledger), p);
    expected += cost(out.weak_usage, "weak", pricing);
    if (out.strong_usage) expected += cost(*out.strong_usage, "strong", pricing);
  }
  EXPECT_EQ(ledger.total_cost(pricing), expected);
  EXPECT_EQ(ledger.total("weak"), (Usage{400, 300, 2}));
  EXPECT_EQ(ledger.total("strong"), (Usage{20, 30, 1}));
}

TEST(RunQuery, EscalationMonotoneInTau) {
  std::vector<ReplayRecord> records;
  std::vector<std::vector<std::string>> sets = {
      graded_disjoint(10), kDisjoint, std::vector<std::string>(10, "x1 y2"),
      {"aa bb", "aa bb", "aa bb", "aa bb", "aa bb", "cc dd", "ee", "ff gg hh",
       "aa", "bb"}};
  for (std::size_t i = 0; i < sets.size(); ++i) {
    records.push_back(make_record("q" + std::to_string(i), sets[i], "S"));
  }
  Harness h(records);
  std::size_t prev = 0;
  for (std::size_t tau = 1; tau <= 10; ++tau) {
    CascadeParams p;
    p.tau = tau;
    std::size_t escalated = 0;
    for (const auto& r : records) {
      const auto out = run_query({r.query_id, r.query_text}, h.models(), p);
      escalated += out.decision == Decision::kEscalated;
      EXPECT_EQ(out.decision, decide(out.n_sim, tau));
    }
    EXPECT_GE(escalated, prev);
    prev = escalated;
  }
  CascadeParams one;
  one.tau = 1;
  for (const auto& r : records) {
    EXPECT_EQ(run_query({r.query_id, ""}, h.models(), one).decision,
              Decision::kAcceptedWeak);
  }
}

TEST(RunQuery, ReplayIsDeterministic) {
  Harness h({make_record("q1", kDisjoint, "Strong.")});
  const auto a = to_json(run_query({"q1", "t"}, h.models(), CascadeParams{}));
  const auto b = to_json(run_query({"q1", "t"}, h.models(), CascadeParams{}));
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_FALSE(a.contains("elapsed_ms"));
}

TEST(RunQuery, CustomAnalyzer) {
  Harness h({make_record("q1", kDisjoint, "Strong.")});
  const ResponseAnalyzer fixed = [](const std::vector<std::string>&,
                                    const CascadeParams&) {
    return ResponseAnalysis{3, 9, 1.0};
  };
  const auto out = run_query({"q1", "t"}, h.models(), CascadeParams{}, fixed);
  EXPECT_EQ(out.decision, Decision::kAcceptedWeak);
  EXPECT_EQ(out.final_answer, kDisjoint[3]);
}

TEST(OutcomeJson, FieldsAndTiming) {
  CascadeOutcome o;
  o.query_id = "q";
  o.decision = Decision::kEscalated;
  o.final_answer = "a";
  o.strong_usage = Usage{1, 2, 1};
  o.elapsed = std::chrono::milliseconds(5);
  const auto j = to_json(o, true);
  EXPECT_EQ(j["decision"], "escalated");
  EXPECT_EQ(j["strong_usage"]["output_tokens"], 2);
  EXPECT_DOUBLE_EQ(j["elapsed_ms"].get<double>(), 5.0);
  o.strong_usage.reset();
  EXPECT_TRUE(to_json(o)["strong_usage"].is_null());
}

}  // namespace
}  // namespace kic
