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

#include "kic/backends.hpp"

#include <fstream>
#include <random>
#include <thread>

#include <gtest/gtest.h>

namespace kic {
namespace {

PricingTable shipped_pricing() {
  return PricingTable::load(std::filesystem::path(KIC_DATA_DIR) / "pricing.json");
}

TEST(Dollars, ParseAndFormat) {
  EXPECT_EQ(Dollars::parse("30").picos(), 30'000'000'000'000);
  EXPECT_EQ(Dollars::parse("0.5").to_string(), "0.500000");
  EXPECT_EQ(Dollars::parse("0.000001").picos(), 1'000'000);
  EXPECT_EQ(Dollars::parse("1.000000000001").picos(), 1'000'000'000'001);
  EXPECT_EQ(Dollars::parse(".25").to_string(), "0.250000");
  EXPECT_THROW(Dollars::parse("-1"), std::invalid_argument);
  EXPECT_THROW(Dollars::parse(""), std::invalid_argument);
  EXPECT_THROW(Dollars::parse("1.2.3"), std::invalid_argument);
  EXPECT_THROW(Dollars::parse("abc"), std::invalid_argument);
  EXPECT_THROW(Dollars::parse("0.0000000000001"), std::invalid_argument);
}

TEST(Dollars, RoundsHalfAwayFromZero) {
  EXPECT_EQ(Dollars::from_picos(500'000).to_string(), "0.000001");
  EXPECT_EQ(Dollars::from_picos(499'999).to_string(), "0.000000");
  EXPECT_EQ(Dollars::from_picos(1'234'567'500'000).to_string(), "1.234568");
  EXPECT_EQ(Dollars::from_picos(1'500'000).micros_rounded(), 2);
  EXPECT_DOUBLE_EQ(Dollars::parse("0.01762").to_double(), 0.01762);
}

TEST(ModelPrice, PerMillion) {
  const auto p = ModelPrice::per_million("30.00", "60.00");
  EXPECT_EQ(p.input_picos_per_token, 30'000'000);
  EXPECT_EQ(p.output_picos_per_token, 60'000'000);
  EXPECT_THROW(ModelPrice::per_million("0.0000001", "1"), std::invalid_argument);
}

TEST(Cost, MillionInputTokens) {
  const auto pricing = shipped_pricing();
  EXPECT_EQ(cost({1'000'000, 0, 1}, "gpt-4", pricing).to_string(), "30.000000");
  EXPECT_EQ(cost({1'000'000, 0, 1}, "gpt-3.5-turbo", pricing).to_string(),
            "0.500000");
  EXPECT_EQ(cost({1'000'000, 0, 1}, "gpt-4", pricing).picos(),
            60 * cost({1'000'000, 0, 1}, "gpt-3.5-turbo", pricing).picos());
}

TEST(Cost, OutputTokens) {
  const auto pricing = shipped_pricing();
  EXPECT_EQ(cost({0, 1'000'000, 1}, "gpt-4", pricing).to_string(), "60.000000");
  EXPECT_EQ(cost({0, 1'000'000, 1}, "gpt-3.5-turbo", pricing).to_string(),
            "1.500000");
  // 123 * 0.50/1e6 + 45 * 1.50/1e6 = 0.0001290
  EXPECT_EQ(cost({123, 45, 1}, "gpt-3.5-turbo", pricing).picos(), 129'000'000);
}

TEST(Cost, ZeroUsageIsFree) {
  EXPECT_EQ(cost({}, "gpt-4", shipped_pricing()), Dollars{});
}

TEST(Cost, UnknownModel) {
  EXPECT_THROW(cost({1, 1, 1}, "gpt-5", shipped_pricing()), UnknownModel);
}

TEST(Cost, AdditiveOverRandomMerges) {
  const auto pricing = shipped_pricing();
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint64_t> tokens(0, 5'000'000);
  for (int i = 0; i < 1000; ++i) {
    const Usage a{tokens(rng), tokens(rng), 1};
    const Usage b{tokens(rng), tokens(rng), 2};
    for (const char* model : {"gpt-4", "gpt-3.5-turbo"}) {
      EXPECT_EQ(cost(a + b, model, pricing),
                cost(a, model, pricing) + cost(b, model, pricing));
    }
  }
}

TEST(PricingTable, FromJsonNumbersAndStrings) {
  const auto j = nlohmann::json::parse(R"({
    "a": {"input_price_per_million": 0.5, "output_price_per_million": "1.50"},
    "b": {"input_price_per_million": 1e-05, "output_price_per_million": 2}
  })");
  const auto t = PricingTable::from_json(j);
  EXPECT_EQ(t.at("a").input_picos_per_token, 500'000);
  EXPECT_EQ(t.at("a").output_picos_per_token, 1'500'000);
  EXPECT_EQ(t.at("b").input_picos_per_token, 10);
  EXPECT_TRUE(t.contains("b"));
  EXPECT_FALSE(t.contains("c"));
}

TEST(PricingTable, RejectsMalformed) {
  EXPECT_THROW(PricingTable::from_json(nlohmann::json::array()),
               std::invalid_argument);
  EXPECT_THROW(PricingTable::from_json(nlohmann::json::parse(
                   R"({"a": {"input_price_per_million": 1}})")),
               std::invalid_argument);
  EXPECT_THROW(PricingTable::from_json(nlohmann::json::parse(
                   R"({"a": {"input_price_per_million": -1,
                              "output_price_per_million": 1}})")),
               std::invalid_argument);
  EXPECT_THROW(PricingTable::load("/nonexistent/pricing.json"),
               std::runtime_error);
}

TEST(Usage, JsonRoundTrip) {
  const Usage u{12, 34, 2};
  nlohmann::json j = u;
  EXPECT_EQ(j.get<Usage>(), u);
  EXPECT_THROW(nlohmann::json::parse(R"({"input_tokens": -1,
      "output_tokens": 0, "n_requests": 0})").get<Usage>(),
               std::invalid_argument);
}

TEST(UsageLedger, ConcurrentAdds) {
  UsageLedger ledger;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) ledger.add("gpt-4", {1, 2, 1});
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ledger.total("gpt-4"), (Usage{8000, 16000, 8000}));
  EXPECT_EQ(ledger.total("other"), Usage{});
  // 8000 * 30/1e6 + 16000 * 60/1e6 = 0.24 + 0.96
  EXPECT_EQ(ledger.total_cost(shipped_pricing()).to_string(), "1.200000");
}

}  // namespace
}  // namespace kic
