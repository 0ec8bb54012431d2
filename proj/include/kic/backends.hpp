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

// Model access: the backend interface, a live chat-completion client, the
// record/replay fixture store, and token/dollar accounting.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kic {

// ---------------------------------------------------------------------------
// Errors

// Transport, auth or protocol failure, raised after retries are exhausted.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, int http_status = 0)
      : std::runtime_error(what), http_status_(http_status) {}
  int http_status() const noexcept { return http_status_; }

 private:
  int http_status_;
};

class MissingFixture : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownModel : public std::runtime_error {
 public:
  explicit UnknownModel(const std::string& model)
      : std::runtime_error("no pricing entry for model '" + model + "'") {}
};

// ---------------------------------------------------------------------------
// Money and usage

// Fixed-point dollar amount with 1e-12 resolution. A price quoted per million
// tokens with up to six decimals is an integer number of picodollars per
// token, so every cost computed here is exact and sums never drift.
class Dollars {
 public:
  constexpr Dollars() = default;
  static constexpr Dollars from_picos(std::int64_t picos) {
    Dollars d;
    d.picos_ = picos;
    return d;
  }
  // Throws std::invalid_argument for negative input or more than six
  // decimals.
  static Dollars parse(std::string_view decimal);

  constexpr std::int64_t picos() const { return picos_; }
  double to_double() const { return static_cast<double>(picos_) * 1e-12; }
  // Rounded half away from zero to six decimal places, e.g. "30.000000".
  std::string to_string() const;
  std::int64_t micros_rounded() const;

  constexpr Dollars& operator+=(Dollars other) {
    picos_ += other.picos_;
    return *this;
  }
  friend constexpr Dollars operator+(Dollars a, Dollars b) { return a += b; }
  friend constexpr auto operator<=>(Dollars, Dollars) = default;

 private:
  std::int64_t picos_ = 0;
};

struct Usage {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  std::uint64_t n_requests = 0;

  Usage& operator+=(const Usage& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    n_requests += other.n_requests;
    return *this;
  }
  friend Usage operator+(Usage a, const Usage& b) { return a += b; }
  friend bool operator==(const Usage&, const Usage&) = default;
};

void to_json(nlohmann::json& j, const Usage& u);
void from_json(const nlohmann::json& j, Usage& u);

struct ModelPrice {
  // Picodollars per token == micro-dollars per million tokens.
  std::int64_t input_picos_per_token = 0;
  std::int64_t output_picos_per_token = 0;

  static ModelPrice per_million(std::string_view input_dollars,
                                std::string_view output_dollars);
};

class PricingTable {
 public:
  void set(const std::string& model, ModelPrice price);
  bool contains(const std::string& model) const;
  // Throws UnknownModel.
  const ModelPrice& at(const std::string& model) const;
  const std::map<std::string, ModelPrice>& entries() const { return prices_; }

  // {"<model>": {"input_price_per_million": 30.0,
  //              "output_price_per_million": 60.0}, ...}
  // Prices may be JSON numbers or decimal strings.
  static PricingTable from_json(const nlohmann::json& j);
  static PricingTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, ModelPrice> prices_;
};

// input_tokens/1e6 * input_price + output_tokens/1e6 * output_price.
// Throws UnknownModel.
Dollars cost(const Usage& usage, const std::string& model,
             const PricingTable& pricing);

// Thread-safe per-model usage accumulator.
class UsageLedger {
 public:
  void add(const std::string& model, const Usage& usage);
  std::map<std::string, Usage> snapshot() const;
  Usage total(const std::string& model) const;
  Dollars total_cost(const PricingTable& pricing) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Usage> by_model_;
};

// ---------------------------------------------------------------------------
// Backends

enum class ModelRole { kWeak, kStrong };

struct ModelSpec {
  std::string model_name;
  double temperature = 1.0;
  std::size_t n_choices = 1;
  std::size_t max_output_tokens = 512;
  ModelRole role = ModelRole::kWeak;

  // temperature 1.0, n_samples choices.
  static ModelSpec weak_default(std::string model_name, std::size_t n_samples);
  // temperature 0.0, one choice.
  static ModelSpec strong_default(std::string model_name);
};

struct Query {
  std::string id;
  std::string text;
};

struct SampleResult {
  std::vector<std::string> responses;
  Usage usage;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Returns exactly spec.n_choices responses or throws.
  virtual SampleResult sample(const Query& query, const ModelSpec& spec) = 0;
};

inline SampleResult sample(ModelBackend& backend, const Query& query,
                           const ModelSpec& spec) {
  return backend.sample(query, spec);
}

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct HttpBackendConfig {
  // Base URL up to and including the API version, e.g.
  // "https://api.openai.com/v1". "/chat/completions" is appended.
  std::string endpoint = "https://api.openai.com/v1";
  std::string api_key;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  std::size_t max_in_flight = 8;
  // Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Name of the environment variable holding the API key.
inline constexpr const char* kApiKeyEnv = "KIC_API_KEY";

// Chat-completion client (OpenAI wire format). Multi-choice sampling uses one
// request with "n"; if the provider rejects it with HTTP 400, or returns
// fewer choices than asked, the remainder is fetched one request at a time.
// Retries transport errors, 429 and 5xx with exponential backoff.
class HttpChatBackend final : public ModelBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  ~HttpChatBackend() override;

  SampleResult sample(const Query& query, const ModelSpec& spec) override;

  // Process-wide count of HTTP requests issued by any instance.
  static std::size_t requests_sent();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Record / replay

struct ReplayRecord {
  std::string query_id;
  std::string query_text;
  std::vector<std::string> weak_responses;
  Usage weak_usage;
  std::string strong_response;
  Usage strong_usage;
  std::optional<std::string> reference_answer;
  // Temperature-0 weak response for the greedy baseline, when recorded.
  std::optional<std::string> greedy_response;
};

void to_json(nlohmann::ordered_json& j, const ReplayRecord& r);
ReplayRecord replay_record_from_json(const nlohmann::json& j);

// Serialized record without trailing newline.
std::string to_json_line(const ReplayRecord& record);

class ReplayStore {
 public:
  ReplayStore() = default;
  explicit ReplayStore(std::vector<ReplayRecord> records);

  // Throws std::runtime_error naming the line on malformed input.
  static ReplayStore parse(std::istream& in);
  static ReplayStore load(const std::filesystem::path& path);

  // Throws MissingFixture.
  const ReplayRecord& at(const std::string& query_id) const;
  const ReplayRecord* find(const std::string& query_id) const;
  const std::vector<ReplayRecord>& records() const { return records_; }

 private:
  std::vector<ReplayRecord> records_;
  std::map<std::string, std::size_t> index_;
};

// Serves recorded responses; never performs I/O. Weak role returns the first
// n_choices stored weak responses (MissingFixture if fewer are stored) with
// the recorded weak usage unchanged. Strong role returns the stored strong
// response.
class ReplayBackend final : public ModelBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ReplayStore> store);
  SampleResult sample(const Query& query, const ModelSpec& spec) override;

 private:
  std::shared_ptr<const ReplayStore> store_;
};

struct RecordItem {
  Query query;
  std::optional<std::string> reference_answer;
};

struct RecordOptions {
  // Also record a temperature-0 weak response for the greedy baseline.
  bool record_greedy = false;
  std::function<void(std::size_t index, const ReplayRecord&)> on_record;
};

// Samples every item from both backends and appends one JSON line per item
// to `sink`, flushing after each line, so an interrupted run leaves a valid
// prefix. BackendError propagates. Returns the number of records written.
std::size_t record_run(const std::vector<RecordItem>& items,
                       ModelBackend& weak, const ModelSpec& weak_spec,
                       ModelBackend& strong, const ModelSpec& strong_spec,
                       std::ostream& sink, const RecordOptions& options = {});

}  // namespace kic
