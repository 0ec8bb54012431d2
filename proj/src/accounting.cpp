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

#include <cstdio>
#include <fstream>
#include <limits>

#include "kic/backends.hpp"

namespace kic {
namespace {

constexpr std::int64_t kPicosPerDollar = 1'000'000'000'000;
constexpr std::int64_t kPicosPerMicro = 1'000'000;

std::int64_t checked_int64(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("dollar amount out of range");
  }
  return static_cast<std::int64_t>(v);
}

std::string price_text(const nlohmann::json& entry, const std::string& model,
                       const char* field) {
  if (!entry.is_object() || !entry.contains(field)) {
    throw std::invalid_argument("pricing entry '" + model + "' is missing " +
                                field);
  }
  const auto& v = entry[field];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12f", v.get<double>());
    return buf;
  }
  throw std::invalid_argument("pricing entry '" + model + "' field " + field +
                              " must be a number or decimal string");
}

}  // namespace

Dollars Dollars::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty dollar amount");
  const auto dot = text.find('.');
  const auto whole = text.substr(0, dot);
  const auto frac =
      dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) {
    throw std::invalid_argument("malformed dollar amount");
  }
  __int128 picos = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') {
      throw std::invalid_argument("malformed dollar amount: " +
                                  std::string(text));
    }
    picos = picos * 10 + (c - '0');
    if (picos > std::numeric_limits<std::int64_t>::max()) {
      throw std::overflow_error("dollar amount out of range");
    }
  }
  picos *= kPicosPerDollar;
  if (frac.size() > 12) {
    throw std::invalid_argument("more than 12 decimal places: " +
                                std::string(text));
  }
  std::int64_t scale = kPicosPerDollar;
  for (char c : frac) {
    if (c < '0' || c > '9') {
      throw std::invalid_argument("malformed dollar amount: " +
                                  std::string(text));
    }
    scale /= 10;
    picos += static_cast<__int128>(c - '0') * scale;
  }
  return from_picos(checked_int64(picos));
}

std::int64_t Dollars::micros_rounded() const {
  const std::int64_t half = kPicosPerMicro / 2;
  return picos_ >= 0 ? (picos_ + half) / kPicosPerMicro
                     : -((-picos_ + half) / kPicosPerMicro);
}

std::string Dollars::to_string() const {
  const std::int64_t micros = micros_rounded();
  const std::int64_t abs_micros = micros < 0 ? -micros : micros;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", micros < 0 ? "-" : "",
                static_cast<long long>(abs_micros / 1'000'000),
                static_cast<long long>(abs_micros % 1'000'000));
  return buf;
}

void to_json(nlohmann::json& j, const Usage& u) {
  j = nlohmann::json{{"input_tokens", u.input_tokens},
                     {"output_tokens", u.output_tokens},
                     {"n_requests", u.n_requests}};
}

void from_json(const nlohmann::json& j, Usage& u) {
  auto count = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_unsigned()) {
      throw std::invalid_argument(std::string("usage field ") + key +
                                  " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  };
  u.input_tokens = count("input_tokens");
  u.output_tokens = count("output_tokens");
  u.n_requests = count("n_requests");
}

ModelPrice ModelPrice::per_million(std::string_view input_dollars,
                                   std::string_view output_dollars) {
  // $p per million tokens is p * 1e6 picodollars per token.
  auto per_token = [](std::string_view text) {
    const auto d = Dollars::parse(text);
    if (d.picos() % kPicosPerMicro != 0) {
      throw std::invalid_argument(
          "prices per million tokens allow at most 6 decimal places: " +
          std::string(text));
    }
    return d.picos() / kPicosPerMicro;
  };
  return ModelPrice{per_token(input_dollars), per_token(output_dollars)};
}

void PricingTable::set(const std::string& model, ModelPrice price) {
  prices_[model] = price;
}

bool PricingTable::contains(const std::string& model) const {
  return prices_.contains(model);
}

const ModelPrice& PricingTable::at(const std::string& model) const {
  const auto it = prices_.find(model);
  if (it == prices_.end()) throw UnknownModel(model);
  return it->second;
}

PricingTable PricingTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("pricing config must be a JSON object");
  }
  PricingTable table;
  for (const auto& [model, entry] : j.items()) {
    table.set(model, ModelPrice::per_million(
                         price_text(entry, model, "input_price_per_million"),
                         price_text(entry, model, "output_price_per_million")));
  }
  return table;
}

PricingTable PricingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open pricing config: " + path.string());
  }
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid pricing config " + path.string() + ": " +
                             e.what());
  }
}

Dollars cost(const Usage& usage, const std::string& model,
             const PricingTable& pricing) {
  const auto& price = pricing.at(model);
  const __int128 picos =
      static_cast<__int128>(usage.input_tokens) * price.input_picos_per_token +
      static_cast<__int128>(usage.output_tokens) * price.output_picos_per_token;
  return Dollars::from_picos(checked_int64(picos));
}

void UsageLedger::add(const std::string& model, const Usage& usage) {
  std::lock_guard lock(mu_);
  by_model_[model] += usage;
}

std::map<std::string, Usage> UsageLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return by_model_;
}

Usage UsageLedger::total(const std::string& model) const {
  std::lock_guard lock(mu_);
  const auto it = by_model_.find(model);
  return it == by_model_.end() ? Usage{} : it->second;
}

Dollars UsageLedger::total_cost(const PricingTable& pricing) const {
  std::lock_guard lock(mu_);
  Dollars sum;
  for (const auto& [model, usage] : by_model_) sum += cost(usage, model, pricing);
  return sum;
}

}  // namespace kic
