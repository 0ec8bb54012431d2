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

#include <fstream>
#include <sstream>

#include "kic/backends.hpp"

namespace kic {

ModelSpec ModelSpec::weak_default(std::string model_name,
                                  std::size_t n_samples) {
  ModelSpec spec;
  spec.model_name = std::move(model_name);
  spec.temperature = 1.0;
  spec.n_choices = n_samples;
  spec.role = ModelRole::kWeak;
  return spec;
}

ModelSpec ModelSpec::strong_default(std::string model_name) {
  ModelSpec spec;
  spec.model_name = std::move(model_name);
  spec.temperature = 0.0;
  spec.n_choices = 1;
  spec.role = ModelRole::kStrong;
  return spec;
}

void to_json(nlohmann::ordered_json& j, const ReplayRecord& r) {
  auto usage = [](const Usage& u) {
    return nlohmann::ordered_json{{"input_tokens", u.input_tokens},
                                  {"output_tokens", u.output_tokens},
                                  {"n_requests", u.n_requests}};
  };
  j = nlohmann::ordered_json::object();
  j["query_id"] = r.query_id;
  j["query_text"] = r.query_text;
  j["weak_responses"] = r.weak_responses;
  j["weak_usage"] = usage(r.weak_usage);
  j["strong_response"] = r.strong_response;
  j["strong_usage"] = usage(r.strong_usage);
  if (r.reference_answer) j["reference_answer"] = *r.reference_answer;
  if (r.greedy_response) j["greedy_response"] = *r.greedy_response;
}

ReplayRecord replay_record_from_json(const nlohmann::json& j) {
  ReplayRecord r;
  r.query_id = j.at("query_id").get<std::string>();
  r.query_text = j.at("query_text").get<std::string>();
  r.weak_responses = j.at("weak_responses").get<std::vector<std::string>>();
  if (r.weak_responses.empty()) {
    throw std::invalid_argument("record '" + r.query_id +
                                "' has no weak responses");
  }
  r.weak_usage = j.at("weak_usage").get<Usage>();
  r.strong_response = j.at("strong_response").get<std::string>();
  r.strong_usage = j.at("strong_usage").get<Usage>();
  if (const auto it = j.find("reference_answer");
      it != j.end() && !it->is_null()) {
    r.reference_answer = it->get<std::string>();
  }
  if (const auto it = j.find("greedy_response");
      it != j.end() && !it->is_null()) {
    r.greedy_response = it->get<std::string>();
  }
  return r;
}

std::string to_json_line(const ReplayRecord& record) {
  nlohmann::ordered_json j = record;
  return j.dump();
}

ReplayStore::ReplayStore(std::vector<ReplayRecord> records)
    : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].query_id, i).second) {
      throw std::invalid_argument("duplicate fixture query_id '" +
                                  records_[i].query_id + "'");
    }
  }
}

ReplayStore ReplayStore::parse(std::istream& in) {
  std::vector<ReplayRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(replay_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("fixture line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return ReplayStore(std::move(records));
}

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture file: " + path.string());
  return parse(in);
}

const ReplayRecord* ReplayStore::find(const std::string& query_id) const {
  const auto it = index_.find(query_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ReplayRecord& ReplayStore::at(const std::string& query_id) const {
  if (const auto* r = find(query_id)) return *r;
  throw MissingFixture("no fixture for query '" + query_id + "'");
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ReplayStore> store)
    : store_(std::move(store)) {}

SampleResult ReplayBackend::sample(const Query& query, const ModelSpec& spec) {
  const auto& record = store_->at(query.id);
  SampleResult out;
  if (spec.role == ModelRole::kStrong) {
    out.responses.assign(spec.n_choices, record.strong_response);
    out.usage = record.strong_usage;
    return out;
  }
  if (record.weak_responses.size() < spec.n_choices) {
    throw MissingFixture("fixture for query '" + query.id + "' stores " +
                         std::to_string(record.weak_responses.size()) +
                         " weak responses, " + std::to_string(spec.n_choices) +
                         " requested");
  }
  out.responses.assign(record.weak_responses.begin(),
                       record.weak_responses.begin() +
                           static_cast<std::ptrdiff_t>(spec.n_choices));
  out.usage = record.weak_usage;
  return out;
}

std::size_t record_run(const std::vector<RecordItem>& items,
                       ModelBackend& weak, const ModelSpec& weak_spec,
                       ModelBackend& strong, const ModelSpec& strong_spec,
                       std::ostream& sink, const RecordOptions& options) {
  std::size_t written = 0;
  for (const auto& item : items) {
    ReplayRecord record;
    record.query_id = item.query.id;
    record.query_text = item.query.text;
    record.reference_answer = item.reference_answer;

    auto weak_result = weak.sample(item.query, weak_spec);
    record.weak_responses = std::move(weak_result.responses);
    record.weak_usage = weak_result.usage;

    auto strong_result = strong.sample(item.query, strong_spec);
    record.strong_response = strong_result.responses.at(0);
    record.strong_usage = strong_result.usage;

    if (options.record_greedy) {
      ModelSpec greedy = weak_spec;
      greedy.temperature = 0.0;
      greedy.n_choices = 1;
      record.greedy_response = weak.sample(item.query, greedy).responses.at(0);
    }

    sink << to_json_line(record) << '\n';
    sink.flush();
    if (!sink) throw std::runtime_error("failed writing fixture record");
    if (options.on_record) options.on_record(written, record);
    ++written;
  }
  return written;
}

}  // namespace kic
