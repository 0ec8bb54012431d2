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

#include <semaphore>
#include <thread>

#include <httplib.h>

#include "kic/backends.hpp"

namespace kic {
namespace {

std::atomic<std::size_t> g_requests_sent{0};

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must start with http:// or https://: " +
                                url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = url.substr(0, path_begin);
  if (path_begin != std::string::npos) ep.path_prefix = url.substr(path_begin);
  while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') {
    ep.path_prefix.pop_back();
  }
  return ep;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

struct Reply {
  int status = 0;
  std::string body;
};

}  // namespace

class HttpChatBackend::Impl {
 public:
  explicit Impl(HttpBackendConfig config)
      : config_(std::move(config)),
        endpoint_(split_endpoint(config_.endpoint)),
        in_flight_(static_cast<std::ptrdiff_t>(
            std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
    if (!config_.sleep) {
      config_.sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      };
    }
    if (config_.retry.max_attempts < 1) config_.retry.max_attempts = 1;
  }

  SampleResult sample(const Query& query, const ModelSpec& spec) {
    SampleResult out;
    if (spec.n_choices == 0) return out;

    if (spec.n_choices > 1) {
      const Reply reply = post_with_retry(request_body(query, spec, spec.n_choices));
      if (reply.status == 400) {
        // Provider refuses multi-choice sampling; fall through to one request
        // per choice.
      } else {
        check_ok(reply);
        absorb(reply.body, out);
      }
    }
    while (out.responses.size() < spec.n_choices) {
      const Reply reply = post_with_retry(request_body(query, spec, 1));
      check_ok(reply);
      const std::size_t before = out.responses.size();
      absorb(reply.body, out);
      if (out.responses.size() == before) {
        throw BackendError("provider returned no choices for query '" +
                           query.id + "'");
      }
    }
    out.responses.resize(spec.n_choices);
    return out;
  }

 private:
  nlohmann::json request_body(const Query& query, const ModelSpec& spec,
                              std::size_t n) const {
    nlohmann::json body = {
        {"model", spec.model_name},
        {"messages", {{{"role", "user"}, {"content", query.text}}}},
        {"temperature", spec.temperature},
        {"max_tokens", spec.max_output_tokens},
    };
    if (n > 1) body["n"] = n;
    return body;
  }

  static void check_ok(const Reply& reply) {
    if (reply.status < 200 || reply.status >= 300) {
      throw BackendError("chat completion failed with HTTP " +
                             std::to_string(reply.status) + ": " +
                             reply.body.substr(0, 300),
                         reply.status);
    }
  }

  static void absorb(const std::string& body, SampleResult& out) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
      for (const auto& choice : j.at("choices")) {
        const auto& content = choice.at("message").at("content");
        out.responses.push_back(content.is_null() ? std::string{}
                                                  : content.get<std::string>());
      }
      if (const auto it = j.find("usage"); it != j.end()) {
        out.usage.input_tokens += it->value("prompt_tokens", std::uint64_t{0});
        out.usage.output_tokens +=
            it->value("completion_tokens", std::uint64_t{0});
      }
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat completion response: ") +
                         e.what());
    }
    out.usage.n_requests += 1;
  }

  Reply post_once(const std::string& payload) {
    httplib::Client client(endpoint_.scheme_host_port);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    in_flight_.acquire();
    g_requests_sent.fetch_add(1, std::memory_order_relaxed);
    auto res = client.Post(endpoint_.path_prefix + "/chat/completions", headers,
                           payload, "application/json");
    in_flight_.release();
    if (!res) {
      throw TransportFailure(httplib::to_string(res.error()));
    }
    return Reply{res->status, res->body};
  }

  Reply post_with_retry(const nlohmann::json& body) {
    const std::string payload = body.dump();
    auto backoff = config_.retry.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      try {
        Reply reply = post_once(payload);
        if (!retryable_status(reply.status)) return reply;
        last_error = "HTTP " + std::to_string(reply.status);
        if (attempt == config_.retry.max_attempts) {
          check_ok(reply);
        }
      } catch (const TransportFailure& e) {
        last_error = e.what();
      }
      if (attempt < config_.retry.max_attempts) {
        config_.sleep(backoff);
        backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
            static_cast<double>(backoff.count()) * config_.retry.multiplier));
      }
    }
    throw BackendError("request to " + config_.endpoint + " failed after " +
                       std::to_string(config_.retry.max_attempts) +
                       " attempts: " + last_error);
  }

  struct TransportFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  HttpBackendConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<1024> in_flight_;
};

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpChatBackend::~HttpChatBackend() = default;

SampleResult HttpChatBackend::sample(const Query& query, const ModelSpec& spec) {
  return impl_->sample(query, spec);
}

std::size_t HttpChatBackend::requests_sent() {
  return g_requests_sent.load(std::memory_order_relaxed);
}

}  // namespace kic
