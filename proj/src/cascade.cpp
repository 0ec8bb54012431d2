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

namespace kic {

void CascadeParams::validate() const {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (tau < 1 || tau > n_samples) {
    throw std::invalid_argument("tau must be in 1.." + std::to_string(n_samples) +
                                ", got " + std::to_string(tau));
  }
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  if (!(alpha < beta)) throw std::invalid_argument("beta must exceed alpha");
  normalization.validate();
}

const char* to_string(Decision d) {
  return d == Decision::kAcceptedWeak ? "accepted-weak" : "escalated";
}

Decision decide(std::size_t n_sim, std::size_t tau) {
  return n_sim >= tau ? Decision::kAcceptedWeak : Decision::kEscalated;
}

nlohmann::ordered_json to_json(const CascadeOutcome& outcome,
                               bool include_timing) {
  auto usage = [](const Usage& u) {
    return nlohmann::ordered_json{{"input_tokens", u.input_tokens},
                                  {"output_tokens", u.output_tokens},
                                  {"n_requests", u.n_requests}};
  };
  nlohmann::ordered_json j;
  j["query_id"] = outcome.query_id;
  j["decision"] = to_string(outcome.decision);
  j["rep_id"] = outcome.rep_id;
  j["n_sim"] = outcome.n_sim;
  j["s_star"] = outcome.s_star;
  j["final_answer"] = outcome.final_answer;
  j["weak_usage"] = usage(outcome.weak_usage);
  j["strong_usage"] =
      outcome.strong_usage ? usage(*outcome.strong_usage) : nullptr;
  if (include_timing) j["elapsed_ms"] = outcome.elapsed.count() / 1e6;
  return j;
}

ResponseAnalysis analyze_responses(const std::vector<std::string>& responses,
                                   const CascadeParams& params) {
  const auto corpus = Corpus::from_texts(responses, params.normalization);
  const auto idf = compute_idf(corpus);
  const auto keywords = top_k_keywords(corpus, params.k);
  const auto selection =
      select_representative(corpus, idf, keywords, params.alpha);
  const auto consistency =
      evaluate_consistency(corpus, selection.rep_id, idf, keywords,
                           params.alpha, params.beta, params.rep_keywords);
  return {selection.rep_id, consistency.n_sim, consistency.s_star};
}

CascadeOutcome run_query(const Query& query, const CascadeModels& models,
                         const CascadeParams& params,
                         const ResponseAnalyzer& analyzer) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();

  ModelSpec weak_spec = models.weak_spec;
  weak_spec.n_choices = params.n_samples;
  auto weak = models.weak.sample(query, weak_spec);
  if (models.ledger) models.ledger->add(weak_spec.model_name, weak.usage);
  if (weak.responses.empty()) {
    throw EmptyResponseSet("weak model returned no responses for query '" +
                           query.id + "'");
  }

  const auto analysis = analyzer(weak.responses, params);

  CascadeOutcome out;
  out.query_id = query.id;
  out.rep_id = analysis.rep_id;
  out.n_sim = analysis.n_sim;
  out.s_star = analysis.s_star;
  out.weak_usage = weak.usage;
  out.decision = decide(analysis.n_sim, params.tau);

  if (out.decision == Decision::kAcceptedWeak) {
    out.final_answer = weak.responses.at(analysis.rep_id);
  } else {
    ModelSpec strong_spec = models.strong_spec;
    strong_spec.n_choices = 1;
    auto strong = models.strong.sample(query, strong_spec);
    if (models.ledger) models.ledger->add(strong_spec.model_name, strong.usage);
    if (strong.responses.empty()) {
      throw BackendError("strong model returned no response for query '" +
                         query.id + "'");
    }
    out.final_answer = std::move(strong.responses.front());
    out.strong_usage = strong.usage;
  }
  out.elapsed = std::chrono::steady_clock::now() - start;
  return out;
}

CascadeOutcome run_query(const Query& query, const CascadeModels& models,
                         const CascadeParams& params) {
  return run_query(query, models, params, analyze_responses);
}

}  // namespace kic
