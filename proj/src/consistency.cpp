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

#include "kic/consistency.hpp"

#include <algorithm>
#include <stdexcept>

namespace kic {

std::set<std::string> representative_keywords(const TokenizedResponse& rep) {
  return {rep.terms.begin(), rep.terms.end()};
}

std::set<std::string> representative_keywords(const TokenizedResponse& rep,
                                              const IdfTable& idf,
                                              const KeywordSet& global,
                                              const RepKeywordOptions& options) {
  switch (options.rule) {
    case RepKeywordRule::kAllTerms:
      return representative_keywords(rep);
    case RepKeywordRule::kGlobalIntersection: {
      std::set<std::string> out;
      for (const auto& [term, count] : rep.term_counts) {
        if (global.contains(term)) out.insert(term);
      }
      return out;
    }
    case RepKeywordRule::kTopTfidf: {
      std::vector<std::pair<std::string, double>> ranked;
      for (const auto& [term, tf] : rep.term_counts) {
        ranked.emplace_back(term, static_cast<double>(tf) * idf.at(term));
      }
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      std::set<std::string> out;
      for (std::size_t i = 0; i < ranked.size() && i < options.top_m; ++i) {
        out.insert(ranked[i].first);
      }
      return out;
    }
  }
  return {};
}

ConsistencyResult evaluate_consistency(const Corpus& corpus, std::size_t rep_id,
                                       const IdfTable& idf,
                                       const KeywordSet& keywords, double alpha,
                                       double beta,
                                       const RepKeywordOptions& options) {
  if (rep_id >= corpus.size()) {
    throw std::out_of_range("representative id outside the response set");
  }
  const auto policy = WeightPolicy::consistency(
      keywords,
      representative_keywords(corpus.doc(rep_id), idf, keywords, options),
      alpha, beta);

  ConsistencyResult out;
  out.rep_id = rep_id;
  out.per_response_scores.reserve(corpus.size());
  for (const auto& doc : corpus.docs()) {
    out.per_response_scores.emplace_back(
        doc.response_id, weighted_score(doc, idf, policy).score);
  }
  out.s_star = out.per_response_scores[rep_id].second;
  out.n_sim = static_cast<std::size_t>(std::count_if(
      out.per_response_scores.begin(), out.per_response_scores.end(),
      [&](const auto& entry) {
        return score_at_least(entry.second, out.s_star);
      }));
  return out;
}

ConsistencyResult evaluate_consistency(const Corpus& corpus, std::size_t rep_id,
                                       std::size_t k, double alpha, double beta,
                                       const RepKeywordOptions& options) {
  return evaluate_consistency(corpus, rep_id, compute_idf(corpus),
                              top_k_keywords(corpus, k), alpha, beta, options);
}

}  // namespace kic
