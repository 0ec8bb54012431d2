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

#include "kic/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace kic {

Corpus::Corpus(std::vector<TokenizedResponse> docs) : docs_(std::move(docs)) {
  if (docs_.empty()) {
    throw std::invalid_argument("corpus must contain at least one response");
  }
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (docs_[i].response_id != i) {
      throw std::invalid_argument("response ids must be 0..n-1 in order");
    }
  }
}

Corpus Corpus::from_texts(const std::vector<std::string>& texts,
                          const NormalizationConfig& config) {
  std::vector<TokenizedResponse> docs;
  docs.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back(normalize_and_tokenize(texts[i], config, i));
  }
  return Corpus(std::move(docs));
}

double IdfTable::at(const std::string& term) const {
  const auto it = idf.find(term);
  if (it == idf.end()) throw MissingIdfTerm(term);
  return it->second;
}

WeightPolicy WeightPolicy::selection(KeywordSet keywords, double alpha) {
  WeightPolicy p;
  p.mode = WeightMode::kSelection;
  p.alpha = alpha;
  p.global_keywords = std::move(keywords);
  p.validate();
  return p;
}

WeightPolicy WeightPolicy::consistency(KeywordSet keywords,
                                       std::set<std::string> rep_keywords,
                                       double alpha, double beta) {
  WeightPolicy p;
  p.mode = WeightMode::kConsistency;
  p.alpha = alpha;
  p.beta = beta;
  p.global_keywords = std::move(keywords);
  p.rep_keywords = std::move(rep_keywords);
  p.validate();
  return p;
}

void WeightPolicy::validate() const {
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  if (mode == WeightMode::kConsistency && !(alpha < beta)) {
    throw std::invalid_argument("consistency weighting requires alpha < beta");
  }
}

double WeightPolicy::weight(const std::string& term) const {
  if (mode == WeightMode::kConsistency && rep_keywords.contains(term)) {
    return beta;
  }
  if (global_keywords.contains(term)) return alpha;
  return 1.0;
}

IdfTable compute_idf(const Corpus& corpus) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus.docs()) {
    for (const auto& [term, count] : doc.term_counts) ++df[term];
  }
  IdfTable table;
  table.n_docs = corpus.size();
  const double n = static_cast<double>(corpus.size());
  for (const auto& [term, d] : df) {
    table.idf.emplace(term,
                      std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0);
  }
  return table;
}

KeywordSet top_k_keywords(const Corpus& corpus, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::map<std::string, std::size_t> totals;
  for (const auto& doc : corpus.docs()) {
    for (const auto& [term, count] : doc.term_counts) totals[term] += count;
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(totals.begin(),
                                                          totals.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  KeywordSet out;
  out.k = k;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    out.terms.insert(ranked[i].first);
  }
  return out;
}

ScoredResponse weighted_score(const TokenizedResponse& doc,
                              const IdfTable& idf, const WeightPolicy& policy) {
  policy.validate();
  ScoredResponse out;
  out.response_id = doc.response_id;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& [term, tf] : doc.term_counts) {
    const double v = policy.weight(term) * static_cast<double>(tf) * idf.at(term);
    out.components.emplace(term, v);
    sum += v;
    sum_sq += v * v;
  }
  out.l2_norm = std::sqrt(sum_sq);
  out.score = out.l2_norm > 0.0 ? sum / out.l2_norm : 0.0;
  return out;
}

bool score_at_least(double a, double b) {
  return a >= b - kScoreTieTolerance * std::max(std::fabs(a), std::fabs(b));
}

std::size_t argmax_score(const std::vector<ScoredResponse>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (!score_at_least(scores[best].score, scores[i].score)) best = i;
  }
  return best;
}

Selection select_representative(const Corpus& corpus, const IdfTable& idf,
                                const KeywordSet& keywords, double alpha) {
  const auto policy = WeightPolicy::selection(keywords, alpha);
  Selection out;
  out.scores.reserve(corpus.size());
  for (const auto& doc : corpus.docs()) {
    out.scores.push_back(weighted_score(doc, idf, policy));
  }
  out.rep_id = argmax_score(out.scores);
  return out;
}

Selection select_representative(const Corpus& corpus, std::size_t k,
                                double alpha) {
  return select_representative(corpus, compute_idf(corpus),
                               top_k_keywords(corpus, k), alpha);
}

}  // namespace kic
