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

// Keyword-weighted TF-IDF scoring over a set of sampled responses.
//
// For a response a_i with raw term counts tf(t) the weighted component of
// term t is
//
//     v_t = w_t * tf(t) * idf(t),   idf(t) = ln((1 + n) / (1 + df(t))) + 1
//
// and the response score is the L1 mass of that vector divided by its L2
// norm, S(a_i) = sum_t v_t / ||v||_2. Because every v_t is positive the
// score lies in [1, sqrt(m)] for a response with m distinct terms, and it is
// 0 for an empty response.

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kic/textproc.hpp"

namespace kic {

// A doc term has no idf entry; the doc was scored against a different
// corpus than the one the table was built from.
class MissingIdfTerm : public std::runtime_error {
 public:
  explicit MissingIdfTerm(const std::string& term)
      : std::runtime_error("no idf entry for term '" + term + "'"),
        term_(term) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

// The response set. Response ids are always 0..n-1 in order.
class Corpus {
 public:
  // Throws std::invalid_argument when docs is empty or ids are not 0..n-1.
  explicit Corpus(std::vector<TokenizedResponse> docs);

  static Corpus from_texts(const std::vector<std::string>& texts,
                           const NormalizationConfig& config);

  const std::vector<TokenizedResponse>& docs() const noexcept { return docs_; }
  const TokenizedResponse& doc(std::size_t id) const { return docs_.at(id); }
  std::size_t size() const noexcept { return docs_.size(); }

 private:
  std::vector<TokenizedResponse> docs_;
};

struct IdfTable {
  std::map<std::string, double> idf;
  std::size_t n_docs = 0;

  // Throws MissingIdfTerm.
  double at(const std::string& term) const;
};

struct KeywordSet {
  std::set<std::string> terms;
  std::size_t k = 0;

  bool contains(const std::string& term) const { return terms.contains(term); }
};

enum class WeightMode { kSelection, kConsistency };

struct WeightPolicy {
  double alpha = 1.5;
  double beta = 2.0;
  WeightMode mode = WeightMode::kSelection;
  KeywordSet global_keywords;
  std::set<std::string> rep_keywords;  // empty in selection mode

  static WeightPolicy selection(KeywordSet keywords, double alpha);
  static WeightPolicy consistency(KeywordSet keywords,
                                  std::set<std::string> rep_keywords,
                                  double alpha, double beta);

  // 1 < alpha, and alpha < beta in consistency mode. Throws
  // std::invalid_argument.
  void validate() const;

  // beta for representative keywords (consistency mode only), alpha for
  // global keywords, 1 otherwise.
  double weight(const std::string& term) const;
};

struct ScoredResponse {
  std::size_t response_id = 0;
  std::map<std::string, double> components;
  double l2_norm = 0.0;
  double score = 0.0;
};

IdfTable compute_idf(const Corpus& corpus);

// The k terms with the largest total occurrence count across the corpus,
// ties broken by lexicographic term order.
KeywordSet top_k_keywords(const Corpus& corpus, std::size_t k);

ScoredResponse weighted_score(const TokenizedResponse& doc,
                              const IdfTable& idf, const WeightPolicy& policy);

// Scores within this relative distance are treated as equal: the same
// mathematical score can come out an ulp apart when its terms are summed in a
// different order.
inline constexpr double kScoreTieTolerance = 1e-12;

// a >= b up to kScoreTieTolerance.
bool score_at_least(double a, double b);

// Lowest index wins among equal maxima.
std::size_t argmax_score(const std::vector<ScoredResponse>& scores);

struct Selection {
  std::size_t rep_id = 0;
  std::vector<ScoredResponse> scores;
};

Selection select_representative(const Corpus& corpus, std::size_t k,
                                double alpha);

// Same as above against a caller-supplied idf table and keyword set.
Selection select_representative(const Corpus& corpus, const IdfTable& idf,
                                const KeywordSet& keywords, double alpha);

}  // namespace kic
