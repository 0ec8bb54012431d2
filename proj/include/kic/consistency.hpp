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

// Consistency evaluation anchored on the representative response: every
// response is re-scored with the representative's keywords boosted to beta,
// and N_sim counts the responses whose score reaches the representative's
// own score S*.

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kic/scoring.hpp"

namespace kic {

// Which terms of the representative get the beta weight.
enum class RepKeywordRule {
  kAllTerms,            // every distinct term of the representative
  kTopTfidf,            // its top_m terms by tf * idf (ties lexicographic)
  kGlobalIntersection,  // its terms that are also global top-k keywords
};

struct RepKeywordOptions {
  RepKeywordRule rule = RepKeywordRule::kAllTerms;
  std::size_t top_m = 5;
};

struct ConsistencyResult {
  std::size_t rep_id = 0;
  double s_star = 0.0;
  std::vector<std::pair<std::size_t, double>> per_response_scores;
  std::size_t n_sim = 0;
};

std::set<std::string> representative_keywords(const TokenizedResponse& rep);

std::set<std::string> representative_keywords(const TokenizedResponse& rep,
                                              const IdfTable& idf,
                                              const KeywordSet& global,
                                              const RepKeywordOptions& options);

ConsistencyResult evaluate_consistency(const Corpus& corpus, std::size_t rep_id,
                                       std::size_t k, double alpha, double beta,
                                       const RepKeywordOptions& options = {});

// Variant reusing an idf table and keyword set computed for the same corpus.
ConsistencyResult evaluate_consistency(const Corpus& corpus, std::size_t rep_id,
                                       const IdfTable& idf,
                                       const KeywordSet& keywords, double alpha,
                                       double beta,
                                       const RepKeywordOptions& options = {});

}  // namespace kic
