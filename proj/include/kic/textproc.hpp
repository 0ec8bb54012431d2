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

// Response normalization and tokenization. Everything downstream (idf,
// keyword ranking, scoring) works on the term lists produced here.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kic {

enum class TokenPattern {
  // ASCII [A-Za-z0-9]+ runs.
  kAlphanumericRuns,
  // Runs of ASCII letters, digits, '_' and any non-ASCII UTF-8 sequence.
  kUnicodeWord,
};

using TermCounts = std::map<std::string, std::size_t>;

struct NormalizationConfig {
  bool lowercase = true;
  TokenPattern token_pattern = TokenPattern::kAlphanumericRuns;
  std::set<std::string> stopwords;
  // Measured in code points. Must be >= 1.
  std::size_t min_token_len = 2;

  // Throws std::invalid_argument when min_token_len == 0.
  void validate() const;
};

// Lowercase on, alphanumeric runs, the bundled English stopword list,
// min_token_len = 2.
NormalizationConfig default_normalization();

// The stopword list compiled from data/stopwords.txt.
const std::set<std::string>& builtin_stopwords();

// One term per line; blank lines and lines starting with '#' are skipped.
// Surrounding whitespace is trimmed.
std::set<std::string> parse_stopwords(std::istream& in);
std::set<std::string> load_stopwords(const std::filesystem::path& path);

struct TokenizedResponse {
  std::size_t response_id = 0;
  std::string raw_text;
  std::vector<std::string> terms;
  TermCounts term_counts;
};

TokenizedResponse normalize_and_tokenize(std::string_view text,
                                         const NormalizationConfig& config,
                                         std::size_t response_id = 0);

// Raw occurrence counts (no length normalization).
TermCounts term_frequencies(const TokenizedResponse& doc);

}  // namespace kic
