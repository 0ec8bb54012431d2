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

#include "kic/textproc.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stopwords_data.hpp"

namespace kic {
namespace {

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool is_token_byte(unsigned char c, TokenPattern pattern) {
  switch (pattern) {
    case TokenPattern::kAlphanumericRuns:
      return is_ascii_alnum(c);
    case TokenPattern::kUnicodeWord:
      return is_ascii_alnum(c) || c == '_' || c >= 0x80;
  }
  return false;
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto begin = s.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(kSpace);
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void NormalizationConfig::validate() const {
  if (min_token_len < 1) {
    throw std::invalid_argument("min_token_len must be >= 1");
  }
}

const std::set<std::string>& builtin_stopwords() {
  static const std::set<std::string> words = [] {
    std::istringstream in{std::string(detail::kBuiltinStopwords)};
    return parse_stopwords(in);
  }();
  return words;
}

NormalizationConfig default_normalization() {
  NormalizationConfig config;
  config.stopwords = builtin_stopwords();
  return config;
}

std::set<std::string> parse_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto term = trim(line);
    if (term.empty() || term.front() == '#') continue;
    words.emplace(term);
  }
  return words;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open stopword file: " + path.string());
  }
  return parse_stopwords(in);
}

TokenizedResponse normalize_and_tokenize(std::string_view text,
                                         const NormalizationConfig& config,
                                         std::size_t response_id) {
  config.validate();
  TokenizedResponse out;
  out.response_id = response_id;
  out.raw_text = std::string(text);

  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_token_byte(static_cast<unsigned char>(text[i]),
                       config.token_pattern)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() &&
           is_token_byte(static_cast<unsigned char>(text[j]),
                         config.token_pattern)) {
      ++j;
    }
    std::string token(text.substr(i, j - i));
    i = j;

    if (config.lowercase) {
      for (char& c : token) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
    }
    if (code_points(token) < config.min_token_len) continue;
    if (config.stopwords.contains(token)) continue;

    ++out.term_counts[token];
    out.terms.push_back(std::move(token));
  }
  return out;
}

TermCounts term_frequencies(const TokenizedResponse& doc) {
  TermCounts counts;
  for (const auto& term : doc.terms) ++counts[term];
  return counts;
}

}  // namespace kic
