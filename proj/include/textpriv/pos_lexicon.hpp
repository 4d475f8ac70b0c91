// Copyright 2026 The textpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "textpriv/embedding.hpp"
#include "textpriv/errors.hpp"
#include "textpriv/knn_index.hpp"

namespace textpriv {

// The eleven universal grammatical categories plus UNKNOWN for words the
// lexicon does not cover. UNKNOWN never matches anything, itself included.
enum class PosTag : std::uint8_t {
  kPronoun,
  kNoun,
  kVerb,
  kAdjective,
  kAdverb,
  kAdposition,
  kNumeral,
  kConjunction,
  kParticle,
  kDeterminer,
  kPunctuation,
  kUnknown,
};

inline constexpr std::size_t kNumCategories = 11;
inline constexpr std::size_t kNumTags = kNumCategories + 1;

inline constexpr std::array<PosTag, kNumCategories> kCategories = {
    PosTag::kPronoun,     PosTag::kNoun,       PosTag::kVerb,
    PosTag::kAdjective,   PosTag::kAdverb,     PosTag::kAdposition,
    PosTag::kNumeral,     PosTag::kConjunction, PosTag::kParticle,
    PosTag::kDeterminer,  PosTag::kPunctuation};

constexpr std::size_t index_of(PosTag tag) {
  return static_cast<std::size_t>(tag);
}

constexpr bool tags_match(PosTag a, PosTag b) {
  return a == b && a != PosTag::kUnknown;
}

inline constexpr std::string_view tag_name(PosTag tag) {
  constexpr std::array<std::string_view, kNumTags> kNames = {
      "PRONOUN",     "NOUN",        "VERB",     "ADJECTIVE",
      "ADVERB",      "ADPOSITION",  "NUMERAL",  "CONJUNCTION",
      "PARTICLE",    "DETERMINER",  "PUNCTUATION", "UNKNOWN"};
  return kNames[index_of(tag)];
}

// Accepts the category names above and the short universal-tagset spellings
// (PRON, ADJ, ADV, ADP, NUM, CONJ, PRT, DET, PUNCT, "."), case-insensitively.
// UNKNOWN is not a valid input tag.
inline std::optional<PosTag> parse_tag(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  static const std::unordered_map<std::string, PosTag> kByName = {
      {"PRONOUN", PosTag::kPronoun},         {"PRON", PosTag::kPronoun},
      {"NOUN", PosTag::kNoun},               {"VERB", PosTag::kVerb},
      {"ADJECTIVE", PosTag::kAdjective},     {"ADJ", PosTag::kAdjective},
      {"ADVERB", PosTag::kAdverb},           {"ADV", PosTag::kAdverb},
      {"ADPOSITION", PosTag::kAdposition},   {"ADP", PosTag::kAdposition},
      {"NUMERAL", PosTag::kNumeral},         {"NUM", PosTag::kNumeral},
      {"CONJUNCTION", PosTag::kConjunction}, {"CONJ", PosTag::kConjunction},
      {"PARTICLE", PosTag::kParticle},       {"PRT", PosTag::kParticle},
      {"DETERMINER", PosTag::kDeterminer},   {"DET", PosTag::kDeterminer},
      {"PUNCTUATION", PosTag::kPunctuation}, {"PUNCT", PosTag::kPunctuation},
      {".", PosTag::kPunctuation},
  };
  auto it = kByName.find(upper);
  if (it == kByName.end()) return std::nullopt;
  return it->second;
}

// Context-free word -> category dictionary. One tag per word.
class PosLexicon {
 public:
  PosLexicon() = default;

  // Returns false (and keeps the existing entry) when `word` is present.
  bool insert(std::string word, PosTag tag) {
    if (tag == PosTag::kUnknown) {
      throw ContractError("lexicon entries must carry one of the 11 categories");
    }
    return entries_.emplace(std::move(word), tag).second;
  }

  // Total: absent words are UNKNOWN.
  PosTag tag_of(std::string_view word) const noexcept {
    auto it = entries_.find(word);
    return it == entries_.end() ? PosTag::kUnknown : it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, PosTag, detail::StringHash, std::equal_to<>>
      entries_;
};

struct LoadedLexicon {
  PosLexicon lexicon;
  std::size_t duplicate_tokens = 0;
};

// `token<TAB>tag` per line; blank lines ignored; first occurrence wins.
inline LoadedLexicon load_lexicon(std::istream& in,
                                  std::string_view source = {}) {
  LoadedLexicon out;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& message) {
    return ParseError(line_no, source.empty()
                                   ? message
                                   : std::string(source) + ": " + message);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw fail("expected 'token<TAB>tag'");
    }
    const std::string_view name = std::string_view(line).substr(tab + 1);
    const auto tag = parse_tag(name);
    if (!tag) throw fail("unknown tag '" + std::string(name) + "'");
    if (!out.lexicon.insert(line.substr(0, tab), *tag)) ++out.duplicate_tokens;
  }
  if (in.bad()) throw IoError("read failure after line " + std::to_string(line_no));
  return out;
}

inline LoadedLexicon load_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_lexicon(in, path.string());
}

// Counts per tag (11 categories then UNKNOWN) over the table's words; the
// counts sum to |W|.
using CategoryCensus = std::array<std::size_t, kNumTags>;

inline CategoryCensus category_census(const PosLexicon& lexicon,
                                      const EmbeddingTable& vocab) {
  CategoryCensus counts{};
  for (const auto& w : vocab.words()) ++counts[index_of(lexicon.tag_of(w))];
  return counts;
}

// Tags of every table row, in row order.
inline std::vector<PosTag> tag_rows(const PosLexicon& lexicon,
                                    const EmbeddingTable& vocab) {
  std::vector<PosTag> tags;
  tags.reserve(vocab.size());
  for (const auto& w : vocab.words()) tags.push_back(lexicon.tag_of(w));
  return tags;
}

struct NeighborhoodEstimate {
  // ceil(mean_rank).
  std::size_t k = 0;
  double mean_rank = 0.0;
  std::size_t evaluated_words = 0;
  std::size_t unknown_tag_words = 0;
  std::size_t no_match_words = 0;
  // Per row: 1-based rank of the nearest same-tag neighbour, self excluded.
  std::vector<std::optional<std::uint32_t>> ranks;
};

// For each word, walks its neighbours in (distance, id) order, skipping the
// word itself, and records the position of the first one sharing its tag.
// Words tagged UNKNOWN or without any other same-tag word are excluded and
// counted separately. Throws EstimationError when no word qualifies.
inline NeighborhoodEstimate estimate_required_k(const EmbeddingTable& vocab,
                                                const PosLexicon& lexicon) {
  if (vocab.size() < 2) {
    throw ContractError("estimate_required_k needs at least two words");
  }
  const std::size_t rows = vocab.size();
  const std::size_t dim = vocab.dim();
  const auto tags = tag_rows(lexicon, vocab);
  CategoryCensus census{};
  for (PosTag t : tags) ++census[index_of(t)];

  NeighborhoodEstimate est;
  est.ranks.assign(rows, std::nullopt);
  const NearestNeighborIndex index(vocab);
  const std::size_t block = std::max<std::size_t>(1, (std::size_t{1} << 22) / rows);
  Eigen::MatrixXd approx;
  double rank_sum = 0.0;

  for (std::size_t begin = 0; begin < rows; begin += block) {
    const std::size_t count = std::min(block, rows - begin);
    index.squared_distance_estimates(
        vocab.matrix().subspan(begin * dim, count * dim), approx);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t w = begin + j;
      const PosTag tag = tags[w];
      if (tag == PosTag::kUnknown) {
        ++est.unknown_tag_words;
        continue;
      }
      if (census[index_of(tag)] < 2) {
        ++est.no_match_words;
        continue;
      }
      const auto col = approx.col(static_cast<Eigen::Index>(j));
      const auto query = vocab.row(w);
      double q_norm = 0.0;
      for (double v : query) q_norm += v * v;
      const double slack = 3.0 * index.estimate_error_bound(q_norm);

      double min_same = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < rows; ++u) {
        if (u != w && tags[u] == tag) {
          min_same = std::min(min_same, col[static_cast<Eigen::Index>(u)]);
        }
      }
      Candidate match{WordId{0}, std::numeric_limits<double>::infinity()};
      bool found = false;
      for (std::size_t u = 0; u < rows; ++u) {
        if (u == w || tags[u] != tag) continue;
        if (col[static_cast<Eigen::Index>(u)] > min_same + slack) continue;
        const Candidate c{WordId{static_cast<std::uint32_t>(u)},
                          euclidean(query, vocab.row(u))};
        if (!found || ranks_before(c, match)) {
          match = c;
          found = true;
        }
      }
      const double match_estimate = col[static_cast<Eigen::Index>(match.id.index)];
      std::uint32_t ahead = 0;
      for (std::size_t u = 0; u < rows; ++u) {
        if (u == w || u == match.id.index) continue;
        const double a = col[static_cast<Eigen::Index>(u)];
        if (a < match_estimate - slack) {
          ++ahead;
        } else if (a <= match_estimate + slack) {
          const Candidate c{WordId{static_cast<std::uint32_t>(u)},
                            euclidean(query, vocab.row(u))};
          if (ranks_before(c, match)) ++ahead;
        }
      }
      est.ranks[w] = ahead + 1;
      rank_sum += ahead + 1;
      ++est.evaluated_words;
    }
  }
  if (est.evaluated_words == 0) {
    throw EstimationError("no word has a neighbour sharing its category");
  }
  est.mean_rank = rank_sum / static_cast<double>(est.evaluated_words);
  est.k = static_cast<std::size_t>(std::ceil(est.mean_rank));
  return est;
}

}  // namespace textpriv
