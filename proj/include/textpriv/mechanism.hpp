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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "textpriv/embedding.hpp"
#include "textpriv/errors.hpp"
#include "textpriv/knn_index.hpp"
#include "textpriv/noise.hpp"
#include "textpriv/parallel.hpp"
#include "textpriv/pos_lexicon.hpp"
#include "textpriv/random.hpp"

namespace textpriv {

enum class Mode { kBaseline, kPosConstrained };

// What to do with tokens that have no embedding.
enum class OovPolicy { kPassThrough, kError };

inline std::string_view mode_name(Mode mode) {
  return mode == Mode::kBaseline ? "baseline" : "pos_constrained";
}

inline std::optional<Mode> parse_mode(std::string_view name) {
  if (name == "baseline") return Mode::kBaseline;
  if (name == "pos_constrained") return Mode::kPosConstrained;
  return std::nullopt;
}

inline std::string_view oov_policy_name(OovPolicy policy) {
  return policy == OovPolicy::kPassThrough ? "pass" : "error";
}

struct MechanismConfig {
  double epsilon = 1.0;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  Mode mode = Mode::kBaseline;
  OovPolicy oov = OovPolicy::kPassThrough;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ContractError("epsilon must be positive and finite");
    }
    if (k == 0) throw ContractError("k must be at least 1");
    if (mode == Mode::kBaseline && k != 1) {
      throw ContractError("baseline mode requires k = 1, got k = " +
                          std::to_string(k));
    }
  }
};

struct SubstitutionRecord {
  std::string original;
  std::string surrogate;
  PosTag original_tag = PosTag::kUnknown;
  PosTag surrogate_tag = PosTag::kUnknown;
  // 0-based position of the surrogate in the candidate pool; empty for
  // out-of-vocabulary pass-through.
  std::optional<std::size_t> candidate_rank;
  bool pos_matched = false;
  bool self_substituted = false;
  bool out_of_vocabulary = false;

  friend bool operator==(const SubstitutionRecord&,
                         const SubstitutionRecord&) = default;
};

// Position in `pool` of the surrogate. Baseline takes the head. The
// constrained rule takes the first entry tagged like the original and falls
// back to the head when there is none or the original is UNKNOWN.
inline std::size_t select_candidate(const RankedCandidates& pool,
                                    PosTag original_tag, Mode mode,
                                    std::span<const PosTag> row_tags) {
  if (pool.empty()) throw ContractError("empty candidate pool");
  if (mode == Mode::kPosConstrained && original_tag != PosTag::kUnknown) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (row_tags[pool[i].id.index] == original_tag) return i;
    }
  }
  return 0;
}

// The word-level mechanism: embed, perturb, retrieve k candidates, select.
// Holds references to an immutable table, index and lexicon; those must
// outlive it. All methods are const and thread-safe.
class Mechanism {
 public:
  Mechanism(const EmbeddingTable& table, const NearestNeighborIndex& index,
            const PosLexicon& lexicon, MechanismConfig config)
      : table_(&table),
        index_(&index),
        lexicon_(&lexicon),
        config_(config),
        row_tags_(tag_rows(lexicon, table)) {
    config_.validate();
    if (&index.table() != &table) {
      throw ContractError("index was built over a different table");
    }
  }

  const MechanismConfig& config() const noexcept { return config_; }
  const EmbeddingTable& table() const noexcept { return *table_; }
  const NearestNeighborIndex& index() const noexcept { return *index_; }
  const PosLexicon& lexicon() const noexcept { return *lexicon_; }
  std::span<const PosTag> row_tags() const noexcept { return row_tags_; }

  SubstitutionRecord privatize_word(std::string_view token,
                                    RngStream& rng) const {
    const auto id = table_->find(token);
    if (!id) {
      if (config_.oov == OovPolicy::kError) {
        throw LookupError("out-of-vocabulary token '" + std::string(token) + "'");
      }
      SubstitutionRecord record;
      record.original = record.surrogate = std::string(token);
      record.original_tag = record.surrogate_tag = lexicon_->tag_of(token);
      record.pos_matched = tags_match(record.original_tag, record.surrogate_tag);
      record.self_substituted = true;
      record.out_of_vocabulary = true;
      return record;
    }
    return privatize_id(*id, rng);
  }

  SubstitutionRecord privatize_id(WordId id, RngStream& rng) const {
    const auto noisy = perturb(table_->vector_of(id), config_.epsilon, rng);
    const auto pool = index_->nearest(noisy, config_.k);
    return make_record(id, pool, select_candidate(pool, row_tags_[id.index],
                                                  config_.mode, row_tags_));
  }

  SubstitutionRecord make_record(WordId original, const RankedCandidates& pool,
                                 std::size_t rank) const {
    const WordId chosen = pool.at(rank).id;
    SubstitutionRecord record;
    record.original = table_->word(original);
    record.surrogate = table_->word(chosen);
    record.original_tag = row_tags_[original.index];
    record.surrogate_tag = row_tags_[chosen.index];
    record.candidate_rank = rank;
    record.pos_matched = tags_match(record.original_tag, record.surrogate_tag);
    record.self_substituted = chosen == original;
    return record;
  }

  // Token i draws from stream (sequence_index, i), so every token gets its
  // own noise and the result does not depend on how sequences are scheduled.
  std::vector<SubstitutionRecord> privatize_sequence(
      std::span<const std::string> tokens, std::uint64_t sequence_index) const {
    std::vector<SubstitutionRecord> records;
    records.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      RngStream rng(config_.seed, position_stream_id(sequence_index, i));
      records.push_back(privatize_word(tokens[i], rng));
    }
    return records;
  }

 private:
  const EmbeddingTable* table_;
  const NearestNeighborIndex* index_;
  const PosLexicon* lexicon_;
  MechanismConfig config_;
  std::vector<PosTag> row_tags_;
};

inline nlohmann::json to_json(const MechanismConfig& config) {
  return {{"epsilon", config.epsilon},
          {"k", config.k},
          {"seed", config.seed},
          {"mode", mode_name(config.mode)},
          {"oov", oov_policy_name(config.oov)}};
}

inline nlohmann::json to_json(const SubstitutionRecord& r) {
  nlohmann::json j = {{"original", r.original},
                      {"surrogate", r.surrogate},
                      {"original_tag", tag_name(r.original_tag)},
                      {"surrogate_tag", tag_name(r.surrogate_tag)},
                      {"candidate_rank", nullptr},
                      {"pos_matched", r.pos_matched},
                      {"self_substituted", r.self_substituted},
                      {"out_of_vocabulary", r.out_of_vocabulary}};
  if (r.candidate_rank) j["candidate_rank"] = *r.candidate_rank;
  return j;
}

// Whitespace-separated tokens of one document line.
inline std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
           c == '\f';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::size_t oov_tokens = 0;
  std::size_t self_substitutions = 0;  // in-vocabulary tokens only
  std::size_t pos_matched = 0;         // in-vocabulary tokens only

  std::size_t privatized_tokens() const { return tokens - oov_tokens; }

  double self_substitution_rate() const {
    const std::size_t n = privatized_tokens();
    return n == 0 ? 0.0 : static_cast<double>(self_substitutions) / n;
  }
};

inline nlohmann::json to_json(const CorpusStats& s) {
  return {{"documents", s.documents},
          {"tokens", s.tokens},
          {"oov_tokens", s.oov_tokens},
          {"privatized_tokens", s.privatized_tokens()},
          {"self_substitutions", s.self_substitutions},
          {"self_substitution_rate", s.self_substitution_rate()},
          {"pos_matched", s.pos_matched}};
}

// Reads one document per line from `in` and writes one JSON object per
// document to `out`, followed by a {"metadata": ...} line carrying the
// configuration, the statistics and any fields of `extra_metadata`.
// Document d draws its noise from streams (d, token index). Documents are
// processed in batches across `jobs` workers; output order is input order.
inline CorpusStats privatize_corpus(std::istream& in, std::ostream& out,
                                   const Mechanism& mechanism,
                                   std::size_t jobs = 1,
                                   const nlohmann::json& extra_metadata = {}) {
  constexpr std::size_t kBatch = 256;
  CorpusStats stats;
  std::vector<std::string> lines;
  std::vector<std::string> rendered;
  bool done = false;
  while (!done) {
    lines.clear();
    std::string line;
    while (lines.size() < kBatch && std::getline(in, line)) {
      lines.push_back(std::move(line));
    }
    if (in.bad()) {
      throw IoError("read failure at document " +
                    std::to_string(stats.documents + lines.size()));
    }
    done = lines.size() < kBatch;
    const std::size_t first = stats.documents;
    rendered.assign(lines.size(), {});
    std::vector<CorpusStats> partial(resolve_jobs(jobs));
    parallel_for_ranges(lines.size(), jobs, [&](std::size_t worker,
                                                std::size_t begin,
                                                std::size_t end) {
      CorpusStats& local = partial[worker];
      for (std::size_t i = begin; i < end; ++i) {
        const auto tokens = split_tokens(lines[i]);
        std::vector<SubstitutionRecord> records;
        try {
          records = mechanism.privatize_sequence(tokens, first + i);
        } catch (const LookupError& e) {
          throw LookupError("document " + std::to_string(first + i) + ": " +
                            e.what());
        }
        nlohmann::json doc = {{"tokens", nlohmann::json::array()},
                              {"records", nlohmann::json::array()}};
        for (const auto& r : records) {
          doc["tokens"].push_back(r.surrogate);
          doc["records"].push_back(to_json(r));
          ++local.tokens;
          if (r.out_of_vocabulary) {
            ++local.oov_tokens;
          } else {
            local.self_substitutions += r.self_substituted;
            local.pos_matched += r.pos_matched;
          }
        }
        rendered[i] = doc.dump();
      }
    });
    for (const auto& p : partial) {
      stats.tokens += p.tokens;
      stats.oov_tokens += p.oov_tokens;
      stats.self_substitutions += p.self_substitutions;
      stats.pos_matched += p.pos_matched;
    }
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      out << rendered[i] << '\n';
      if (!out) {
        throw IoError("write failure at document " + std::to_string(first + i));
      }
    }
    stats.documents += lines.size();
  }
  nlohmann::json meta = {{"config", to_json(mechanism.config())},
                         {"stats", to_json(stats)}};
  if (extra_metadata.is_object()) meta.update(extra_metadata);
  out << nlohmann::json{{"metadata", meta}}.dump() << '\n';
  if (!out) throw IoError("write failure at metadata");
  return stats;
}

}  // namespace textpriv
