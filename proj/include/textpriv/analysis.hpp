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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "textpriv/embedding.hpp"
#include "textpriv/errors.hpp"
#include "textpriv/knn_index.hpp"
#include "textpriv/mechanism.hpp"
#include "textpriv/noise.hpp"
#include "textpriv/parallel.hpp"
#include "textpriv/pos_lexicon.hpp"
#include "textpriv/random.hpp"

namespace textpriv {

// Surrogates of every vocabulary word over Q queries, word-major.
struct SweepOutcomes {
  std::size_t words = 0;
  std::size_t queries = 0;
  std::vector<WordId> surrogates;

  std::span<const WordId> of(std::size_t word) const {
    return std::span<const WordId>(surrogates).subspan(word * queries, queries);
  }
};

// Baseline and constrained surrogates computed from the same noisy vectors.
struct PairedOutcomes {
  SweepOutcomes baseline;
  SweepOutcomes constrained;
};

// Calls visit(word, query, pool) for every vocabulary word and query index,
// where pool holds the k nearest rows to the word's noisy vector drawn from
// stream (word, query). The draws are the ones Mechanism::privatize_id makes
// for the same stream. Words are split across `jobs` workers; `visit` runs
// concurrently for distinct words.
template <class Visit>
void sweep_pools(const NearestNeighborIndex& index, double epsilon,
                 std::uint64_t seed, std::size_t k, std::size_t queries,
                 std::size_t jobs, Visit&& visit) {
  if (queries == 0) throw ContractError("queries per word must be at least 1");
  const EmbeddingTable& table = index.table();
  const std::size_t dim = table.dim();
  parallel_for_ranges(table.size(), jobs, [&](std::size_t, std::size_t begin,
                                              std::size_t end) {
    std::vector<double> noisy(queries * dim);
    for (std::size_t w = begin; w < end; ++w) {
      const auto v = table.row(w);
      for (std::size_t q = 0; q < queries; ++q) {
        RngStream rng(seed, position_stream_id(w, q));
        const auto p = perturb(v, epsilon, rng);
        std::copy(p.begin(), p.end(), noisy.begin() + q * dim);
      }
      const auto pools = index.nearest_batch(noisy, k);
      for (std::size_t q = 0; q < queries; ++q) visit(w, q, pools[q]);
    }
  });
}

inline SweepOutcomes sweep(const Mechanism& mechanism, std::size_t queries,
                           std::size_t jobs = 1) {
  const auto& cfg = mechanism.config();
  SweepOutcomes out;
  out.words = mechanism.table().size();
  out.queries = queries;
  out.surrogates.resize(out.words * queries);
  const auto tags = mechanism.row_tags();
  sweep_pools(mechanism.index(), cfg.epsilon, cfg.seed, cfg.k, queries, jobs,
              [&](std::size_t w, std::size_t q, const RankedCandidates& pool) {
                const std::size_t rank =
                    select_candidate(pool, tags[w], cfg.mode, tags);
                out.surrogates[w * queries + q] = pool[rank].id;
              });
  return out;
}

// One pool of size constrained.config().k per (word, query); the baseline
// outcome is its head, which is exactly what a k=1 query on the same stream
// returns.
inline PairedOutcomes paired_sweep(const Mechanism& constrained,
                                   std::size_t queries, std::size_t jobs = 1) {
  const auto& cfg = constrained.config();
  if (cfg.mode != Mode::kPosConstrained) {
    throw ContractError("paired_sweep needs a pos_constrained configuration");
  }
  PairedOutcomes out;
  for (auto* s : {&out.baseline, &out.constrained}) {
    s->words = constrained.table().size();
    s->queries = queries;
    s->surrogates.resize(s->words * queries);
  }
  const auto tags = constrained.row_tags();
  sweep_pools(constrained.index(), cfg.epsilon, cfg.seed, cfg.k, queries, jobs,
              [&](std::size_t w, std::size_t q, const RankedCandidates& pool) {
                const std::size_t rank =
                    select_candidate(pool, tags[w], cfg.mode, tags);
                out.baseline.surrogates[w * queries + q] = pool.front().id;
                out.constrained.surrogates[w * queries + q] = pool[rank].id;
              });
  return out;
}

// ---------------------------------------------------------------------------
// Plausible deniability

struct DeniabilityReport {
  std::size_t queries = 0;
  // Per vocabulary row: how often the word came back as itself, and how many
  // distinct surrogates it received.
  std::vector<std::uint32_t> self_counts;
  std::vector<std::uint32_t> distinct_counts;
  double mean_self = 0.0;
  double mean_distinct = 0.0;
  // Bin i counts words with value i, i in [0, Q].
  std::vector<std::size_t> self_histogram;
  std::vector<std::size_t> distinct_histogram;
};

inline DeniabilityReport deniability_report(const SweepOutcomes& outcomes) {
  DeniabilityReport r;
  r.queries = outcomes.queries;
  r.self_counts.resize(outcomes.words);
  r.distinct_counts.resize(outcomes.words);
  r.self_histogram.assign(outcomes.queries + 1, 0);
  r.distinct_histogram.assign(outcomes.queries + 1, 0);
  std::vector<WordId> scratch;
  double self_sum = 0.0;
  double distinct_sum = 0.0;
  for (std::size_t w = 0; w < outcomes.words; ++w) {
    const auto row = outcomes.of(w);
    const auto self = static_cast<std::uint32_t>(
        std::count(row.begin(), row.end(), WordId{static_cast<std::uint32_t>(w)}));
    scratch.assign(row.begin(), row.end());
    std::sort(scratch.begin(), scratch.end());
    const auto distinct = static_cast<std::uint32_t>(
        std::unique(scratch.begin(), scratch.end()) - scratch.begin());
    r.self_counts[w] = self;
    r.distinct_counts[w] = distinct;
    ++r.self_histogram[self];
    ++r.distinct_histogram[distinct];
    self_sum += self;
    distinct_sum += distinct;
  }
  if (outcomes.words > 0) {
    r.mean_self = self_sum / static_cast<double>(outcomes.words);
    r.mean_distinct = distinct_sum / static_cast<double>(outcomes.words);
  }
  return r;
}

inline DeniabilityReport deniability_stats(const Mechanism& mechanism,
                                           std::size_t queries,
                                           std::size_t jobs = 1) {
  return deniability_report(sweep(mechanism, queries, jobs));
}

// ---------------------------------------------------------------------------
// Grammatical-category confusion

struct PosConfusionMatrix {
  // counts[original][surrogate] over the 11 categories.
  std::array<std::array<std::uint64_t, kNumCategories>, kNumCategories> counts{};
  // Queries of tagged words whose surrogate is UNKNOWN; they count towards
  // the total but fall outside the 11x11 grid.
  std::uint64_t unknown_surrogates = 0;
  // Vocabulary words tagged UNKNOWN; none of their queries are counted.
  std::size_t excluded_words = 0;
  std::size_t queries = 0;

  std::uint64_t total() const {
    std::uint64_t sum = unknown_surrogates;
    for (const auto& row : counts) {
      for (auto c : row) sum += c;
    }
    return sum;
  }

  std::uint64_t trace() const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < kNumCategories; ++i) sum += counts[i][i];
    return sum;
  }
};

inline PosConfusionMatrix pos_confusion(const SweepOutcomes& outcomes,
                                        std::span<const PosTag> row_tags) {
  if (row_tags.size() != outcomes.words) {
    throw ContractError("tag list does not match the swept vocabulary");
  }
  PosConfusionMatrix m;
  m.queries = outcomes.queries;
  for (std::size_t w = 0; w < outcomes.words; ++w) {
    const PosTag from = row_tags[w];
    if (from == PosTag::kUnknown) {
      ++m.excluded_words;
      continue;
    }
    for (WordId s : outcomes.of(w)) {
      const PosTag to = row_tags[s.index];
      if (to == PosTag::kUnknown) {
        ++m.unknown_surrogates;
      } else {
        ++m.counts[index_of(from)][index_of(to)];
      }
    }
  }
  return m;
}

inline PosConfusionMatrix pos_confusion(const Mechanism& mechanism,
                                        std::size_t queries,
                                        std::size_t jobs = 1) {
  return pos_confusion(sweep(mechanism, queries, jobs), mechanism.row_tags());
}

// Diagonal mass over all counted queries.
inline double preservation_rate(const PosConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw ContractError("confusion matrix is empty");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Substitution distances

struct DistanceSample {
  WordId word;
  double baseline = 0.0;
  double constrained = 0.0;
};

struct DistanceReport {
  // Only queries where both rules substituted and chose different words.
  std::vector<DistanceSample> samples;
  double mean_baseline = 0.0;
  double mean_constrained = 0.0;
  double bin_width = 0.0;
  // Bin i covers [i * bin_width, (i + 1) * bin_width).
  std::vector<std::size_t> baseline_histogram;
  std::vector<std::size_t> constrained_histogram;
};

inline DistanceReport distance_report(const PairedOutcomes& outcomes,
                                      const EmbeddingTable& table,
                                      double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw ContractError("histogram bin width must be positive");
  }
  DistanceReport r;
  r.bin_width = bin_width;
  const std::size_t queries = outcomes.baseline.queries;
  for (std::size_t w = 0; w < outcomes.baseline.words; ++w) {
    const WordId self{static_cast<std::uint32_t>(w)};
    const auto base = outcomes.baseline.of(w);
    const auto cons = outcomes.constrained.of(w);
    for (std::size_t q = 0; q < queries; ++q) {
      if (base[q] == self || cons[q] == self || base[q] == cons[q]) continue;
      r.samples.push_back({self, euclidean(table.row(w), table.row(base[q].index)),
                           euclidean(table.row(w), table.row(cons[q].index))});
    }
  }
  if (r.samples.empty()) return r;
  double max_distance = 0.0;
  for (const auto& s : r.samples) {
    r.mean_baseline += s.baseline;
    r.mean_constrained += s.constrained;
    max_distance = std::max({max_distance, s.baseline, s.constrained});
  }
  r.mean_baseline /= static_cast<double>(r.samples.size());
  r.mean_constrained /= static_cast<double>(r.samples.size());
  const auto bins = static_cast<std::size_t>(max_distance / bin_width) + 1;
  r.baseline_histogram.assign(bins, 0);
  r.constrained_histogram.assign(bins, 0);
  for (const auto& s : r.samples) {
    ++r.baseline_histogram[static_cast<std::size_t>(s.baseline / bin_width)];
    ++r.constrained_histogram[static_cast<std::size_t>(s.constrained / bin_width)];
  }
  return r;
}

// Both configurations must share epsilon and seed; the baseline uses k = 1
// and the constrained one k > 1. Each query feeds one noisy vector to both
// selection rules.
inline DistanceReport distance_distribution(const MechanismConfig& baseline,
                                            const MechanismConfig& constrained,
                                            const NearestNeighborIndex& index,
                                            const PosLexicon& lexicon,
                                            std::size_t queries,
                                            std::size_t jobs = 1,
                                            double bin_width = 0.25) {
  baseline.validate();
  constrained.validate();
  if (baseline.mode != Mode::kBaseline || baseline.k != 1) {
    throw ContractError("distance_distribution: first config must be baseline, k = 1");
  }
  if (constrained.mode != Mode::kPosConstrained || constrained.k < 2) {
    throw ContractError(
        "distance_distribution: second config must be pos_constrained, k > 1");
  }
  if (baseline.epsilon != constrained.epsilon || baseline.seed != constrained.seed) {
    throw ContractError("distance_distribution: configs must share epsilon and seed");
  }
  const Mechanism mechanism(index.table(), index, lexicon, constrained);
  return distance_report(paired_sweep(mechanism, queries, jobs), index.table(),
                         bin_width);
}

// ---------------------------------------------------------------------------
// Budget calibration

inline constexpr double kCalibrationStep = 0.25;
inline constexpr std::size_t kCalibrationSteps = 200;  // grid up to 50

struct CalibrationResult {
  double epsilon = 0.0;
  // Fraction of words with self-count <= Q/2 at `epsilon`.
  double deniable_fraction = 0.0;
  std::size_t evaluations = 0;
};

// Fraction of words whose self-substitution count is at most Q/2.
inline double deniable_fraction(const DeniabilityReport& report) {
  if (report.self_counts.empty()) return 0.0;
  std::size_t ok = 0;
  for (auto n : report.self_counts) ok += 2 * static_cast<std::size_t>(n) <= report.queries;
  return static_cast<double>(ok) / static_cast<double>(report.self_counts.size());
}

// Largest epsilon on the grid 0.25, 0.5, ..., 50 at which at least
// `quantile` of the vocabulary is deniable, located by bisection. `base`
// supplies k, seed and mode; its epsilon is ignored. Throws CalibrationError
// carrying the fraction reached at 0.25 when even that fails.
inline CalibrationResult calibrate_epsilon(const NearestNeighborIndex& index,
                                           const PosLexicon& lexicon,
                                           MechanismConfig base,
                                           double quantile, std::size_t queries,
                                           std::size_t jobs = 1) {
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw ContractError("quantile must lie in (0, 1)");
  }
  CalibrationResult result;
  const auto fraction_at = [&](std::size_t step) {
    base.epsilon = kCalibrationStep * static_cast<double>(step);
    const Mechanism mechanism(index.table(), index, lexicon, base);
    ++result.evaluations;
    return deniable_fraction(deniability_stats(mechanism, queries, jobs));
  };
  std::size_t lo = 1;
  double lo_fraction = fraction_at(lo);
  if (lo_fraction < quantile) {
    throw CalibrationError("no epsilon in (0, 50] makes " +
                               std::to_string(quantile) +
                               " of the vocabulary deniable",
                           lo_fraction);
  }
  std::size_t hi = kCalibrationSteps;
  const double hi_fraction = fraction_at(hi);
  if (hi_fraction >= quantile) {
    lo = hi;
    lo_fraction = hi_fraction;
  } else {
    // Invariant: lo passes, hi fails.
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      const double f = fraction_at(mid);
      if (f >= quantile) {
        lo = mid;
        lo_fraction = f;
      } else {
        hi = mid;
      }
    }
  }
  result.epsilon = kCalibrationStep * static_cast<double>(lo);
  result.deniable_fraction = lo_fraction;
  return result;
}

// ---------------------------------------------------------------------------
// Serialisation

inline nlohmann::json to_json(const DeniabilityReport& r) {
  return {{"queries", r.queries},
          {"words", r.self_counts.size()},
          {"mean_self_substitutions", r.mean_self},
          {"mean_distinct_substitutions", r.mean_distinct},
          {"deniable_fraction", deniable_fraction(r)},
          {"self_substitution_histogram", r.self_histogram},
          {"distinct_substitution_histogram", r.distinct_histogram}};
}

namespace detail {

inline void write_csv_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace detail

// word,self_substitutions,distinct_substitutions
inline void write_deniability_csv(std::ostream& out, const DeniabilityReport& r,
                                  const EmbeddingTable& table) {
  out << "word,self_substitutions,distinct_substitutions\n";
  for (std::size_t w = 0; w < r.self_counts.size(); ++w) {
    detail::write_csv_field(out, table.words()[w]);
    out << ',' << r.self_counts[w] << ',' << r.distinct_counts[w] << '\n';
  }
}

inline nlohmann::json to_json(const PosConfusionMatrix& m) {
  nlohmann::json labels = nlohmann::json::array();
  for (PosTag t : kCategories) labels.push_back(tag_name(t));
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.counts) rows.push_back(row);
  nlohmann::json j = {{"labels", labels},
                      {"matrix", rows},
                      {"queries", m.queries},
                      {"total", m.total()},
                      {"unknown_surrogates", m.unknown_surrogates},
                      {"excluded_words", m.excluded_words},
                      {"preservation", nullptr}};
  if (m.total() > 0) j["preservation"] = preservation_rate(m);
  return j;
}

inline nlohmann::json to_json(const DistanceReport& r) {
  return {{"samples", r.samples.size()},
          {"mean_baseline", r.mean_baseline},
          {"mean_constrained", r.mean_constrained},
          {"bin_width", r.bin_width},
          {"baseline_histogram", r.baseline_histogram},
          {"constrained_histogram", r.constrained_histogram}};
}

inline void write_distance_csv(std::ostream& out, const DistanceReport& r,
                               const EmbeddingTable& table) {
  out << "word,baseline_distance,constrained_distance\n";
  for (const auto& s : r.samples) {
    detail::write_csv_field(out, table.word(s.word));
    out << ',' << s.baseline << ',' << s.constrained
        << '\n';
  }
}

inline nlohmann::json to_json(const CalibrationResult& r) {
  return {{"epsilon", r.epsilon},
          {"deniable_fraction", r.deniable_fraction},
          {"evaluations", r.evaluations}};
}

inline nlohmann::json to_json(const NeighborhoodEstimate& e) {
  return {{"k", e.k},
          {"mean_rank", e.mean_rank},
          {"evaluated_words", e.evaluated_words},
          {"unknown_tag_words", e.unknown_tag_words},
          {"no_match_words", e.no_match_words}};
}

}  // namespace textpriv
