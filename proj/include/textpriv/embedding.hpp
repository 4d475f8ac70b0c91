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
#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "textpriv/errors.hpp"

namespace textpriv {

// Row identifier into an EmbeddingTable.
struct WordId {
  std::uint32_t index = 0;

  friend constexpr auto operator<=>(WordId, WordId) = default;
};

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

inline bool all_finite(std::span<const double> values) {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace detail

// The embedding function: an ordered vocabulary of unique tokens and a dense
// row-major |W| x d matrix of 64-bit coordinates. Immutable once built.
class EmbeddingTable {
 public:
  // Validates uniqueness, shape and finiteness. Throws ContractError on a
  // malformed argument and EmptyTableError when `words` is empty.
  static EmbeddingTable FromRows(std::vector<std::string> words,
                                 std::vector<double> matrix, std::size_t dim) {
    if (dim == 0) throw ContractError("embedding dimension must be positive");
    if (words.empty()) throw EmptyTableError("embedding table has no rows");
    if (words.size() > UINT32_MAX) {
      throw ContractError("embedding table exceeds 2^32 rows");
    }
    if (matrix.size() != words.size() * dim) {
      throw ContractError("matrix has " + std::to_string(matrix.size()) +
                          " values, expected " +
                          std::to_string(words.size() * dim));
    }
    if (!detail::all_finite(matrix)) {
      throw ContractError("embedding matrix contains non-finite values");
    }
    EmbeddingTable table;
    table.dim_ = dim;
    table.ids_.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      auto [it, inserted] = table.ids_.emplace(
          words[i], WordId{static_cast<std::uint32_t>(i)});
      if (!inserted) throw ContractError("duplicate token '" + words[i] + "'");
    }
    table.words_ = std::move(words);
    table.matrix_ = std::move(matrix);
    return table;
  }

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::span<const double> matrix() const noexcept { return matrix_; }

  bool valid(WordId id) const noexcept { return id.index < words_.size(); }

  const std::string& word(WordId id) const {
    check(id);
    return words_[id.index];
  }

  std::optional<WordId> find(std::string_view token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view token) const { return ids_.contains(token); }

  // phi(w). Throws LookupError for an out-of-range id.
  std::span<const double> vector_of(WordId id) const {
    check(id);
    return row(id.index);
  }

  // Unchecked row access for hot loops.
  std::span<const double> row(std::size_t i) const noexcept {
    return {matrix_.data() + i * dim_, dim_};
  }

 private:
  EmbeddingTable() = default;

  void check(WordId id) const {
    if (!valid(id)) {
      throw LookupError("word id " + std::to_string(id.index) +
                        " out of range for table of " +
                        std::to_string(words_.size()) + " rows");
    }
  }

  std::vector<std::string> words_;
  std::vector<double> matrix_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, WordId, detail::StringHash, std::equal_to<>>
      ids_;
};

// sqrt(sum_i (u_i - v_i)^2). Throws ContractError on a dimension mismatch.
inline double euclidean(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ContractError("euclidean: dimension mismatch (" +
                        std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double diff = u[i] - v[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

struct LoadedEmbeddings {
  EmbeddingTable table;
  // Repeated tokens skipped under the first-occurrence-wins rule.
  std::size_t duplicate_tokens = 0;
};

// Parses the GloVe text layout: `token SP x_1 SP ... SP x_d` per line.
// Blank lines are ignored; a trailing CR is tolerated. Tokens are matched by
// exact byte equality.
inline LoadedEmbeddings load_embeddings(std::istream& in,
                                        std::size_t expected_dim,
                                        std::string_view source = {}) {
  const auto fail = [&](std::size_t line_no, const std::string& message) {
    return ParseError(line_no, source.empty()
                                   ? message
                                   : std::string(source) + ": " + message);
  };
  if (expected_dim == 0) {
    throw ContractError("expected embedding dimension must be positive");
  }
  std::vector<std::string> words;
  std::vector<double> matrix;
  std::unordered_map<std::string, std::uint32_t, detail::StringHash,
                     std::equal_to<>>
      seen;
  std::size_t duplicates = 0;
  std::vector<double> row(expected_dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
    if (rest.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::size_t space = rest.find(' ');
    if (space == 0) throw fail(line_no, "line starts with a space");
    const std::string_view token = rest.substr(0, space);
    std::size_t count = 0;
    std::size_t pos = space == std::string_view::npos ? rest.size() : space;
    while (pos < rest.size()) {
      while (pos < rest.size() && rest[pos] == ' ') ++pos;
      if (pos >= rest.size()) break;
      if (count == expected_dim) {
        throw fail(line_no, "dimension mismatch: more than " +
                                      std::to_string(expected_dim) +
                                      " values");
      }
      const char* first = rest.data() + pos;
      const char* last = rest.data() + rest.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || (ptr != last && *ptr != ' ') ||
          !std::isfinite(value)) {
        const char* end = std::find(first, last, ' ');
        throw fail(line_no, "unparseable value '" +
                                      std::string(first, end) + "'");
      }
      row[count++] = value;
      pos = static_cast<std::size_t>(ptr - rest.data());
    }
    if (count != expected_dim) {
      throw fail(line_no, "dimension mismatch: got " +
                                    std::to_string(count) + " values, expected " +
                                    std::to_string(expected_dim));
    }
    if (seen.contains(token)) {
      ++duplicates;
      continue;
    }
    seen.emplace(std::string(token), static_cast<std::uint32_t>(words.size()));
    words.emplace_back(token);
    matrix.insert(matrix.end(), row.begin(), row.end());
  }
  if (in.bad()) throw IoError("read failure after line " + std::to_string(line_no));
  if (words.empty()) throw EmptyTableError("no embedding rows in input");
  return {EmbeddingTable::FromRows(std::move(words), std::move(matrix),
                                   expected_dim),
          duplicates};
}

inline LoadedEmbeddings load_embeddings_file(const std::filesystem::path& path,
                                             std::size_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_embeddings(in, expected_dim, path.string());
}

// Number of values on the first non-blank line of a GloVe text file.
inline std::size_t detect_dimension(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t fields = 0;
    bool in_field = false;
    for (char c : line) {
      if (c == ' ') {
        in_field = false;
      } else if (!in_field) {
        in_field = true;
        ++fields;
      }
    }
    if (fields < 2) throw ParseError(1, "first line carries no vector values");
    return fields - 1;
  }
  throw EmptyTableError("no embedding rows in " + path.string());
}

// Writes the GloVe text layout using the shortest representation that parses
// back to the identical double.
inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i];
    for (double x : table.row(i)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out << ' ';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

// Binary cache: "TPEMB001", u64 rows, u64 dim, then per row a u32 token
// length and the token bytes, then rows*dim IEEE-754 doubles. All integers and
// doubles little-endian (host order on supported platforms).
inline constexpr char kBinaryMagic[8] = {'T', 'P', 'E', 'M', 'B', '0', '0', '1'};

inline void write_binary_cache(std::ostream& out, const EmbeddingTable& table) {
  static_assert(std::endian::native == std::endian::little);
  const std::uint64_t rows = table.size();
  const std::uint64_t dim = table.dim();
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  for (const auto& w : table.words()) {
    const auto len = static_cast<std::uint32_t>(w.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(w.data(), len);
  }
  const auto values = table.matrix();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw IoError("binary cache write failed");
}

inline EmbeddingTable read_binary_cache(std::istream& in) {
  char magic[sizeof kBinaryMagic];
  std::uint64_t rows = 0;
  std::uint64_t dim = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
    throw ParseError(0, "not a textpriv binary embedding cache");
  }
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  if (!in || rows > UINT32_MAX || dim == 0 || dim > (1u << 20)) {
    throw ParseError(0, "corrupt binary cache header");
  }
  std::vector<std::string> words(rows);
  for (auto& w : words) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1u << 20)) throw ParseError(0, "corrupt token record");
    w.resize(len);
    in.read(w.data(), len);
  }
  std::vector<double> matrix(rows * dim);
  in.read(reinterpret_cast<char*>(matrix.data()),
          static_cast<std::streamsize>(matrix.size() * sizeof(double)));
  if (!in) throw ParseError(0, "truncated binary cache");
  return EmbeddingTable::FromRows(std::move(words), std::move(matrix), dim);
}

// Rows of `table` whose token appears in `keep`, in table order.
inline EmbeddingTable subset(const EmbeddingTable& table,
                             std::span<const std::string> keep) {
  if (keep.empty()) throw ContractError("subset: keep list is empty");
  std::vector<bool> selected(table.size(), false);
  for (const auto& token : keep) {
    if (auto id = table.find(token)) selected[id->index] = true;
  }
  std::vector<std::string> words;
  std::vector<double> matrix;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!selected[i]) continue;
    words.push_back(table.words()[i]);
    const auto r = table.row(i);
    matrix.insert(matrix.end(), r.begin(), r.end());
  }
  if (words.empty()) {
    throw EmptyTableError("subset: no requested word is in the table");
  }
  return EmbeddingTable::FromRows(std::move(words), std::move(matrix),
                                  table.dim());
}

// One token per line; blank lines skipped.
inline std::vector<std::string> read_word_list(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    words.push_back(line);
  }
  return words;
}

}  // namespace textpriv
