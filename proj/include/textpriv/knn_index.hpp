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
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "textpriv/embedding.hpp"
#include "textpriv/errors.hpp"

namespace textpriv {

struct Candidate {
  WordId id;
  double distance = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Ascending by distance, ties broken by ascending WordId.
using RankedCandidates = std::vector<Candidate>;

inline bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

// Reference exhaustive scan: euclidean() against every row, then a partial
// sort under the (distance, id) order.
inline RankedCandidates scan_nearest(const EmbeddingTable& table,
                                     std::span<const double> query,
                                     std::size_t k) {
  if (k == 0) throw ContractError("nearest: k must be at least 1");
  if (query.size() != table.dim()) {
    throw ContractError("nearest: query has dimension " +
                        std::to_string(query.size()) + ", table has " +
                        std::to_string(table.dim()));
  }
  RankedCandidates all(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    all[i] = {WordId{static_cast<std::uint32_t>(i)},
              euclidean(query, table.row(i))};
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + take, all.end(), ranks_before);
  all.resize(take);
  return all;
}

// Exact k-nearest-neighbour search over the rows of an EmbeddingTable.
//
// Squared distances are first estimated for a block of queries with one
// matrix product, |q|^2 + |x|^2 - 2 q.x. Every row whose estimate lies within
// a rounding bound of the k-th smallest estimate is then rescored with
// euclidean() and ordered by (distance, id). The bound covers the worst-case
// floating-point error of both computations, so the result always equals
// scan_nearest().
//
// The index references the table; the table must outlive it. Queries are
// const and safe to run concurrently.
class NearestNeighborIndex {
 public:
  explicit NearestNeighborIndex(const EmbeddingTable& table)
      : table_(&table), sq_norms_(table.size()) {
    for (std::size_t i = 0; i < table.size(); ++i) {
      double s = 0.0;
      for (double x : table.row(i)) s += x * x;
      sq_norms_[i] = s;
      max_sq_norm_ = std::max(max_sq_norm_, s);
    }
  }

  const EmbeddingTable& table() const noexcept { return *table_; }

  RankedCandidates nearest(std::span<const double> query, std::size_t k) const {
    if (query.size() != table_->dim()) {
      throw ContractError("nearest: query has dimension " +
                          std::to_string(query.size()) + ", table has " +
                          std::to_string(table_->dim()));
    }
    auto result = nearest_batch(query, k);
    return std::move(result.front());
  }

  // `queries` holds n row-major query vectors of the table's dimension.
  std::vector<RankedCandidates> nearest_batch(std::span<const double> queries,
                                              std::size_t k) const {
    const std::size_t dim = table_->dim();
    if (k == 0) throw ContractError("nearest: k must be at least 1");
    if (queries.empty() || queries.size() % dim != 0) {
      throw ContractError("nearest: query buffer of " +
                          std::to_string(queries.size()) +
                          " values is not a multiple of dimension " +
                          std::to_string(dim));
    }
    const std::size_t n = queries.size() / dim;
    std::vector<RankedCandidates> results(n);
    Eigen::MatrixXd approx;
    Scratch scratch;
    for (std::size_t begin = 0; begin < n; begin += block_rows()) {
      const std::size_t count = std::min(block_rows(), n - begin);
      const auto block = queries.subspan(begin * dim, count * dim);
      squared_distance_estimates(block, approx);
      for (std::size_t j = 0; j < count; ++j) {
        results[begin + j] = refine(block.subspan(j * dim, dim),
                                    approx.col(static_cast<Eigen::Index>(j)),
                                    k, scratch);
      }
    }
    return results;
  }

  // Fills `out` (|W| x n, column j for query j) with |q|^2 + |x|^2 - 2 q.x.
  void squared_distance_estimates(std::span<const double> queries,
                                  Eigen::MatrixXd& out) const {
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto dim = static_cast<Eigen::Index>(table_->dim());
    const auto rows = static_cast<Eigen::Index>(table_->size());
    const auto n = static_cast<Eigen::Index>(queries.size()) / dim;
    Eigen::Map<const RowMajor> x(table_->matrix().data(), rows, dim);
    Eigen::Map<const RowMajor> q(queries.data(), n, dim);
    Eigen::Map<const Eigen::VectorXd> x_norms(sq_norms_.data(), rows);
    out.resize(rows, n);
    out.noalias() = x * q.transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double q_norm = q.row(j).squaredNorm();
      out.col(j) = (x_norms.array() - 2.0 * out.col(j).array()) + q_norm;
    }
  }

  // Upper bound on |estimate - exact| for any row, given |q|^2.
  double estimate_error_bound(double query_sq_norm) const {
    const double d = static_cast<double>(table_->dim());
    return 4.0 * (4.0 * d + 8.0) * std::numeric_limits<double>::epsilon() *
               (query_sq_norm + max_sq_norm_) +
           std::numeric_limits<double>::min();
  }

 private:
  struct Scratch {
    std::vector<std::pair<double, std::uint32_t>> best;
    RankedCandidates pool;
  };

  std::size_t block_rows() const {
    constexpr std::size_t kBudget = std::size_t{1} << 22;  // doubles
    return std::max<std::size_t>(1, kBudget / std::max<std::size_t>(1, table_->size()));
  }

  template <class Column>
  RankedCandidates refine(std::span<const double> query, const Column& approx,
                          std::size_t k, Scratch& scratch) const {
    const std::size_t rows = table_->size();
    RankedCandidates& pool = scratch.pool;
    pool.clear();
    if (k >= rows) {
      for (std::size_t i = 0; i < rows; ++i) {
        pool.push_back({WordId{static_cast<std::uint32_t>(i)},
                        euclidean(query, table_->row(i))});
      }
    } else {
      // k smallest estimates, kept sorted; the last entry is the k-th.
      auto& best = scratch.best;
      best.clear();
      for (std::size_t i = 0; i < rows; ++i) {
        const double a = approx[static_cast<Eigen::Index>(i)];
        if (best.size() == k && !(a < best.back().first)) continue;
        std::pair<double, std::uint32_t> entry{a, static_cast<std::uint32_t>(i)};
        auto pos = std::upper_bound(best.begin(), best.end(), entry);
        if (best.size() == k) best.pop_back();
        best.insert(pos, entry);
      }
      double q_norm = 0.0;
      for (double v : query) q_norm += v * v;
      const double bound = estimate_error_bound(q_norm);
      const double cutoff = best.back().first + 3.0 * bound;
      for (std::size_t i = 0; i < rows; ++i) {
        if (approx[static_cast<Eigen::Index>(i)] <= cutoff) {
          pool.push_back({WordId{static_cast<std::uint32_t>(i)},
                          euclidean(query, table_->row(i))});
        }
      }
    }
    const std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + take, pool.end(),
                      ranks_before);
    return RankedCandidates(pool.begin(), pool.begin() + take);
  }

  const EmbeddingTable* table_;
  std::vector<double> sq_norms_;
  double max_sq_norm_ = 0.0;
};

}  // namespace textpriv
