// Copyright 2026 The gotalign Authors
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

// Sinkhorn operator S_tau(X): alternating row and column normalization of
// exp(X / tau), carried out in the log domain with row potentials a and
// column potentials b so that S = exp(X / tau + a 1^T + 1 b^T).
//
// The unrolled iterations can be recorded and differentiated in reverse.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "got/error.hpp"
#include "got/graph.hpp"
#include "got/linalg.hpp"

namespace got {

struct SinkhornConfig {
  double tau = 5.0;
  int max_iter = 10;
  double tol = 1e-6;

  void validate() const {
    if (!(tau > 0.0)) fail(ErrorKind::kParameter, "sinkhorn: tau must be positive");
    if (max_iter < 1) fail(ErrorKind::kParameter, "sinkhorn: max_iter must be >= 1");
    if (!(tol > 0.0)) fail(ErrorKind::kParameter, "sinkhorn: tol must be positive");
  }
};

/// Positive matrix with unit row and column sums up to `deviation`.
struct DoublyStochastic {
  Matrix matrix;
  double deviation = 0.0;  // max |row or column sum - 1|
  int iterations = 0;
};

/// Intermediate iterates of one unrolled Sinkhorn pass: `row_steps[k]` is the
/// matrix right after the k-th row normalization, `col_steps[k]` after the
/// k-th column normalization.
struct SinkhornTape {
  std::vector<Matrix> row_steps;
  std::vector<Matrix> col_steps;
  double tau = 1.0;
};

namespace detail {

// Scalar exp/log keep equal inputs equal regardless of SIMD lane.
// Row step (by_cols = false): potential = -logsumexp over each row of
// z + 1 other^T, and `normalized` = exp(z + potential 1^T + 1 other^T).
// Column step: the same with the roles of rows and columns swapped.
inline void normalize_step(const Matrix& z, const Vector& other, bool by_cols, Vector& potential, Matrix& normalized) {
  if (by_cols) {
    normalized = z.colwise() + other;
    const Eigen::RowVectorXd peak = normalized.colwise().maxCoeff();
    normalized.rowwise() -= peak;
    normalized = normalized.unaryExpr([](double v) { return std::exp(v); });
    const Eigen::RowVectorXd sum = normalized.colwise().sum();
    normalized.array().rowwise() /= sum.array();
    potential = -(peak + sum.unaryExpr([](double v) { return std::log(v); })).transpose();
  } else {
    normalized = z.rowwise() + other.transpose();
    const Vector peak = normalized.rowwise().maxCoeff();
    normalized.colwise() -= peak;
    normalized = normalized.unaryExpr([](double v) { return std::exp(v); });
    const Vector sum = normalized.rowwise().sum();
    normalized.array().colwise() /= sum.array();
    potential = -(peak + sum.unaryExpr([](double v) { return std::log(v); }));
  }
}

inline double stochastic_deviation(const Matrix& m) {
  const double rows = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

inline DoublyStochastic run_sinkhorn(const Matrix& x, const SinkhornConfig& cfg, int iterations, bool until_tol,
                                     SinkhornTape* tape) {
  cfg.validate();
  require_square(x, "sinkhorn_operator");
  if (!x.allFinite()) fail(ErrorKind::kParameter, "sinkhorn_operator: non-finite input");
  const Eigen::Index n = x.rows();
  const Matrix z = x / cfg.tau;
  Vector a = Vector::Zero(n), b = Vector::Zero(n);
  Matrix rows_normalized, cols_normalized;
  if (tape) {
    tape->row_steps.clear();
    tape->col_steps.clear();
    tape->tau = cfg.tau;
  }
  DoublyStochastic out;
  for (int k = 0; k < iterations; ++k) {
    normalize_step(z, b, false, a, rows_normalized);
    normalize_step(z, a, true, b, cols_normalized);
    out.iterations = k + 1;
    if (tape) {
      tape->row_steps.push_back(rows_normalized);
      tape->col_steps.push_back(cols_normalized);
    }
    if (until_tol && stochastic_deviation(cols_normalized) <= cfg.tol) break;
  }
  out.matrix = std::move(cols_normalized);
  out.deviation = stochastic_deviation(out.matrix);
  return out;
}

}  // namespace detail

/// Applies exactly cfg.max_iter row/column normalization rounds.
inline DoublyStochastic sinkhorn_operator(const Matrix& x, const SinkhornConfig& cfg = {}) {
  return detail::run_sinkhorn(x, cfg, cfg.max_iter, false, nullptr);
}

/// Iterates until the row/column-sum deviation drops below cfg.tol or
/// `iteration_cap` rounds have run.
inline DoublyStochastic sinkhorn_converged(const Matrix& x, const SinkhornConfig& cfg = {}, int iteration_cap = 100000) {
  return detail::run_sinkhorn(x, cfg, iteration_cap, true, nullptr);
}

/// Forward pass of sinkhorn_operator that records the iterates for backprop.
inline DoublyStochastic sinkhorn_forward(const Matrix& x, const SinkhornConfig& cfg, SinkhornTape& tape) {
  return detail::run_sinkhorn(x, cfg, cfg.max_iter, false, &tape);
}

/// Given dL/dS for S = sinkhorn_forward(x), returns dL/dx.
inline Matrix sinkhorn_backward(const SinkhornTape& tape, const Matrix& grad_out) {
  const std::size_t rounds = tape.col_steps.size();
  if (rounds == 0) fail(ErrorKind::kParameter, "sinkhorn_backward: empty tape");
  const Matrix& result = tape.col_steps.back();
  require_same_size(result, grad_out, "sinkhorn_backward");
  // Adjoint of log S = z + a 1^T + 1 b^T.
  Matrix grad_z = grad_out.cwiseProduct(result);
  Vector grad_a = grad_z.rowwise().sum();
  Vector grad_b = grad_z.colwise().sum().transpose();
  for (std::size_t k = rounds; k-- > 0;) {
    const Matrix& q = tape.col_steps[k];
    grad_z.noalias() -= q * grad_b.asDiagonal();
    grad_a.noalias() -= q * grad_b;
    const Matrix& r = tape.row_steps[k];
    grad_z.noalias() -= grad_a.asDiagonal() * r;
    grad_b.noalias() = -r.transpose() * grad_a;
    grad_a.setZero();
  }
  return grad_z / tape.tau;
}

/// Maximum-weight assignment of a square matrix (Hungarian algorithm).
/// Among optimal assignments the lexicographically smallest one is returned:
/// row 0 takes the lowest feasible column, then row 1, and so on.
inline Permutation max_weight_assignment(const Matrix& weights) {
  require_square(weights, "max_weight_assignment");
  if (!weights.allFinite()) fail(ErrorKind::kParameter, "max_weight_assignment: non-finite entries");
  const int n = static_cast<int>(weights.rows());
  if (n == 0) return Permutation{};
  const double top = weights.maxCoeff();
  const Matrix cost = (top - weights.array()).matrix();

  // Shortest augmenting path Hungarian, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  // Every optimal assignment is a perfect matching on zero reduced-cost
  // entries of the dual solution; pick the lexicographically smallest one.
  const double tol = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff()) * n;
  std::vector<std::vector<char>> tight(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      tight[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          cost(i, j) - u[static_cast<std::size_t>(i) + 1] - v[static_cast<std::size_t>(j) + 1] <= tol;

  std::vector<int> fixed_col(static_cast<std::size_t>(n), -1);
  std::vector<char> col_taken(static_cast<std::size_t>(n), 0);
  // Kuhn's augmenting-path matching on rows >= first_free restricted to free columns.
  auto completes = [&](int first_free) {
    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    std::vector<char> visited;
    std::function<bool(int)> augment = [&](int row) {
      for (int col = 0; col < n; ++col) {
        if (col_taken[static_cast<std::size_t>(col)] || !tight[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] ||
            visited[static_cast<std::size_t>(col)])
          continue;
        visited[static_cast<std::size_t>(col)] = 1;
        if (owner[static_cast<std::size_t>(col)] < 0 || augment(owner[static_cast<std::size_t>(col)])) {
          owner[static_cast<std::size_t>(col)] = row;
          return true;
        }
      }
      return false;
    };
    for (int row = first_free; row < n; ++row) {
      visited.assign(static_cast<std::size_t>(n), 0);
      if (!augment(row)) return false;
    }
    return true;
  };
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int j = 0; j < n && !placed; ++j) {
      if (col_taken[static_cast<std::size_t>(j)] || !tight[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      col_taken[static_cast<std::size_t>(j)] = 1;
      if (completes(i + 1)) {
        fixed_col[static_cast<std::size_t>(i)] = j;
        placed = true;
      } else {
        col_taken[static_cast<std::size_t>(j)] = 0;
      }
    }
    if (!placed) {
      // Tolerance too tight for this input; fall back to the Hungarian matching.
      std::vector<int> mapping(static_cast<std::size_t>(n));
      for (int j = 1; j <= n; ++j) mapping[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
      return Permutation(std::move(mapping));
    }
  }
  return Permutation(std::move(fixed_col));
}

/// Hard permutation with the largest total mass of a (relaxed) assignment.
inline Permutation round_to_permutation(const DoublyStochastic& ds) { return max_weight_assignment(ds.matrix); }

inline double permutation_accuracy(const Permutation& estimate, const Permutation& truth) {
  if (estimate.n() != truth.n()) fail(ErrorKind::kDimension, "permutation_accuracy: sizes differ");
  if (truth.n() == 0) return 1.0;
  int hits = 0;
  for (int i = 0; i < truth.n(); ++i) hits += estimate[i] == truth[i];
  return static_cast<double>(hits) / truth.n();
}

}  // namespace got
