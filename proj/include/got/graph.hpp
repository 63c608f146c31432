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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "got/error.hpp"
#include "got/linalg.hpp"

namespace got {

struct Edge {
  int i = 0;
  int j = 0;
  double w = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph stored as a dense symmetric weight matrix.
/// Immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Validates symmetry, non-negativity and a zero diagonal. With `strict`,
  /// also requires connectivity.
  explicit Graph(Matrix weights, std::vector<int> labels = {}, bool strict = false)
      : weights_(std::move(weights)), labels_(std::move(labels)) {
    require_square(weights_, "Graph");
    const Eigen::Index n = weights_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights_(i, i) != 0.0) fail(ErrorKind::kParameter, "Graph: non-zero diagonal at vertex " + std::to_string(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = weights_(i, j);
        if (!std::isfinite(w) || w < 0.0) {
          fail(ErrorKind::kParameter, "Graph: invalid weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        if (w != weights_(j, i)) {
          fail(ErrorKind::kParameter, "Graph: asymmetric weights at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
    if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != n) {
      fail(ErrorKind::kDimension, "Graph: label count does not match vertex count");
    }
    if (strict && !is_connected()) fail(ErrorKind::kPrecondition, "Graph: not connected");
  }

  static Graph from_edges(int n, const std::vector<Edge>& edges, std::vector<int> labels = {}) {
    if (n < 0) fail(ErrorKind::kParameter, "Graph: negative vertex count");
    Matrix w = Matrix::Zero(n, n);
    for (const Edge& e : edges) {
      if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
        fail(ErrorKind::kParameter, "Graph: edge endpoint out of range");
      }
      if (e.i == e.j) fail(ErrorKind::kParameter, "Graph: self-loop at vertex " + std::to_string(e.i));
      w(e.i, e.j) = e.w;
      w(e.j, e.i) = e.w;
    }
    return Graph(std::move(w), std::move(labels));
  }

  int n() const { return static_cast<int>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  double weight(int i, int j) const { return weights_(i, j); }
  const std::vector<int>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

  /// Edges with i < j and non-zero weight, in row-major order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < n(); ++i)
      for (int j = i + 1; j < n(); ++j)
        if (weights_(i, j) != 0.0) out.push_back({i, j, weights_(i, j)});
    return out;
  }

  int edge_count() const {
    int count = 0;
    for (int i = 0; i < n(); ++i)
      for (int j = i + 1; j < n(); ++j) count += weights_(i, j) != 0.0;
    return count;
  }

  std::vector<int> degrees_unweighted() const {
    std::vector<int> d(static_cast<std::size_t>(n()), 0);
    for (int i = 0; i < n(); ++i)
      for (int j = 0; j < n(); ++j) d[static_cast<std::size_t>(i)] += weights_(i, j) != 0.0;
    return d;
  }

  bool is_connected() const {
    if (n() <= 1) return true;
    std::vector<char> seen(static_cast<std::size_t>(n()), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < n(); ++u) {
        if (weights_(v, u) != 0.0 && !seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = 1;
          ++reached;
          stack.push_back(u);
        }
      }
    }
    return reached == n();
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.weights_ == b.weights_ && a.labels_ == b.labels_;
  }

 private:
  Matrix weights_;
  std::vector<int> labels_;
};

/// Bijection on {0..n-1}. Entry p[i] = j pairs vertex i of graph 2 with
/// vertex j of graph 1. The matrix form has rows indexed by graph 2 and
/// columns by graph 1: P(i, p[i]) = 1.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
    std::vector<char> hit(mapping_.size(), 0);
    for (int v : mapping_) {
      if (v < 0 || static_cast<std::size_t>(v) >= mapping_.size() || hit[static_cast<std::size_t>(v)]) {
        fail(ErrorKind::kParameter, "Permutation: mapping is not a bijection");
      }
      hit[static_cast<std::size_t>(v)] = 1;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
    return Permutation(std::move(m));
  }

  template <typename RngT>
  static Permutation random(int n, RngT& rng) {
    std::vector<int> m = identity(n).mapping_;
    rng.shuffle(std::span<int>(m));
    return Permutation(std::move(m));
  }

  int n() const { return static_cast<int>(mapping_.size()); }
  int operator[](int i) const { return mapping_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& mapping() const { return mapping_; }

  Permutation inverse() const {
    std::vector<int> inv(mapping_.size());
    for (std::size_t i = 0; i < mapping_.size(); ++i) inv[static_cast<std::size_t>(mapping_[i])] = static_cast<int>(i);
    return Permutation(std::move(inv));
  }

  Matrix matrix() const {
    Matrix p = Matrix::Zero(n(), n());
    for (int i = 0; i < n(); ++i) p(i, (*this)[i]) = 1.0;
    return p;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> mapping_;
};

/// L = D - W.
inline Matrix laplacian(const Graph& g) {
  const Matrix& w = g.weights();
  Matrix l = -w;
  l.diagonal() = w.rowwise().sum();
  return l;
}

/// Relabels g so that its vertex i becomes vertex p[i]:
/// weights'(p[i], p[k]) = weights(i, k), equivalently laplacian' = P^T L P.
/// Labels move with their vertices.
inline Graph permute(const Graph& g, const Permutation& p) {
  if (p.n() != g.n()) fail(ErrorKind::kDimension, "permute: permutation size does not match graph");
  const int n = g.n();
  Matrix w(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) w(p[i], p[k]) = g.weight(i, k);
  std::vector<int> labels;
  if (g.has_labels()) {
    labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(p[i])] = g.labels()[static_cast<std::size_t>(i)];
  }
  return Graph(std::move(w), std::move(labels));
}

inline bool same_edge_set(const Graph& a, const Graph& b) {
  return a.n() == b.n() && a.weights() == b.weights();
}

}  // namespace got
