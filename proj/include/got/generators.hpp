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

// Random graph models and edge perturbation. All generators return connected,
// unit-weight graphs and resample (up to kMaxAttempts) until connected.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "got/error.hpp"
#include "got/graph.hpp"
#include "got/rng.hpp"

namespace got {

inline constexpr int kMaxAttempts = 100;

struct SbmModel {
  int blocks = 2;
  double p_in = 0.7;
  double p_out = 0.1;
};

struct BarabasiAlbertModel {
  int m = 3;
};

struct WattsStrogatzModel {
  int k = 6;
  double p_rewire = 0.2;
};

struct RandomRegularModel {
  int d = 6;
};

using GraphModel = std::variant<SbmModel, BarabasiAlbertModel, WattsStrogatzModel, RandomRegularModel>;

/// Parses "sbm:<k>:<p_in>:<p_out>", "ba:<m>", "ws:<k>:<p>" or "regular:<d>".
inline GraphModel parse_model(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto bad = [&]() -> GraphModel { fail(ErrorKind::kParameter, "unrecognized graph model '" + text + "'"); };
  if (parts.empty()) return bad();
  try {
    const std::string& name = parts[0];
    if (name == "sbm" && parts.size() == 4) return SbmModel{std::stoi(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
    if (name == "ba" && parts.size() == 2) return BarabasiAlbertModel{std::stoi(parts[1])};
    if (name == "ws" && parts.size() == 3) return WattsStrogatzModel{std::stoi(parts[1]), std::stod(parts[2])};
    if (name == "regular" && parts.size() == 2) return RandomRegularModel{std::stoi(parts[1])};
  } catch (const std::logic_error&) {
    return bad();
  }
  return bad();
}

inline std::string describe(const GraphModel& model) {
  struct Visitor {
    std::string operator()(const SbmModel& m) const {
      return "sbm:" + std::to_string(m.blocks) + ":" + std::to_string(m.p_in) + ":" + std::to_string(m.p_out);
    }
    std::string operator()(const BarabasiAlbertModel& m) const { return "ba:" + std::to_string(m.m); }
    std::string operator()(const WattsStrogatzModel& m) const {
      return "ws:" + std::to_string(m.k) + ":" + std::to_string(m.p_rewire);
    }
    std::string operator()(const RandomRegularModel& m) const { return "regular:" + std::to_string(m.d); }
  };
  return std::visit(Visitor{}, model);
}

namespace detail {

inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kParameter, std::string(what) + " must lie in [0, 1]");
}

class EdgeSet {
 public:
  explicit EdgeSet(int n) : adj_(static_cast<std::size_t>(n)) {}
  bool has(int a, int b) const { return adj_[static_cast<std::size_t>(a)].count(b) > 0; }
  void add(int a, int b) {
    adj_[static_cast<std::size_t>(a)].insert(b);
    adj_[static_cast<std::size_t>(b)].insert(a);
  }
  void remove(int a, int b) {
    adj_[static_cast<std::size_t>(a)].erase(b);
    adj_[static_cast<std::size_t>(b)].erase(a);
  }
  int degree(int a) const { return static_cast<int>(adj_[static_cast<std::size_t>(a)].size()); }
  Graph to_graph(std::vector<int> labels = {}) const {
    const int n = static_cast<int>(adj_.size());
    Matrix w = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b : adj_[static_cast<std::size_t>(a)]) w(a, b) = 1.0;
    return Graph(std::move(w), std::move(labels));
  }

 private:
  std::vector<std::set<int>> adj_;
};

inline Graph sample_sbm(const SbmModel& m, int n, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long>(i) * m.blocks / n);
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? m.p_in : m.p_out;
      if (rng.bernoulli(p)) w(i, j) = w(j, i) = 1.0;
    }
  }
  return Graph(std::move(w), std::move(labels));
}

inline Graph sample_barabasi_albert(const BarabasiAlbertModel& m, int n, Rng& rng) {
  EdgeSet edges(n);
  std::vector<int> targets;
  for (int i = 0; i < m.m; ++i) targets.push_back(i);
  std::vector<int> repeated;
  for (int source = m.m; source < n; ++source) {
    for (int t : targets) edges.add(source, t);
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), static_cast<std::size_t>(m.m), source);
    std::set<int> chosen;
    std::vector<int> ordered;
    while (static_cast<int>(chosen.size()) < m.m) {
      const int pick = repeated[static_cast<std::size_t>(rng.below(repeated.size()))];
      if (chosen.insert(pick).second) ordered.push_back(pick);
    }
    targets = ordered;
  }
  return edges.to_graph();
}

inline Graph sample_watts_strogatz(const WattsStrogatzModel& m, int n, Rng& rng) {
  EdgeSet edges(n);
  const int half = m.k / 2;
  for (int j = 1; j <= half; ++j)
    for (int u = 0; u < n; ++u) edges.add(u, (u + j) % n);
  for (int j = 1; j <= half; ++j) {
    for (int u = 0; u < n; ++u) {
      if (!rng.bernoulli(m.p_rewire)) continue;
      const int v = (u + j) % n;
      if (edges.degree(u) >= n - 1) continue;
      int w;
      do {
        w = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      } while (w == u || edges.has(u, w));
      edges.remove(u, v);
      edges.add(u, w);
    }
  }
  return edges.to_graph();
}

// Steger-Wormald pairing with restart on dead ends.
inline std::optional<Graph> try_random_regular(const RandomRegularModel& m, int n, Rng& rng) {
  EdgeSet edges(n);
  std::vector<int> stubs;
  for (int v = 0; v < n; ++v) stubs.insert(stubs.end(), static_cast<std::size_t>(m.d), v);
  while (!stubs.empty()) {
    std::vector<int> leftover;
    rng.shuffle(std::span<int>(stubs));
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      const int a = stubs[i], b = stubs[i + 1];
      if (a != b && !edges.has(a, b)) {
        edges.add(a, b);
      } else {
        leftover.push_back(a);
        leftover.push_back(b);
      }
    }
    if (leftover.empty()) break;
    // Dead end if no suitable pair remains among the leftover stubs.
    bool suitable = false;
    for (std::size_t i = 0; i < leftover.size() && !suitable; ++i)
      for (std::size_t j = i + 1; j < leftover.size() && !suitable; ++j)
        suitable = leftover[i] != leftover[j] && !edges.has(leftover[i], leftover[j]);
    if (!suitable) return std::nullopt;
    stubs = std::move(leftover);
  }
  return edges.to_graph();
}

inline void validate(const GraphModel& model, int n) {
  if (n < 1) fail(ErrorKind::kParameter, "generate: n must be positive");
  struct Visitor {
    int n;
    void operator()(const SbmModel& m) const {
      if (m.blocks < 1 || m.blocks > n) fail(ErrorKind::kParameter, "sbm: blocks must lie in [1, n]");
      require_probability(m.p_in, "sbm: p_in");
      require_probability(m.p_out, "sbm: p_out");
    }
    void operator()(const BarabasiAlbertModel& m) const {
      if (m.m < 1 || m.m >= n) fail(ErrorKind::kParameter, "ba: m must lie in [1, n)");
    }
    void operator()(const WattsStrogatzModel& m) const {
      if (m.k < 2 || m.k % 2 != 0 || m.k >= n) fail(ErrorKind::kParameter, "ws: k must be even and in [2, n)");
      require_probability(m.p_rewire, "ws: p_rewire");
    }
    void operator()(const RandomRegularModel& m) const {
      if (m.d < 1 || m.d >= n) fail(ErrorKind::kParameter, "regular: d must lie in [1, n)");
      if ((static_cast<long>(n) * m.d) % 2 != 0) fail(ErrorKind::kParameter, "regular: n * d must be even");
    }
  };
  std::visit(Visitor{n}, model);
}

}  // namespace detail

/// Samples a connected unit-weight graph with n vertices. SBM graphs carry
/// their block labels (contiguous blocks of near-equal size).
inline Graph generate(const GraphModel& model, int n, Rng& rng) {
  detail::validate(model, n);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::optional<Graph> g;
    if (const auto* sbm = std::get_if<SbmModel>(&model)) g = detail::sample_sbm(*sbm, n, rng);
    if (const auto* ba = std::get_if<BarabasiAlbertModel>(&model)) g = detail::sample_barabasi_albert(*ba, n, rng);
    if (const auto* ws = std::get_if<WattsStrogatzModel>(&model)) g = detail::sample_watts_strogatz(*ws, n, rng);
    if (const auto* rr = std::get_if<RandomRegularModel>(&model)) g = detail::try_random_regular(*rr, n, rng);
    if (g && g->is_connected()) return *std::move(g);
  }
  fail(ErrorKind::kGeneration, describe(model) + ": no connected sample after " + std::to_string(kMaxAttempts) +
                                   " attempts");
}

inline Graph generate(const GraphModel& model, int n, std::uint64_t seed) {
  Rng rng(seed);
  return generate(model, n, rng);
}

/// Removes each intra-community edge with probability p_intra and each
/// inter-community edge with probability p_inter, resampling the removals
/// until the result is connected.
inline Graph perturb_edges(const Graph& g, double p_intra, double p_inter, Rng& rng) {
  if (!g.has_labels()) fail(ErrorKind::kParameter, "perturb_edges: graph has no community labels");
  detail::require_probability(p_intra, "perturb_edges: p_intra");
  detail::require_probability(p_inter, "perturb_edges: p_inter");
  const auto& labels = g.labels();
  const std::vector<Edge> edges = g.edges();
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Matrix w = g.weights();
    for (const Edge& e : edges) {
      const bool same = labels[static_cast<std::size_t>(e.i)] == labels[static_cast<std::size_t>(e.j)];
      if (rng.bernoulli(same ? p_intra : p_inter)) w(e.i, e.j) = w(e.j, e.i) = 0.0;
    }
    Graph out(std::move(w), labels);
    if (out.is_connected()) return out;
  }
  fail(ErrorKind::kPerturbation, "perturb_edges: every sampled removal disconnected the graph");
}

inline Graph perturb_edges(const Graph& g, double p_intra, double p_inter, std::uint64_t seed) {
  Rng rng(seed);
  return perturb_edges(g, p_intra, p_inter, rng);
}

}  // namespace got
