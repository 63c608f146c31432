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

// Graph and signal file formats.
//
// Graph JSON: {"n": int, "edges": [[i, j, w], ...], "labels": [int, ...]}
// with 0-based vertices and each undirected edge listed once (i < j).
// Edge-list text: one "i j w" triple per line, '#' starts a comment; the
// vertex count is one past the largest index. In both formats an edge given
// twice (either orientation) with the same weight is merged; different
// weights are rejected.
//
// Signals CSV: one signal per row, n comma-separated values.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "got/error.hpp"
#include "got/graph.hpp"

namespace got {

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kParse, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kParse, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::kParse, "write failed for '" + path + "'");
}

// Merges duplicate edges; `where` names the offending entry on error.
class EdgeAccumulator {
 public:
  void add(int i, int j, double w, const std::string& where) {
    if (i < 0 || j < 0) fail(ErrorKind::kParse, where + ": negative vertex index");
    if (i == j) fail(ErrorKind::kParse, where + ": self-loop");
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::kParse, where + ": weight must be finite and non-negative");
    const auto key = std::minmax(i, j);
    auto [it, inserted] = edges_.emplace(key, w);
    if (!inserted && it->second != w) fail(ErrorKind::kParse, where + ": asymmetric weights for a repeated edge");
    max_index_ = std::max({max_index_, i, j});
  }

  int max_index() const { return max_index_; }

  Graph build(int n, std::vector<int> labels) const {
    if (max_index_ >= n) fail(ErrorKind::kParse, "edge endpoint " + std::to_string(max_index_) + " exceeds n");
    Matrix w = Matrix::Zero(n, n);
    for (const auto& [key, weight] : edges_) w(key.first, key.second) = w(key.second, key.first) = weight;
    return Graph(std::move(w), std::move(labels));
  }

 private:
  std::map<std::pair<int, int>, double> edges_;
  int max_index_ = -1;
};

inline Graph parse_graph_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParse, e.what());
  }
  try {
    if (!doc.is_object()) fail(ErrorKind::kParse, "graph JSON must be an object");
    if (!doc.contains("n") || !doc["n"].is_number_integer()) fail(ErrorKind::kParse, "graph JSON needs integer 'n'");
    const int n = doc["n"].get<int>();
    if (n < 0) fail(ErrorKind::kParse, "'n' must be non-negative");
    EdgeAccumulator acc;
    const auto& edges = doc.value("edges", nlohmann::json::array());
    if (!edges.is_array()) fail(ErrorKind::kParse, "'edges' must be an array");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& e = edges[k];
      const std::string where = "edges[" + std::to_string(k) + "]";
      if (!e.is_array() || (e.size() != 2 && e.size() != 3)) fail(ErrorKind::kParse, where + ": expected [i, j, w]");
      const double w = e.size() == 3 ? e[2].get<double>() : 1.0;
      acc.add(e[0].get<int>(), e[1].get<int>(), w, where);
    }
    std::vector<int> labels;
    if (doc.contains("labels")) labels = doc["labels"].get<std::vector<int>>();
    if (!labels.empty() && static_cast<int>(labels.size()) != n) fail(ErrorKind::kParse, "'labels' length differs from n");
    return acc.build(n, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, e.what());
  }
}

inline Graph parse_edge_list(const std::string& text) {
  EdgeAccumulator acc;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string a, b, c, extra;
    if (!(fields >> a)) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (!(fields >> b) || (fields >> c && fields >> extra)) fail(ErrorKind::kParse, where + ": expected 'i j [w]'");
    try {
      std::size_t used = 0;
      const int i = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      const int j = std::stoi(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
      double w = 1.0;
      if (!c.empty()) {
        w = std::stod(c, &used);
        if (used != c.size()) throw std::invalid_argument(c);
      }
      acc.add(i, j, w, where);
    } catch (const std::logic_error&) {
      fail(ErrorKind::kParse, where + ": malformed number");
    }
  }
  return acc.build(acc.max_index() + 1, {});
}

}  // namespace detail

/// Parses graph JSON when the text starts with '{', edge-list text otherwise.
inline Graph parse_graph(const std::string& text) {
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    return ch == '{' ? detail::parse_graph_json(text) : detail::parse_edge_list(text);
  }
  return detail::parse_edge_list(text);
}

inline Graph read_graph(const std::string& path) { return parse_graph(detail::read_file(path)); }

inline std::string graph_to_json(const Graph& g) {
  nlohmann::json doc;
  doc["n"] = g.n();
  doc["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges()) doc["edges"].push_back({e.i, e.j, e.w});
  if (g.has_labels()) doc["labels"] = g.labels();
  return doc.dump() + "\n";
}

inline void write_graph(const Graph& g, const std::string& path) { detail::write_file(path, graph_to_json(g)); }

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string signals_to_csv(const Matrix& signals) {
  std::string out;
  for (Eigen::Index r = 0; r < signals.rows(); ++r) {
    for (Eigen::Index c = 0; c < signals.cols(); ++c) {
      if (c) out += ',';
      out += format_double(signals(r, c));
    }
    out += '\n';
  }
  return out;
}

/// Rows are signals.
inline Matrix parse_signals(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        fail(ErrorKind::kParse, "signals line " + std::to_string(line_no) + ": malformed value '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::kParse, "signals line " + std::to_string(line_no) + ": inconsistent row length");
    }
    rows.push_back(std::move(row));
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

inline Matrix read_signals(const std::string& path) { return parse_signals(detail::read_file(path)); }

inline void write_signals(const Matrix& signals, const std::string& path) {
  detail::write_file(path, signals_to_csv(signals));
}

}  // namespace got
