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
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "got/align.hpp"
#include "got/distance.hpp"
#include "got/error.hpp"
#include "got/generators.hpp"
#include "got/graph.hpp"
#include "got/graph_io.hpp"
#include "got/parallel.hpp"
#include "got/rng.hpp"

namespace got {

using Json = nlohmann::json;

/// Mutual information over the arithmetic mean of the two entropies.
/// Two single-cluster partitions give 1.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail(ErrorKind::kDimension, "nmi: label vectors differ in length");
  if (a.empty()) fail(ErrorKind::kParameter, "nmi: empty labelings");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= c / n * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ca.size() == 1 && cb.size() == 1) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (ca[key.first] * cb[key.second]));
  const double denom = 0.5 * (ha + hb);
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Reports

struct TrialRecord {
  double p_inter = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::map<std::string, double> metrics;  // empty when the trial failed
  std::string error;

  bool ok() const { return error.empty(); }
};

struct Aggregate {
  double p_inter = 0.0;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than two values
  int count = 0;
};

struct ExperimentReport {
  std::string experiment;
  Json config = Json::object();
  std::vector<TrialRecord> trials;
  std::vector<Aggregate> aggregates;
  Json summary = Json::object();
};

/// Groups successful trials by (p_inter, method, metric) in first-seen order.
inline std::vector<Aggregate> aggregate(const std::vector<TrialRecord>& trials) {
  std::vector<Aggregate> out;
  std::vector<std::vector<double>> values;
  for (const TrialRecord& t : trials) {
    if (!t.ok()) continue;
    for (const auto& [metric, value] : t.metrics) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) {
        return a.p_inter == t.p_inter && a.method == t.method && a.metric == metric;
      });
      if (it == out.end()) {
        out.push_back({t.p_inter, t.method, metric, 0.0, 0.0, 0});
        values.emplace_back();
        it = out.end() - 1;
      }
      values[static_cast<std::size_t>(it - out.begin())].push_back(value);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& v = values[k];
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[k].mean = mean;
    out[k].std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out[k].count = static_cast<int>(v.size());
  }
  return out;
}

inline const Aggregate* find_aggregate(const ExperimentReport& r, double p_inter, const std::string& method,
                                       const std::string& metric) {
  for (const Aggregate& a : r.aggregates)
    if (a.p_inter == p_inter && a.method == method && a.metric == metric) return &a;
  return nullptr;
}

inline Json to_json(const ExperimentReport& r) {
  Json trials = Json::array();
  for (const TrialRecord& t : r.trials) {
    Json j{{"p_inter", t.p_inter}, {"trial", t.trial}, {"seed", t.seed}, {"method", t.method}};
    j["metrics"] = Json::object();
    for (const auto& [k, v] : t.metrics) j["metrics"][k] = v;
    if (!t.ok()) j["error"] = t.error;
    trials.push_back(std::move(j));
  }
  Json aggs = Json::array();
  for (const Aggregate& a : r.aggregates) {
    aggs.push_back({{"p_inter", a.p_inter}, {"method", a.method}, {"metric", a.metric}, {"mean", a.mean},
                    {"std", a.std}, {"count", a.count}});
  }
  return Json{{"experiment", r.experiment}, {"config", r.config}, {"trials", std::move(trials)},
              {"aggregates", std::move(aggs)}, {"summary", r.summary}};
}

/// One row per successful (trial, metric).
inline std::string trials_csv(const ExperimentReport& r) {
  std::string out = "p_inter,trial,seed,method,metric,value\n";
  for (const TrialRecord& t : r.trials)
    for (const auto& [metric, value] : t.metrics) {
      out += format_double(t.p_inter) + "," + std::to_string(t.trial) + "," + std::to_string(t.seed) + "," +
             t.method + "," + metric + "," + format_double(value) + "\n";
    }
  return out;
}

/// Figure-ready columns p_inter,method,metric,mean,std.
inline std::string aggregates_csv(const ExperimentReport& r) {
  std::string out = "p_inter,method,metric,mean,std\n";
  for (const Aggregate& a : r.aggregates) {
    out += format_double(a.p_inter) + "," + a.method + "," + a.metric + "," + format_double(a.mean) + "," +
           format_double(a.std) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noisy community alignment

struct NoisyAlignmentConfig {
  int n = 40;
  int blocks = 4;
  double p_in = 0.8;
  double p_out = 0.05;
  double p_intra = 0.5;
  std::vector<double> p_inter_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  int trials = 10;
  bool run_got = true;
  bool run_l2 = true;
  SgdConfig sgd = [] {
    SgdConfig c;
    c.iterations = 1000;
    return c;
  }();
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (n < 2 || blocks < 1 || blocks > n) fail(ErrorKind::kParameter, "noisy alignment: bad size or block count");
    if (trials < 1) fail(ErrorKind::kParameter, "noisy alignment: trials must be >= 1");
    if (p_inter_grid.empty()) fail(ErrorKind::kParameter, "noisy alignment: empty p_inter grid");
    if (!run_got && !run_l2) fail(ErrorKind::kParameter, "noisy alignment: no method selected");
    for (double p : {p_in, p_out, p_intra})
      if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kParameter, "noisy alignment: probability outside [0, 1]");
    for (double p : p_inter_grid)
      if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kParameter, "noisy alignment: p_inter outside [0, 1]");
    sgd.validate();
  }
};

/// A graph pair with known correspondence: g2 is a perturbed, relabelled copy
/// of g1 and truth[i] is the g1 vertex matching g2 vertex i.
struct NoisyInstance {
  Graph g1;
  Graph g2;
  Permutation truth;
};

/// Streams for trial t: (seed, t, 0) base graph, (seed, t, 1, k) edge removal
/// at grid point k, (seed, t, 2, k) relabelling, (seed, t, 3) optimizer seed.
inline NoisyInstance noisy_instance(const NoisyAlignmentConfig& cfg, int trial, int grid_index) {
  const Rng trial_rng = Rng(cfg.seed).derive(static_cast<std::uint64_t>(trial));
  Rng base = trial_rng.derive(0);
  const Graph g1 = generate(SbmModel{cfg.blocks, cfg.p_in, cfg.p_out}, cfg.n, base);
  Rng removal = trial_rng.derive(1).derive(static_cast<std::uint64_t>(grid_index));
  const Graph noisy = perturb_edges(g1, cfg.p_intra, cfg.p_inter_grid[static_cast<std::size_t>(grid_index)], removal);
  Rng relabel = trial_rng.derive(2).derive(static_cast<std::uint64_t>(grid_index));
  const Permutation truth = Permutation::random(cfg.n, relabel);
  return {g1, permute(noisy, truth.inverse()), truth};
}

inline std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return Rng(master).derive(static_cast<std::uint64_t>(trial)).derive(3)();
}

/// Labels of g1's vertices as read off g2 through the estimate.
inline std::vector<int> carried_labels(const Graph& g2, const Permutation& estimate) {
  const Permutation inv = estimate.inverse();
  std::vector<int> out(static_cast<std::size_t>(g2.n()));
  for (int a = 0; a < g2.n(); ++a) out[static_cast<std::size_t>(a)] = g2.labels()[static_cast<std::size_t>(inv[a])];
  return out;
}

inline std::map<std::string, double> alignment_metrics(const NoisyInstance& inst, const Permutation& estimate,
                                                       const MeasureMode& report_mode) {
  const Graph aligned = permute(inst.g2, estimate);
  return {
      {"got_distance", w2_squared(graph_measure(inst.g1, report_mode), graph_measure(aligned, report_mode))},
      {"frobenius_distance", frobenius_laplacian_distance(inst.g1, aligned)},
      {"accuracy", permutation_accuracy(estimate, inst.truth)},
      {"nmi", nmi(inst.g1.labels(), carried_labels(inst.g2, estimate))},
  };
}

inline ExperimentReport noisy_alignment_experiment(const NoisyAlignmentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, ObjectiveKind>> methods;
  if (cfg.run_got) methods.emplace_back("GOT", ObjectiveKind::kW2);
  if (cfg.run_l2) methods.emplace_back("L2", ObjectiveKind::kFrobenius);

  struct Job {
    int grid;
    int trial;
    std::size_t method;
  };
  std::vector<Job> jobs;
  for (int k = 0; k < static_cast<int>(cfg.p_inter_grid.size()); ++k)
    for (int t = 0; t < cfg.trials; ++t)
      for (std::size_t m = 0; m < methods.size(); ++m) jobs.push_back({k, t, m});

  std::vector<TrialRecord> records(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int idx) {
    const Job& job = jobs[static_cast<std::size_t>(idx)];
    TrialRecord& rec = records[static_cast<std::size_t>(idx)];
    rec.p_inter = cfg.p_inter_grid[static_cast<std::size_t>(job.grid)];
    rec.trial = job.trial;
    rec.seed = trial_seed(cfg.seed, job.trial);
    rec.method = methods[job.method].first;
    try {
      const NoisyInstance inst = noisy_instance(cfg, job.trial, job.grid);
      SgdConfig sgd = cfg.sgd;
      sgd.seed = rec.seed;
      sgd.objective = methods[job.method].second;
      sgd.threads = 1;
      const AlignmentResult res = align(inst.g1, inst.g2, sgd);
      rec.metrics = alignment_metrics(inst, res.hard, sgd.report_mode);
    } catch (const Error& e) {
      rec.metrics.clear();
      rec.error = e.what();
    }
  });

  ExperimentReport report;
  report.experiment = "sbm-align";
  Json names = Json::array();
  for (const auto& m : methods) names.push_back(m.first);
  report.config = {{"n", cfg.n},
                   {"blocks", cfg.blocks},
                   {"p_in", cfg.p_in},
                   {"p_out", cfg.p_out},
                   {"p_intra", cfg.p_intra},
                   {"p_inter_grid", cfg.p_inter_grid},
                   {"trials", cfg.trials},
                   {"methods", names},
                   {"seed", cfg.seed},
                   {"tau", cfg.sgd.sinkhorn.tau},
                   {"learning_rate", cfg.sgd.learning_rate},
                   {"samples", cfg.sgd.samples},
                   {"iterations", cfg.sgd.iterations},
                   {"mode", cfg.sgd.mode ? cfg.sgd.mode->describe() : "reg:relative(0.1)"}};
  report.trials = std::move(records);
  report.aggregates = aggregate(report.trials);
  int failed = 0;
  for (const TrialRecord& t : report.trials) failed += t.ok() ? 0 : 1;
  report.summary = {{"failed_trials", failed}};
  return report;
}

// ---------------------------------------------------------------------------
// Five-model classification

struct NamedModel {
  std::string name;
  GraphModel model;
};

inline std::vector<NamedModel> classification_models() {
  return {{"SBM2", SbmModel{2, 0.7, 0.1}},
          {"SBM3", SbmModel{3, 0.8, 0.1}},
          {"Regular", RandomRegularModel{6}},
          {"BA", BarabasiAlbertModel{3}},
          {"WS", WattsStrogatzModel{6, 0.2}}};
}

struct ClassificationConfig {
  int n = 20;
  int per_model = 5;
  std::vector<NamedModel> models = classification_models();
  SgdConfig sgd = [] {
    SgdConfig c;
    c.iterations = 1000;
    return c;
  }();
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (n < 2) fail(ErrorKind::kParameter, "classification: n must be >= 2");
    if (per_model < 1) fail(ErrorKind::kParameter, "classification: per_model must be >= 1");
    if (models.size() < 2) fail(ErrorKind::kParameter, "classification: need at least two models");
    for (const NamedModel& m : models) validate_model(m.model, n);
    sgd.validate();
  }

 private:
  static void validate_model(const GraphModel& m, int n) { detail::validate(m, n); }
};

struct LeaveOneOut {
  std::vector<std::vector<int>> confusion;  // rows actual, columns predicted
  double accuracy = 0.0;
};

/// Leave-one-out 1-NN; ties go to the lowest index.
inline LeaveOneOut one_nearest_neighbour(const Matrix& distances, const std::vector<int>& classes, int class_count) {
  const int count = static_cast<int>(classes.size());
  LeaveOneOut out{std::vector<std::vector<int>>(static_cast<std::size_t>(class_count),
                                                std::vector<int>(static_cast<std::size_t>(class_count), 0)),
                  0.0};
  int correct = 0;
  for (int i = 0; i < count; ++i) {
    int best = -1;
    for (int j = 0; j < count; ++j) {
      if (j == i || std::isnan(distances(i, j))) continue;
      if (best < 0 || distances(i, j) < distances(i, best)) best = j;
    }
    const int actual = classes[static_cast<std::size_t>(i)];
    const int predicted = best < 0 ? actual : classes[static_cast<std::size_t>(best)];
    ++out.confusion[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
    correct += predicted == actual ? 1 : 0;
  }
  out.accuracy = static_cast<double>(correct) / count;
  return out;
}

struct ClassificationResult {
  std::vector<std::string> model_names;
  std::vector<int> classes;
  std::vector<double> edge_counts;
  Matrix got_distances;        // symmetrized aligned W2^2, +inf on failure
  Matrix directed_distances;   // row i, column j: g_j aligned onto g_i
  Matrix frobenius_distances;  // unaligned
  LeaveOneOut got;
  LeaveOneOut frobenius;
  double max_relative_asymmetry = 0.0;
  std::vector<std::string> failures;
};

inline ClassificationResult classification_experiment(const ClassificationConfig& cfg) {
  cfg.validate();
  const int per = cfg.per_model;
  const int count = per * static_cast<int>(cfg.models.size());
  ClassificationResult out;
  std::vector<Graph> graphs;
  for (const NamedModel& m : cfg.models) out.model_names.push_back(m.name);
  // Graph g: stream (seed, 0, g) for sampling, (seed, 1, g) for relabelling.
  for (int g = 0; g < count; ++g) {
    Rng sample = Rng(cfg.seed).derive(0).derive(static_cast<std::uint64_t>(g));
    const Graph raw = generate(cfg.models[static_cast<std::size_t>(g / per)].model, cfg.n, sample);
    Rng relabel = Rng(cfg.seed).derive(1).derive(static_cast<std::uint64_t>(g));
    graphs.push_back(permute(raw, Permutation::random(cfg.n, relabel)));
    out.classes.push_back(g / per);
    out.edge_counts.push_back(static_cast<double>(graphs.back().edge_count()));
  }

  const double inf = std::numeric_limits<double>::infinity();
  out.directed_distances = Matrix::Zero(count, count);
  out.frobenius_distances = Matrix::Zero(count, count);
  std::vector<std::pair<int, int>> ordered;
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j)
      if (i != j) ordered.emplace_back(i, j);
  std::vector<std::string> errors(ordered.size());
  parallel_for(static_cast<int>(ordered.size()), cfg.threads, [&](int k) {
    const auto [i, j] = ordered[static_cast<std::size_t>(k)];
    SgdConfig sgd = cfg.sgd;
    sgd.seed = Rng(cfg.seed).derive(2).derive(static_cast<std::uint64_t>(i * count + j))();
    sgd.threads = 1;
    try {
      out.directed_distances(i, j) =
          align(graphs[static_cast<std::size_t>(i)], graphs[static_cast<std::size_t>(j)], sgd).distance_aligned;
    } catch (const Error& e) {
      out.directed_distances(i, j) = inf;
      errors[static_cast<std::size_t>(k)] =
          "pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what();
    }
  });
  for (const std::string& e : errors)
    if (!e.empty()) out.failures.push_back(e);

  out.got_distances = Matrix::Zero(count, count);
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j) {
      const double a = out.directed_distances(i, j), b = out.directed_distances(j, i);
      const double d = std::isfinite(a) && std::isfinite(b) ? 0.5 * (a + b) : inf;
      out.got_distances(i, j) = out.got_distances(j, i) = d;
      if (std::isfinite(d) && d > 0.0) out.max_relative_asymmetry = std::max(out.max_relative_asymmetry, std::abs(a - b) / d);
      out.frobenius_distances(i, j) = out.frobenius_distances(j, i) =
          frobenius_laplacian_distance(graphs[static_cast<std::size_t>(i)], graphs[static_cast<std::size_t>(j)]);
    }
  const int classes = static_cast<int>(cfg.models.size());
  out.got = one_nearest_neighbour(out.got_distances, out.classes, classes);
  out.frobenius = one_nearest_neighbour(out.frobenius_distances, out.classes, classes);
  return out;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::isfinite(m(i, j)))
        row.push_back(m(i, j));
      else
        row.push_back(m(i, j) > 0 ? "inf" : "nan");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ExperimentReport classification_report(const ClassificationConfig& cfg, const ClassificationResult& r) {
  ExperimentReport report;
  report.experiment = "classify";
  Json models = Json::array();
  for (const NamedModel& m : cfg.models) models.push_back({{"name", m.name}, {"model", describe(m.model)}});
  report.config = {{"n", cfg.n},
                   {"per_model", cfg.per_model},
                   {"models", models},
                   {"seed", cfg.seed},
                   {"tau", cfg.sgd.sinkhorn.tau},
                   {"learning_rate", cfg.sgd.learning_rate},
                   {"samples", cfg.sgd.samples},
                   {"iterations", cfg.sgd.iterations}};
  for (std::size_t g = 0; g < r.classes.size(); ++g) {
    TrialRecord rec;
    rec.trial = static_cast<int>(g);
    rec.seed = cfg.seed;
    rec.method = r.model_names[static_cast<std::size_t>(r.classes[g])];
    rec.metrics = {{"edges", r.edge_counts[g]}};
    report.trials.push_back(std::move(rec));
  }
  report.aggregates = aggregate(report.trials);
  report.summary = {{"models", r.model_names},
                    {"got_accuracy", r.got.accuracy},
                    {"frobenius_accuracy", r.frobenius.accuracy},
                    {"got_confusion", r.got.confusion},
                    {"frobenius_confusion", r.frobenius.confusion},
                    {"max_relative_asymmetry", r.max_relative_asymmetry},
                    {"got_distances", matrix_json(r.got_distances)},
                    {"directed_got_distances", matrix_json(r.directed_distances)},
                    {"frobenius_distances", matrix_json(r.frobenius_distances)},
                    {"failures", r.failures}};
  return report;
}

inline std::string confusion_csv(const std::vector<std::string>& names, const std::vector<std::vector<int>>& c) {
  std::string out = "actual";
  for (const std::string& n : names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += names[i];
    for (int v : c[i]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Signal transport between pixel-grid graphs

/// side x side lattice with 4-neighbour edges, squared so that vertices within
/// two hops are joined with unit weight. Vertical edges between rows
/// band_row and band_row + 1 are dropped for columns < band_length before
/// squaring (band_length 0 keeps the full lattice).
inline Graph pixel_grid_graph(int side, int band_row = -1, int band_length = 0) {
  if (side < 2) fail(ErrorKind::kParameter, "pixel grid: side must be >= 2");
  const int n = side * side;
  Matrix a = Matrix::Zero(n, n);
  auto id = [side](int r, int c) { return r * side + c; };
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) a(id(r, c), id(r, c + 1)) = a(id(r, c + 1), id(r, c)) = 1.0;
      if (r + 1 < side && !(r == band_row && c < band_length)) a(id(r, c), id(r + 1, c)) = a(id(r + 1, c), id(r, c)) = 1.0;
    }
  const Matrix reach = a + a * a;
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && reach(i, j) > 0.0) w(i, j) = 1.0;
  Graph g(std::move(w));
  if (!g.is_connected()) fail(ErrorKind::kPrecondition, "pixel grid: constructed graph is disconnected");
  return g;
}

struct TransportDemoConfig {
  int side = 8;
  int band_row = 3;
  int band_length = 6;
  int n_signals = 8;
  int monte_carlo = 10000;
  MeasureMode mode = MeasureMode::exact();
  std::uint64_t seed = 0;

  void validate() const {
    if (side < 2) fail(ErrorKind::kParameter, "transport demo: side must be >= 2");
    if (n_signals < 1 || monte_carlo < 2) fail(ErrorKind::kParameter, "transport demo: signal counts too small");
    if (band_row < 0 || band_row + 1 >= side || band_length < 0 || band_length > side) {
      fail(ErrorKind::kParameter, "transport demo: band outside the grid");
    }
  }
};

struct TransportDemoResult {
  Graph source;  // banded lattice
  Graph target;  // full lattice
  Matrix source_signals;
  Matrix transported_signals;
  double covariance_relative_error = 0.0;    // Monte-Carlo push-forward vs target covariance
  double covariance_sampling_scale = 0.0;    // RMS relative error expected from sampling alone
  double smoothness_untransported = 0.0;     // mean x^T L2 x over Monte-Carlo sources
  double smoothness_transported = 0.0;       // mean (Tx)^T L2 (Tx)
  double smoothness_source = 0.0;            // mean x^T L1 x
  double self_transport_error = 0.0;         // max |T x - x| for identical graphs, zero-mean x
  double w2_squared = 0.0;
};

inline double mean_quadratic_form(const Matrix& rows, const Matrix& l) {
  return (rows * l).cwiseProduct(rows).sum() / static_cast<double>(rows.rows());
}

/// RMS of ||S - C||_F / ||C||_F for the sample second moment S of `count`
/// draws from N(0, C): sqrt((tr(C)^2 + ||C||_F^2) / count) / ||C||_F.
inline double expected_covariance_error(const Matrix& c, int count) {
  const double fro = c.norm(), tr = c.trace();
  return std::sqrt((tr * tr + fro * fro) / static_cast<double>(count)) / fro;
}

/// Streams: (seed, 0) displayed signals, (seed, 1) Monte-Carlo sources.
inline TransportDemoResult signal_transport_demo(const TransportDemoConfig& cfg) {
  cfg.validate();
  TransportDemoResult out{pixel_grid_graph(cfg.side, cfg.band_row, cfg.band_length), pixel_grid_graph(cfg.side)};
  const GraphMeasure m1 = graph_measure(out.source, cfg.mode);
  const GraphMeasure m2 = graph_measure(out.target, cfg.mode);
  const TransportPlan plan = transport_map(m1, m2);
  out.w2_squared = w2_squared(m1, m2);

  Rng shown = Rng(cfg.seed).derive(0);
  out.source_signals = sample_signals(m1, cfg.n_signals, shown);
  out.transported_signals = apply_transport_rows(plan, out.source_signals);

  Rng mc = Rng(cfg.seed).derive(1);
  const Matrix x = sample_signals(m1, cfg.monte_carlo, mc);
  const Matrix y = apply_transport_rows(plan, x);
  const Matrix cov = y.transpose() * y / static_cast<double>(cfg.monte_carlo);
  out.covariance_relative_error = relative_frobenius(cov, m2.covariance);
  out.covariance_sampling_scale = expected_covariance_error(m2.covariance, cfg.monte_carlo);
  const Matrix l1 = laplacian(out.source), l2 = laplacian(out.target);
  out.smoothness_untransported = mean_quadratic_form(x, l2);
  out.smoothness_transported = mean_quadratic_form(y, l2);
  out.smoothness_source = mean_quadratic_form(x, l1);

  const TransportPlan self = transport_map(m1, m1);
  Matrix centered = out.source_signals;
  for (Eigen::Index r = 0; r < centered.rows(); ++r) centered.row(r).array() -= centered.row(r).mean();
  out.self_transport_error = (apply_transport_rows(self, centered) - centered).cwiseAbs().maxCoeff();
  return out;
}

inline ExperimentReport transport_report(const TransportDemoConfig& cfg, const TransportDemoResult& r) {
  ExperimentReport report;
  report.experiment = "transport-demo";
  report.config = {{"side", cfg.side},     {"band_row", cfg.band_row},       {"band_length", cfg.band_length},
                   {"n_signals", cfg.n_signals}, {"monte_carlo", cfg.monte_carlo}, {"mode", cfg.mode.describe()},
                   {"seed", cfg.seed}};
  report.summary = {{"source_edges", r.source.edge_count()},
                    {"target_edges", r.target.edge_count()},
                    {"w2_squared", r.w2_squared},
                    {"covariance_relative_error", r.covariance_relative_error},
                    {"covariance_sampling_scale", r.covariance_sampling_scale},
                    {"smoothness_source_on_source", r.smoothness_source},
                    {"smoothness_untransported_on_target", r.smoothness_untransported},
                    {"smoothness_transported_on_target", r.smoothness_transported},
                    {"self_transport_max_error", r.self_transport_error}};
  return report;
}

}  // namespace got
