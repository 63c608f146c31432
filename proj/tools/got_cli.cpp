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

// Command-line front end: dist, align, transport, bench, gen.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "got/align.hpp"
#include "got/bench.hpp"
#include "got/distance.hpp"
#include "got/error.hpp"
#include "got/generators.hpp"
#include "got/graph_io.hpp"
#include "got/parallel.hpp"

namespace {

using namespace got;
using Json = nlohmann::json;

constexpr int kConfigExit = 5;

struct Options {
  std::string graph_a, graph_b;
  std::optional<double> tau, gamma;
  std::optional<int> samples, iterations;
  std::uint64_t seed = 0;
  std::string mode;
  std::string format = "json";
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--mode", o.mode, "Measure mode: exact | reg:<alpha>");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

void add_sgd(CLI::App* cmd, Options& o) {
  cmd->add_option("--tau", o.tau, "Sinkhorn temperature");
  cmd->add_option("--gamma", o.gamma, "Learning rate");
  cmd->add_option("--samples", o.samples, "Noise samples per iteration");
  cmd->add_option("--iterations", o.iterations, "Optimizer iterations");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
}

std::optional<MeasureMode> parse_mode(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "exact") return MeasureMode::exact();
  if (text.rfind("reg:", 0) == 0) {
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(text.substr(4), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 4) fail(ErrorKind::kParameter, "bad --mode value '" + text + "'");
    return MeasureMode::regularized(alpha);
  }
  fail(ErrorKind::kParameter, "bad --mode value '" + text + "' (expected exact or reg:<alpha>)");
}

SgdConfig sgd_config(const Options& o) {
  SgdConfig cfg;
  if (o.tau) cfg.sinkhorn.tau = *o.tau;
  if (o.gamma) cfg.learning_rate = *o.gamma;
  if (o.samples) cfg.samples = *o.samples;
  if (o.iterations) cfg.iterations = *o.iterations;
  cfg.seed = o.seed;
  cfg.mode = parse_mode(o.mode);
  cfg.threads = threads_from_env();
  cfg.validate();
  return cfg;
}

std::string out_path(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out_dir);
  return (std::filesystem::path(o.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) { detail::write_file(path, text); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_dist(const Options& o) {
  const Graph a = read_graph(o.graph_a), b = read_graph(o.graph_b);
  if (a.n() != b.n()) fail(ErrorKind::kDimension, "graphs have different vertex counts");
  const MeasureMode mode = parse_mode(o.mode).value_or(MeasureMode::exact());
  const double w2 = w2_squared(graph_measure(a, mode), graph_measure(b, mode));
  const double fro = frobenius_laplacian_distance(a, b);
  if (o.format == "csv")
    std::cout << "w2_squared,frobenius\n" << format_double(w2) << "," << format_double(fro) << "\n";
  else
    std::cout << Json{{"w2_squared", w2}, {"frobenius", fro}}.dump() << "\n";
  return 0;
}

Json permutation_json(const AlignmentResult& r, const SgdConfig& cfg) {
  return {{"permutation", r.hard.mapping()},
          {"distance_aligned", r.distance_aligned},
          {"final_cost", r.loss_history.empty() ? 0.0 : r.loss_history.back()},
          {"iterations", r.loss_history.size()},
          {"seed", cfg.seed},
          {"tau", cfg.sinkhorn.tau},
          {"learning_rate", cfg.learning_rate},
          {"samples", cfg.samples}};
}

std::string loss_csv(const AlignmentResult& r) {
  std::string out = "iteration,cost\n";
  for (std::size_t t = 0; t < r.loss_history.size(); ++t)
    out += std::to_string(t) + "," + format_double(r.loss_history[t]) + "\n";
  return out;
}

int cmd_align(const Options& o, const std::string& iteration_log) {
  const SgdConfig cfg = sgd_config(o);
  const Graph a = read_graph(o.graph_a), b = read_graph(o.graph_b);
  const AlignmentResult r = align(a, b, cfg);
  const Json perm = permutation_json(r, cfg);
  if (o.format == "csv") {
    std::string text = "graph_b_vertex,graph_a_vertex\n";
    for (int i = 0; i < r.hard.n(); ++i) text += std::to_string(i) + "," + std::to_string(r.hard[i]) + "\n";
    write_text(out_path(o, "permutation.csv"), text);
  } else {
    write_text(out_path(o, "permutation.json"), dump(perm));
  }
  write_text(out_path(o, "soft_assignment.csv"), signals_to_csv(r.soft_assignment.matrix));
  write_text(out_path(o, "loss.csv"), loss_csv(r));
  if (!iteration_log.empty()) write_text(iteration_log, iteration_log_csv(r));
  std::cout << perm.dump() << "\n";
  return 0;
}

Permutation read_permutation(const std::string& path) {
  const std::string text = detail::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::kParse, "permutation file '" + path + "': " + e.what());
  }
  const Json& m = j.is_object() && j.contains("permutation") ? j["permutation"] : j;
  if (!m.is_array()) fail(ErrorKind::kParse, "permutation file '" + path + "': expected an integer array");
  std::vector<int> mapping;
  for (const Json& v : m) {
    if (!v.is_number_integer()) fail(ErrorKind::kParse, "permutation file '" + path + "': non-integer entry");
    mapping.push_back(v.get<int>());
  }
  try {
    return Permutation(std::move(mapping));
  } catch (const Error& e) {
    fail(ErrorKind::kParse, "permutation file '" + path + "': " + e.what());
  }
}

int cmd_transport(const Options& o, const std::string& signals, const std::string& output,
                  const std::string& permutation) {
  const Graph a = read_graph(o.graph_a);
  Graph b = read_graph(o.graph_b);
  if (a.n() != b.n()) fail(ErrorKind::kDimension, "graphs have different vertex counts");
  if (!permutation.empty()) {
    const Permutation p = read_permutation(permutation);
    if (p.n() != b.n()) fail(ErrorKind::kDimension, "permutation size does not match the graphs");
    b = permute(b, p);
  }
  const Matrix x = read_signals(signals);
  if (x.cols() != a.n()) fail(ErrorKind::kDimension, "signal length does not match the graph size");
  const MeasureMode mode = parse_mode(o.mode).value_or(MeasureMode::exact());
  const TransportPlan plan = transport_map(graph_measure(a, mode), graph_measure(b, mode));
  const std::string text = signals_to_csv(apply_transport_rows(plan, x));
  if (output.empty() || output == "-")
    std::cout << text;
  else
    write_text(output, text);
  return 0;
}

struct BenchOptions {
  std::string experiment;
  std::optional<int> trials, n, per_model;
  bool smoke = false;
  bool full_scale = false;
  std::vector<double> grid;
};

void write_report(const Options& o, const ExperimentReport& r) {
  if (o.format == "csv") {
    write_text(out_path(o, r.experiment + "_trials.csv"), trials_csv(r));
    write_text(out_path(o, r.experiment + "_aggregates.csv"), aggregates_csv(r));
  } else {
    write_text(out_path(o, r.experiment + "_report.json"), dump(to_json(r)));
  }
}

void apply_sgd_overrides(const Options& o, const BenchOptions& b, SgdConfig& cfg) {
  if (b.full_scale) cfg.iterations = 3000;
  if (b.smoke) cfg.iterations = 100;
  if (o.tau) cfg.sinkhorn.tau = *o.tau;
  if (o.gamma) cfg.learning_rate = *o.gamma;
  if (o.samples) cfg.samples = *o.samples;
  if (o.iterations) cfg.iterations = *o.iterations;
  if (const auto m = parse_mode(o.mode)) cfg.mode = m;
}

int cmd_bench(const Options& o, const BenchOptions& b) {
  const int threads = threads_from_env();
  if (b.experiment == "sbm-align") {
    NoisyAlignmentConfig cfg;
    cfg.seed = o.seed;
    cfg.threads = threads;
    if (b.full_scale) cfg.trials = 50;
    if (b.smoke) {
      cfg.n = 20;
      cfg.trials = 3;
      cfg.p_inter_grid = {0.0, 0.2, 0.4};
    }
    if (b.trials) cfg.trials = *b.trials;
    if (b.n) cfg.n = *b.n;
    if (!b.grid.empty()) cfg.p_inter_grid = b.grid;
    apply_sgd_overrides(o, b, cfg.sgd);
    const ExperimentReport r = noisy_alignment_experiment(cfg);
    write_report(o, r);
    std::cout << to_json(r)["summary"].dump() << "\n";
    return 0;
  }
  if (b.experiment == "classify") {
    ClassificationConfig cfg;
    cfg.seed = o.seed;
    cfg.threads = threads;
    if (b.full_scale) cfg.per_model = 20;
    if (b.smoke) cfg.per_model = 2;
    if (b.per_model) cfg.per_model = *b.per_model;
    if (b.n) cfg.n = *b.n;
    apply_sgd_overrides(o, b, cfg.sgd);
    const ClassificationResult res = classification_experiment(cfg);
    const ExperimentReport r = classification_report(cfg, res);
    write_report(o, r);
    if (o.format == "csv") {
      write_text(out_path(o, "classify_confusion_got.csv"), confusion_csv(res.model_names, res.got.confusion));
      write_text(out_path(o, "classify_confusion_frobenius.csv"),
                 confusion_csv(res.model_names, res.frobenius.confusion));
    }
    std::cout << Json{{"got_accuracy", res.got.accuracy}, {"frobenius_accuracy", res.frobenius.accuracy}}.dump()
              << "\n";
    return 0;
  }
  if (b.experiment == "transport-demo") {
    TransportDemoConfig cfg;
    cfg.seed = o.seed;
    if (b.n) cfg.side = *b.n;
    if (const auto m = parse_mode(o.mode)) cfg.mode = *m;
    const TransportDemoResult res = signal_transport_demo(cfg);
    const ExperimentReport r = transport_report(cfg, res);
    write_report(o, r);
    write_text(out_path(o, "transport_source_signals.csv"), signals_to_csv(res.source_signals));
    write_text(out_path(o, "transport_target_signals.csv"), signals_to_csv(res.transported_signals));
    std::cout << r.summary.dump() << "\n";
    return 0;
  }
  fail(ErrorKind::kParameter, "unknown experiment '" + b.experiment + "' (expected sbm-align, classify or transport-demo)");
}

int cmd_gen(const std::string& model_text, int n, std::uint64_t seed, const std::string& output,
            const std::string& format) {
  const Graph g = generate(parse_model(model_text), n, seed);
  std::string text;
  if (format == "csv") {
    for (const Edge& e : g.edges()) text += std::to_string(e.i) + " " + std::to_string(e.j) + " " + format_double(e.w) + "\n";
  } else {
    text = graph_to_json(g);
  }
  if (output.empty() || output == "-")
    std::cout << text;
  else
    write_text(output, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph alignment and comparison with Wasserstein distances between graph signal distributions"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Options o;
  CLI::App* dist = app.add_subcommand("dist", "W2^2 and Frobenius distance between two aligned graphs");
  dist->add_option("graph_a", o.graph_a)->required();
  dist->add_option("graph_b", o.graph_b)->required();
  add_common(dist, o);

  std::string iteration_log;
  CLI::App* al = app.add_subcommand("align", "Align graph_b onto graph_a");
  al->add_option("graph_a", o.graph_a)->required();
  al->add_option("graph_b", o.graph_b)->required();
  add_common(al, o);
  add_sgd(al, o);
  al->add_option("--iteration-log", iteration_log, "Optional CSV with per-iteration cost and wall time");

  std::string signals, output, permutation;
  CLI::App* tr = app.add_subcommand("transport", "Transport signals from graph_a to graph_b");
  tr->add_option("graph_a", o.graph_a)->required();
  tr->add_option("graph_b", o.graph_b)->required();
  tr->add_option("signals", signals, "CSV, one signal per row")->required();
  tr->add_option("output", output, "Output CSV (stdout when omitted)");
  tr->add_option("--permutation", permutation, "Permutation JSON relabelling graph_b onto graph_a");
  add_common(tr, o);

  BenchOptions b;
  CLI::App* bench = app.add_subcommand("bench", "Run an experiment: sbm-align | classify | transport-demo");
  bench->add_option("experiment", b.experiment)->required();
  add_common(bench, o);
  add_sgd(bench, o);
  bench->add_option("--trials", b.trials, "Trials per grid point (sbm-align)");
  bench->add_option("--n", b.n, "Vertex count (grid side for transport-demo)");
  bench->add_option("--per-model", b.per_model, "Graphs per model (classify)");
  bench->add_option("--p-inter", b.grid, "Inter-community removal grid (sbm-align)");
  bench->add_flag("--smoke", b.smoke, "Small, fast configuration");
  bench->add_flag("--full-scale", b.full_scale, "50 trials, 20 graphs per model, 3000 iterations");

  std::string model_text, gen_out;
  int gen_n = 20;
  CLI::App* gen = app.add_subcommand("gen", "Sample a random graph: sbm:k:pin:pout | ba:m | ws:k:p | regular:d");
  gen->add_option("model", model_text)->required();
  gen->add_option("--n", gen_n, "Vertex count");
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--output,-o", gen_out, "Output file (stdout when omitted)");
  gen->add_option("--format", o.format, "json or csv (edge list)")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (*dist) return cmd_dist(o);
    if (*al) return cmd_align(o, iteration_log);
    if (*tr) return cmd_transport(o, signals, output, permutation);
    if (*bench) return cmd_bench(o, b);
    if (*gen) return cmd_gen(model_text, gen_n, o.seed, gen_out, o.format);
  } catch (const Error& e) {
    std::cerr << "got: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "got: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "got: " << e.what() << "\n";
    return 4;
  }
  return kConfigExit;
}
