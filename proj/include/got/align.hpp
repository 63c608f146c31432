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

// Graph alignment by stochastic exploration.
//
// The relaxed assignment is P = S_tau(eta + sigma o eps) with eps ~ N(0, 1)
// entrywise and sigma = softplus(sigma_raw). The expected alignment cost
// E_eps[f(P)] is minimized over (eta, sigma_raw) with AMSGrad, using S fresh
// samples per iteration and exact reverse-mode gradients through the
// objective, the unrolled Sinkhorn iterations and the softplus map.

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "got/distance.hpp"
#include "got/error.hpp"
#include "got/graph.hpp"
#include "got/linalg.hpp"
#include "got/parallel.hpp"
#include "got/rng.hpp"
#include "got/sinkhorn.hpp"

namespace got {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Inverse of softplus for y > 0; y == 0 maps to a raw value whose softplus
/// and sigmoid both underflow to exactly zero.
inline double softplus_inverse(double y) {
  if (y <= 0.0) return -1e4;
  return y > 30.0 ? y : std::log(std::expm1(y));
}

/// Alignment cost of a relaxed assignment P (rows graph 2, columns graph 1).
class AlignmentObjective {
 public:
  virtual ~AlignmentObjective() = default;
  virtual int n() const = 0;
  virtual double value(const Matrix& p) const = 0;
  /// Returns the value and writes df/dP into `grad`.
  virtual double value_and_gradient(const Matrix& p, Matrix& grad) const = 0;
};

/// f(P) = W2^2(nu_1, N(0, P^T S2 P)).
class W2Objective final : public AlignmentObjective {
 public:
  W2Objective(GraphMeasure m1, GraphMeasure m2) : m1_(std::move(m1)), m2_(std::move(m2)) {
    detail::require_compatible(m1_, m2_, "W2Objective");
    trace1_ = m1_.covariance.trace();
  }

  int n() const override { return m1_.n(); }
  const GraphMeasure& source() const { return m1_; }
  const GraphMeasure& target() const { return m2_; }

  double value(const Matrix& p) const override {
    const Matrix c = p.transpose() * m2_.covariance * p;
    const SymmetricSpectrum spec = sym_eig(middle(c));
    return trace1_ + c.trace() - 2.0 * root_trace(spec, m1_.mode.rank_tol);
  }

  double value_and_gradient(const Matrix& p, Matrix& grad) const override {
    const Matrix& s2 = m2_.covariance;
    const Matrix& r = m1_.covariance_sqrt;
    const Matrix s2p = s2 * p;
    const Matrix c = p.transpose() * s2p;
    const SymmetricSpectrum spec = sym_eig(middle(c));
    const double threshold = m1_.mode.rank_tol * std::max(spec.max_eigenvalue(), 0.0);
    // d tr(M^{1/2}) / dM through the eigendecomposition rule.
    const Matrix grad_m =
        -2.0 * sqrtm_vjp(spec, Matrix::Identity(n(), n()), threshold);
    Matrix grad_c = r * grad_m * r;
    grad_c.diagonal().array() += 1.0;
    grad.noalias() = 2.0 * s2p * grad_c;
    return trace1_ + c.trace() - 2.0 * root_trace(spec, m1_.mode.rank_tol);
  }

 private:
  Matrix middle(const Matrix& c) const {
    const Matrix& r = m1_.covariance_sqrt;
    Matrix m = r * c * r;
    return 0.5 * (m + m.transpose());
  }

  GraphMeasure m1_;
  GraphMeasure m2_;
  double trace1_ = 0.0;
};

/// f(P) = ||L1 - P^T L2 P||_F^2, the Euclidean baseline.
class FrobeniusObjective final : public AlignmentObjective {
 public:
  FrobeniusObjective(const Graph& g1, const Graph& g2) : l1_(laplacian(g1)), l2_(laplacian(g2)) {
    if (g1.n() != g2.n()) fail(ErrorKind::kDimension, "FrobeniusObjective: vertex counts differ");
  }

  int n() const override { return static_cast<int>(l1_.rows()); }

  double value(const Matrix& p) const override { return (p.transpose() * l2_ * p - l1_).squaredNorm(); }

  double value_and_gradient(const Matrix& p, Matrix& grad) const override {
    const Matrix l2p = l2_ * p;
    const Matrix diff = p.transpose() * l2p - l1_;
    grad.noalias() = 4.0 * l2p * diff;
    return diff.squaredNorm();
  }

 private:
  Matrix l1_;
  Matrix l2_;
};

/// Parameters of the sampling distribution P_ij ~ N(eta_ij, sigma_ij^2).
struct RelaxationParams {
  Matrix eta;
  Matrix sigma_raw;

  Matrix sigma() const { return sigma_raw.unaryExpr([](double x) { return softplus(x); }); }
  int n() const { return static_cast<int>(eta.rows()); }
};

struct AmsGradConfig {
  double learning_rate = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool bias_correction = false;
};

enum class ObjectiveKind { kW2, kFrobenius };

struct SgdConfig {
  double learning_rate = 0.2;
  int samples = 30;
  int iterations = 3000;
  SinkhornConfig sinkhorn{};
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  ObjectiveKind objective = ObjectiveKind::kW2;
  /// Measure used inside the optimization loop; unset means a regularized
  /// shift of 0.1 times the mean degree of the two graphs.
  std::optional<MeasureMode> mode;
  /// Measure used for the reported aligned distance.
  MeasureMode report_mode = MeasureMode::exact();

  double init_eta_scale = 0.1;
  double init_sigma = 1.0;
  // Replaces the random eta draw when set.
  std::optional<Matrix> initial_eta;

  bool plateau_stop = false;
  int plateau_window = 200;
  double plateau_rel_improvement = 1e-6;

  int threads = 1;

  AmsGradConfig optimizer() const { return {learning_rate, beta1, beta2, epsilon}; }

  void validate() const {
    if (!(learning_rate > 0.0)) fail(ErrorKind::kParameter, "learning rate must be positive");
    if (samples < 1) fail(ErrorKind::kParameter, "sample size must be >= 1");
    if (iterations < 1) fail(ErrorKind::kParameter, "iterations must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      fail(ErrorKind::kParameter, "moment decay rates must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) fail(ErrorKind::kParameter, "epsilon must be positive");
    if (!(init_sigma >= 0.0) || !(init_eta_scale >= 0.0)) fail(ErrorKind::kParameter, "initial scales must be >= 0");
    if (plateau_window < 1) fail(ErrorKind::kParameter, "plateau window must be >= 1");
    sinkhorn.validate();
  }
};

struct CostGradient {
  double value = 0.0;
  Matrix grad_eta;
  Matrix grad_sigma_raw;
};

namespace detail {

struct SampleResult {
  double value = 0.0;
  Matrix grad_x;  // df/dX at X = eta + sigma o eps
};

inline SampleResult evaluate_sample(const Matrix& x, const AlignmentObjective& objective, const SinkhornConfig& cfg,
                                    bool with_gradient) {
  SampleResult out;
  if (!with_gradient) {
    out.value = objective.value(sinkhorn_operator(x, cfg).matrix);
    return out;
  }
  SinkhornTape tape;
  const DoublyStochastic p = sinkhorn_forward(x, cfg, tape);
  Matrix grad_p;
  out.value = objective.value_and_gradient(p.matrix, grad_p);
  out.grad_x = sinkhorn_backward(tape, grad_p);
  return out;
}

inline void require_shapes(const RelaxationParams& params, const std::vector<Matrix>& eps, int n) {
  if (params.eta.rows() != n || params.eta.cols() != n || params.sigma_raw.rows() != n || params.sigma_raw.cols() != n) {
    fail(ErrorKind::kDimension, "relaxation parameters do not match the graph size");
  }
  if (eps.empty()) fail(ErrorKind::kParameter, "at least one noise sample is required");
  for (const Matrix& e : eps)
    if (e.rows() != n || e.cols() != n) fail(ErrorKind::kDimension, "noise sample has the wrong shape");
}

}  // namespace detail

/// Mean over samples of f(S_tau(eta + sigma o eps_s)).
inline double stochastic_cost(const RelaxationParams& params, const AlignmentObjective& objective,
                              const std::vector<Matrix>& eps_samples, const SinkhornConfig& cfg) {
  detail::require_shapes(params, eps_samples, objective.n());
  const Matrix sigma = params.sigma();
  double total = 0.0;
  for (const Matrix& eps : eps_samples) {
    const Matrix x = params.eta + sigma.cwiseProduct(eps);
    total += detail::evaluate_sample(x, objective, cfg, false).value;
  }
  return total / static_cast<double>(eps_samples.size());
}

/// Value and exact gradient of stochastic_cost. Samples may be evaluated
/// concurrently; the reduction runs in sample order.
inline CostGradient cost_gradient(const RelaxationParams& params, const AlignmentObjective& objective,
                                  const std::vector<Matrix>& eps_samples, const SinkhornConfig& cfg, int threads = 1) {
  detail::require_shapes(params, eps_samples, objective.n());
  const Matrix sigma = params.sigma();
  const int count = static_cast<int>(eps_samples.size());
  std::vector<detail::SampleResult> results(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int s) {
    const Matrix x = params.eta + sigma.cwiseProduct(eps_samples[static_cast<std::size_t>(s)]);
    results[static_cast<std::size_t>(s)] = detail::evaluate_sample(x, objective, cfg, true);
  });
  const Matrix dsigma = params.sigma_raw.unaryExpr([](double x) { return sigmoid(x); });
  const int n = objective.n();
  CostGradient out{0.0, Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (int s = 0; s < count; ++s) {
    const auto& r = results[static_cast<std::size_t>(s)];
    out.value += r.value;
    out.grad_eta += r.grad_x;
    out.grad_sigma_raw += r.grad_x.cwiseProduct(eps_samples[static_cast<std::size_t>(s)]).cwiseProduct(dsigma);
  }
  const double inv = 1.0 / count;
  out.value *= inv;
  out.grad_eta *= inv;
  out.grad_sigma_raw *= inv;
  return out;
}

/// Central differences of `cost` with respect to every entry of eta and sigma_raw.
inline CostGradient finite_difference_gradient(const std::function<double(const RelaxationParams&)>& cost,
                                               const RelaxationParams& params, double step) {
  if (!(step > 0.0)) fail(ErrorKind::kParameter, "finite_difference_gradient: step must be positive");
  RelaxationParams probe = params;
  CostGradient out{cost(params), Matrix::Zero(params.eta.rows(), params.eta.cols()),
                   Matrix::Zero(params.sigma_raw.rows(), params.sigma_raw.cols())};
  auto differentiate = [&](Matrix RelaxationParams::*field, Matrix& grad) {
    Matrix& target = probe.*field;
    for (Eigen::Index j = 0; j < target.cols(); ++j) {
      for (Eigen::Index i = 0; i < target.rows(); ++i) {
        const double saved = target(i, j);
        target(i, j) = saved + step;
        const double up = cost(probe);
        target(i, j) = saved - step;
        const double down = cost(probe);
        target(i, j) = saved;
        grad(i, j) = (up - down) / (2.0 * step);
      }
    }
  };
  differentiate(&RelaxationParams::eta, out.grad_eta);
  differentiate(&RelaxationParams::sigma_raw, out.grad_sigma_raw);
  return out;
}

inline CostGradient finite_difference_gradient(const RelaxationParams& params, const AlignmentObjective& objective,
                                               const std::vector<Matrix>& eps_samples, const SinkhornConfig& cfg,
                                               double step) {
  return finite_difference_gradient(
      [&](const RelaxationParams& p) { return stochastic_cost(p, objective, eps_samples, cfg); }, params, step);
}

struct MomentState {
  Matrix m;
  Matrix v;
  Matrix v_hat;

  static MomentState zeros(Eigen::Index rows, Eigen::Index cols) {
    return {Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
  }
};

struct OptimizerState {
  RelaxationParams params;
  MomentState eta_moments;
  MomentState sigma_moments;
  long step = 0;

  static OptimizerState start(RelaxationParams params) {
    const auto n = params.eta.rows();
    return {std::move(params), MomentState::zeros(n, n), MomentState::zeros(n, n), 0};
  }
};

/// One AMSGrad update of a single parameter block:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  v_hat <- max(v_hat, v),
///   x <- x - lr m / (sqrt(v_hat) + eps).
inline void amsgrad_update(Matrix& param, MomentState& state, const Matrix& grad, const AmsGradConfig& cfg,
                           long step = 0) {
  require_same_size(param, grad, "amsgrad");
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  state.v_hat = state.v_hat.cwiseMax(state.v);
  double lr = cfg.learning_rate, denom_scale = 1.0;
  if (cfg.bias_correction) {
    const double t = static_cast<double>(step + 1);
    lr /= 1.0 - std::pow(cfg.beta1, t);
    denom_scale = 1.0 / std::sqrt(1.0 - std::pow(cfg.beta2, t));
  }
  param.array() -= lr * state.m.array() / (denom_scale * state.v_hat.array().sqrt() + cfg.epsilon);
}

inline OptimizerState amsgrad_step(OptimizerState state, const CostGradient& grads, const AmsGradConfig& cfg) {
  amsgrad_update(state.params.eta, state.eta_moments, grads.grad_eta, cfg, state.step);
  amsgrad_update(state.params.sigma_raw, state.sigma_moments, grads.grad_sigma_raw, cfg, state.step);
  ++state.step;
  return state;
}

struct AlignmentResult {
  DoublyStochastic soft_assignment;
  Permutation hard;
  double distance_aligned = 0.0;
  std::vector<double> loss_history;
  std::vector<double> wall_seconds;
  Matrix eta;
  Matrix sigma;
};

/// Noise matrices for iteration `t`, drawn from stream (seed, 1, t) in row-major order.
inline std::vector<Matrix> draw_noise(std::uint64_t seed, long t, int samples, int n) {
  Rng rng = Rng(seed).derive(1).derive(static_cast<std::uint64_t>(t));
  std::vector<Matrix> eps(static_cast<std::size_t>(samples), Matrix(n, n));
  for (Matrix& e : eps)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) e(i, j) = rng.normal();
  return eps;
}

/// Initial parameters drawn from stream (seed, 0): eta ~ N(0, scale^2) and
/// sigma = init_sigma everywhere.
inline RelaxationParams initial_params(const SgdConfig& cfg, int n) {
  Rng rng = Rng(cfg.seed).derive(0);
  RelaxationParams params{Matrix(n, n), Matrix::Constant(n, n, softplus_inverse(cfg.init_sigma))};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) params.eta(i, j) = cfg.init_eta_scale * rng.normal();
  if (cfg.initial_eta) {
    if (cfg.initial_eta->rows() != n || cfg.initial_eta->cols() != n) {
      fail(ErrorKind::kDimension, "initial eta has the wrong size");
    }
    params.eta = *cfg.initial_eta;
  }
  return params;
}

inline std::unique_ptr<AlignmentObjective> make_objective(const Graph& g1, const Graph& g2, const SgdConfig& cfg) {
  if (g1.n() != g2.n()) fail(ErrorKind::kDimension, "align: graphs have different vertex counts");
  if (cfg.objective == ObjectiveKind::kFrobenius) return std::make_unique<FrobeniusObjective>(g1, g2);
  const MeasureMode mode = cfg.mode.value_or(MeasureMode::regularized_relative(g1, g2));
  return std::make_unique<W2Objective>(graph_measure(g1, mode), graph_measure(g2, mode));
}

namespace detail {

inline bool plateaued(const std::vector<double>& history, const SgdConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.plateau_window);
  if (!cfg.plateau_stop || history.size() < 2 * w) return false;
  auto min_of = [&](std::size_t begin, std::size_t end) {
    return *std::min_element(history.begin() + static_cast<long>(begin), history.begin() + static_cast<long>(end));
  };
  const double before = min_of(0, history.size() - w);
  const double recent = min_of(history.size() - w, history.size());
  return before - recent <= cfg.plateau_rel_improvement * std::abs(before);
}

inline AlignmentResult finish(const Graph& g1, const Graph& g2, const SgdConfig& cfg, const Matrix& eta,
                              const Matrix& sigma, std::vector<double> history, std::vector<double> times) {
  AlignmentResult out;
  out.soft_assignment = sinkhorn_operator(eta, cfg.sinkhorn);
  out.hard = round_to_permutation(out.soft_assignment);
  out.distance_aligned = w2_squared_permuted(graph_measure(g1, cfg.report_mode), graph_measure(g2, cfg.report_mode),
                                             out.hard);
  out.loss_history = std::move(history);
  out.wall_seconds = std::move(times);
  out.eta = eta;
  out.sigma = sigma;
  return out;
}

inline void check_finite(const CostGradient& g, long t) {
  if (!std::isfinite(g.value) || !g.grad_eta.allFinite() || !g.grad_sigma_raw.allFinite()) {
    fail(ErrorKind::kNumerical, "non-finite cost or gradient at iteration " + std::to_string(t));
  }
}

}  // namespace detail

/// Aligns g2 onto g1. The returned permutation pairs vertex i of g2 with
/// vertex hard[i] of g1, so permute(g2, hard) is g2 in g1's labeling.
inline AlignmentResult align(const Graph& g1, const Graph& g2, const SgdConfig& cfg) {
  cfg.validate();
  const auto objective = make_objective(g1, g2, cfg);
  const int n = g1.n();
  OptimizerState state = OptimizerState::start(initial_params(cfg, n));
  const AmsGradConfig opt = cfg.optimizer();
  std::vector<double> history, times;
  history.reserve(static_cast<std::size_t>(cfg.iterations));
  const auto start = std::chrono::steady_clock::now();
  for (long t = 0; t < cfg.iterations; ++t) {
    const std::vector<Matrix> eps = draw_noise(cfg.seed, t, cfg.samples, n);
    CostGradient g;
    try {
      g = cost_gradient(state.params, *objective, eps, cfg.sinkhorn, cfg.threads);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " (iteration " + std::to_string(t) + ")");
    }
    detail::check_finite(g, t);
    history.push_back(g.value);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    state = amsgrad_step(std::move(state), g, opt);
    if (detail::plateaued(history, cfg)) break;
  }
  return detail::finish(g1, g2, cfg, state.params.eta, state.params.sigma(), std::move(history), std::move(times));
}

/// Deterministic descent on f(S_tau(eta)) with the same initialization and
/// optimizer as align, but no sampling noise.
inline AlignmentResult align_deterministic(const Graph& g1, const Graph& g2, const SgdConfig& cfg) {
  cfg.validate();
  const auto objective = make_objective(g1, g2, cfg);
  const int n = g1.n();
  Matrix eta = initial_params(cfg, n).eta;
  MomentState moments = MomentState::zeros(n, n);
  const AmsGradConfig opt = cfg.optimizer();
  std::vector<double> history, times;
  const auto start = std::chrono::steady_clock::now();
  for (long t = 0; t < cfg.iterations; ++t) {
    SinkhornTape tape;
    const DoublyStochastic p = sinkhorn_forward(eta, cfg.sinkhorn, tape);
    Matrix grad_p;
    const double value = objective->value_and_gradient(p.matrix, grad_p);
    const Matrix grad = sinkhorn_backward(tape, grad_p);
    if (!std::isfinite(value) || !grad.allFinite()) {
      fail(ErrorKind::kNumerical, "non-finite cost or gradient at iteration " + std::to_string(t));
    }
    history.push_back(value);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    amsgrad_update(eta, moments, grad, opt);
    if (detail::plateaued(history, cfg)) break;
  }
  return detail::finish(g1, g2, cfg, eta, Matrix::Zero(n, n), std::move(history), std::move(times));
}

/// CSV with columns iteration,cost,wall_seconds.
inline std::string iteration_log_csv(const AlignmentResult& result) {
  std::string out = "iteration,cost,wall_seconds\n";
  for (std::size_t t = 0; t < result.loss_history.size(); ++t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", t, result.loss_history[t], result.wall_seconds[t]);
    out += buf;
  }
  return out;
}

}  // namespace got
