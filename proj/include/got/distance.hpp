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

// Gaussian smooth-signal measures on graphs and the closed-form
// Wasserstein-2 distance between them.
//
// A graph with Laplacian L carries signals x ~ N(0, S) with S = pinv(L)
// (exact mode) or S = (L + alpha I)^{-1} (regularized mode). For two such
// measures with covariances S1, S2 and R = S1^{1/2}:
//
//   W2^2 = tr(S1) + tr(S2) - 2 tr((R S2 R)^{1/2})
//
// and the optimal map is T = R^+ (R S2 R)^{1/2} R^+, which satisfies
// T S1 T^T = S2.

#include <cmath>
#include <string>

#include "got/error.hpp"
#include "got/graph.hpp"
#include "got/linalg.hpp"
#include "got/rng.hpp"

namespace got {

struct MeasureMode {
  enum class Kind { kExactPinv, kRegularized };

  Kind kind = Kind::kExactPinv;
  double rank_tol = kDefaultRankTol;
  double alpha = 0.0;

  static MeasureMode exact(double rank_tol = kDefaultRankTol) { return {Kind::kExactPinv, rank_tol, 0.0}; }
  static MeasureMode regularized(double alpha) {
    if (!(alpha > 0.0)) fail(ErrorKind::kParameter, "regularized mode needs alpha > 0");
    return {Kind::kRegularized, kDefaultRankTol, alpha};
  }
  /// Shift of `relative` times the mean vertex degree over both graphs.
  static MeasureMode regularized_relative(const Graph& g1, const Graph& g2, double relative = 0.1) {
    const double total = g1.weights().sum() + g2.weights().sum();
    const double mean_degree = total / static_cast<double>(g1.n() + g2.n());
    return regularized(relative * (mean_degree > 0.0 ? mean_degree : 1.0));
  }

  bool is_exact() const { return kind == Kind::kExactPinv; }

  std::string describe() const {
    return is_exact() ? "exact" : "reg:" + std::to_string(alpha);
  }

  friend bool operator==(const MeasureMode&, const MeasureMode&) = default;
};

/// Zero-mean Gaussian signal model of a graph. Immutable.
struct GraphMeasure {
  Matrix covariance;
  Matrix covariance_sqrt;
  MeasureMode mode;

  int n() const { return static_cast<int>(covariance.rows()); }
};

inline GraphMeasure graph_measure(const Graph& g, const MeasureMode& mode) {
  if (mode.is_exact() && !g.is_connected()) {
    fail(ErrorKind::kPrecondition, "graph_measure: exact mode requires a connected graph");
  }
  const SymmetricSpectrum spec = sym_eig(laplacian(g));
  GraphMeasure m;
  m.mode = mode;
  if (mode.is_exact()) {
    m.covariance = pseudo_inverse(spec, mode.rank_tol);
    m.covariance_sqrt = pinv_sqrtm(spec, mode.rank_tol);
  } else {
    if (!(mode.alpha > 0.0)) fail(ErrorKind::kParameter, "graph_measure: alpha must be positive");
    const double alpha = mode.alpha;
    // Shifted spectrum is strictly positive, so threshold -1 keeps every pair.
    m.covariance = spectral_apply(spec, -1.0, [alpha](double l) { return 1.0 / (std::max(l, 0.0) + alpha); });
    m.covariance_sqrt =
        spectral_apply(spec, -1.0, [alpha](double l) { return 1.0 / std::sqrt(std::max(l, 0.0) + alpha); });
  }
  return m;
}

/// tr(M^{1/2}) over eigenvalues above rank_tol * lambda_max. Dropping the
/// roundoff-level eigenvalues keeps the value smooth where M is singular.
inline double root_trace(const SymmetricSpectrum& spec, double rank_tol) {
  const double threshold = rank_tol * std::max(spec.max_eigenvalue(), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    if (spec.eigenvalues(i) > threshold) total += std::sqrt(spec.eigenvalues(i));
  }
  return total;
}

namespace detail {

inline void require_compatible(const GraphMeasure& a, const GraphMeasure& b, const char* what) {
  if (a.n() != b.n()) {
    fail(ErrorKind::kDimension, std::string(what) + ": dimensions " + std::to_string(a.n()) + " and " +
                                    std::to_string(b.n()) + " differ");
  }
  if (!(a.mode == b.mode)) fail(ErrorKind::kParameter, std::string(what) + ": measures use different modes");
}

inline double clamp_w2(double value, double scale) {
  const double tol = std::max(1e-9, 1e-12 * scale);
  if (!std::isfinite(value)) fail(ErrorKind::kNumerical, "w2_squared: non-finite value");
  if (value < -tol) fail(ErrorKind::kNumerical, "w2_squared: negative value " + std::to_string(value));
  return std::max(value, 0.0);
}

inline double trace_sqrt(const Matrix& m, double rank_tol) {
  return root_trace(sym_eig(m), rank_tol);
}

}  // namespace detail

/// W2^2 between measure a and a Gaussian with covariance `other_cov`.
inline double w2_squared_to_covariance(const GraphMeasure& a, const Matrix& other_cov) {
  const Matrix& r = a.covariance_sqrt;
  const Matrix middle = r * other_cov * r;
  const double traces = a.covariance.trace() + other_cov.trace();
  return detail::clamp_w2(traces - 2.0 * detail::trace_sqrt(middle, a.mode.rank_tol), traces);
}

/// Closed-form W2^2 between two aligned graph measures.
inline double w2_squared(const GraphMeasure& m1, const GraphMeasure& m2) {
  detail::require_compatible(m1, m2, "w2_squared");
  return w2_squared_to_covariance(m1, m2.covariance);
}

/// W2^2 between m1 and m2 relabeled by P (rows index graph 2, columns graph 1),
/// i.e. against covariance P^T S2 P. P may be a relaxed doubly stochastic matrix.
inline double w2_squared_permuted(const GraphMeasure& m1, const GraphMeasure& m2, const Matrix& p) {
  detail::require_compatible(m1, m2, "w2_squared_permuted");
  if (p.rows() != m1.n() || p.cols() != m1.n()) fail(ErrorKind::kDimension, "w2_squared_permuted: P has wrong size");
  if ((p.array() < 0.0).any()) fail(ErrorKind::kParameter, "w2_squared_permuted: P has negative entries");
  const Matrix permuted = p.transpose() * m2.covariance * p;
  return w2_squared_to_covariance(m1, permuted);
}

inline double w2_squared_permuted(const GraphMeasure& m1, const GraphMeasure& m2, const Permutation& p) {
  return w2_squared_permuted(m1, m2, p.matrix());
}

/// Linear map between signal spaces of two aligned graphs.
struct TransportPlan {
  Matrix map_matrix;
  MeasureMode mode;

  int n() const { return static_cast<int>(map_matrix.rows()); }
};

inline TransportPlan transport_map(const GraphMeasure& m1, const GraphMeasure& m2) {
  detail::require_compatible(m1, m2, "transport_map");
  const Matrix& r = m1.covariance_sqrt;
  const SymmetricSpectrum r_spec = sym_eig(r);
  // R^+ on the support of S1; R is PSD so its pseudo-inverse is spectral.
  const double threshold = std::sqrt(m1.mode.rank_tol) * std::max(r_spec.max_eigenvalue(), 0.0);
  const Matrix r_pinv = spectral_apply(r_spec, threshold, [](double l) { return 1.0 / l; });
  const Matrix middle_sqrt = sqrtm_psd(Matrix(r * m2.covariance * r), m1.mode.rank_tol);
  Matrix t = r_pinv * middle_sqrt * r_pinv;
  return {0.5 * (t + t.transpose()), m1.mode};
}

inline Vector apply_transport(const TransportPlan& t, const Vector& x) {
  if (x.size() != t.n()) fail(ErrorKind::kDimension, "apply_transport: signal length does not match plan");
  return t.map_matrix * x;
}

/// Row-wise application: each row of `signals` is one signal.
inline Matrix apply_transport_rows(const TransportPlan& t, const Matrix& signals) {
  if (signals.cols() != t.n()) fail(ErrorKind::kDimension, "apply_transport: signal length does not match plan");
  return signals * t.map_matrix.transpose();
}

inline double frobenius_laplacian_distance(const Graph& g1, const Graph& g2) {
  if (g1.n() != g2.n()) fail(ErrorKind::kDimension, "frobenius_laplacian_distance: vertex counts differ");
  return (laplacian(g1) - laplacian(g2)).norm();
}

/// Draws `count` signals from the measure as rows: x = S^{1/2} z, z ~ N(0, I).
inline Matrix sample_signals(const GraphMeasure& m, int count, Rng& rng) {
  Matrix z(count, m.n());
  for (int r = 0; r < count; ++r)
    for (int c = 0; c < m.n(); ++c) z(r, c) = rng.normal();
  return z * m.covariance_sqrt;  // covariance_sqrt is symmetric
}

}  // namespace got
