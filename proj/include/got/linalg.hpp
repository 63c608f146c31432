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

// Dense symmetric linear algebra: eigendecomposition, pseudo-inverse,
// regularized inverse and PSD square roots (spectral and Newton-Schulz).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "got/error.hpp"

namespace got {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kSymmetryTol = 1e-8;

/// Eigenvalues ascending, eigenvectors as orthonormal columns in the same order.
struct SymmetricSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index size() const { return eigenvalues.size(); }
  double max_eigenvalue() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

inline void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    fail(ErrorKind::kDimension, std::string(what) + ": expected a square matrix, got " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

inline void require_same_size(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::kDimension, std::string(what) + ": size mismatch " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
  }
}

/// Returns (A + A^T) / 2 after checking that A is symmetric within tolerance.
inline Matrix symmetrized(const Matrix& a, const char* what) {
  require_square(a, what);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    fail(ErrorKind::kPrecondition, std::string(what) + ": matrix is not symmetric");
  }
  return 0.5 * (a + a.transpose());
}

/// Symmetric eigendecomposition (tridiagonal QR via Eigen).
inline SymmetricSpectrum sym_eig(const Matrix& a) {
  const Matrix sym = symmetrized(a, "sym_eig");
  if (!sym.allFinite()) fail(ErrorKind::kNumerical, "sym_eig: non-finite input");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorKind::kNumerical, "sym_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Cyclic Jacobi rotations. Slower than sym_eig but independent of it.
inline SymmetricSpectrum jacobi_eig(const Matrix& a, int max_sweeps = 100, double tol = 1e-12) {
  Matrix m = symmetrized(a, "jacobi_eig");
  const Eigen::Index n = m.rows();
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(m.norm(), 1e-300);
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (std::sqrt(2.0 * off) <= tol * scale) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (std::sqrt(2.0 * off) > tol * scale) fail(ErrorKind::kNumerical, "jacobi_eig: sweep cap reached");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return m(x, x) < m(y, y); });
  SymmetricSpectrum out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = m(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Threshold below which an eigenvalue counts as zero. Throws if the spectrum
/// has a negative eigenvalue beyond roundoff.
inline double psd_threshold(const SymmetricSpectrum& spec, double rank_tol, const char* what) {
  if (!(rank_tol > 0.0)) fail(ErrorKind::kParameter, std::string(what) + ": rank_tol must be positive");
  const double lmax = std::max(spec.max_eigenvalue(), 0.0);
  const double threshold = rank_tol * lmax;
  if (spec.size() && spec.eigenvalues(0) < -threshold && spec.eigenvalues(0) < 0.0) {
    fail(ErrorKind::kPrecondition, std::string(what) + ": matrix is not positive semidefinite (eigenvalue " +
                                       std::to_string(spec.eigenvalues(0)) + ")");
  }
  return threshold;
}

/// U f(diag) U^T over eigenvalues above `threshold`; others map to zero.
template <typename F>
Matrix spectral_apply(const SymmetricSpectrum& spec, double threshold, F&& f) {
  const Eigen::Index n = spec.size();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = spec.eigenvalues(i);
    d(i) = lambda > threshold ? f(lambda) : 0.0;
  }
  Matrix out = spec.eigenvectors * d.asDiagonal() * spec.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

inline Matrix pseudo_inverse(const SymmetricSpectrum& spec, double rank_tol = kDefaultRankTol) {
  const double threshold = psd_threshold(spec, rank_tol, "pseudo_inverse");
  return spectral_apply(spec, threshold, [](double l) { return 1.0 / l; });
}

/// Moore-Penrose inverse of a symmetric PSD matrix. Eigenvalues at or below
/// rank_tol * lambda_max are treated as zero.
inline Matrix pseudo_inverse(const Matrix& a, double rank_tol = kDefaultRankTol) {
  return pseudo_inverse(sym_eig(a), rank_tol);
}

/// (L + alpha I)^{-1}.
inline Matrix regularized_inverse(const Matrix& laplacian, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorKind::kParameter, "regularized_inverse: alpha must be positive");
  const Matrix shifted = symmetrized(laplacian, "regularized_inverse") +
                         alpha * Matrix::Identity(laplacian.rows(), laplacian.cols());
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::kPrecondition, "regularized_inverse: L + alpha I is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(laplacian.rows(), laplacian.cols()));
  return 0.5 * (inv + inv.transpose());
}

inline Matrix sqrtm_psd(const SymmetricSpectrum& spec, double rank_tol = kDefaultRankTol) {
  psd_threshold(spec, rank_tol, "sqrtm_psd");
  // Roundoff negatives clamp to zero; small positives are kept.
  return spectral_apply(spec, 0.0, [](double l) { return std::sqrt(l); });
}

inline Matrix sqrtm_psd(const Matrix& a, double rank_tol = kDefaultRankTol) {
  return sqrtm_psd(sym_eig(a), rank_tol);
}

/// (A^dagger)^{1/2}: square root of the pseudo-inverse.
inline Matrix pinv_sqrtm(const SymmetricSpectrum& spec, double rank_tol = kDefaultRankTol) {
  const double threshold = psd_threshold(spec, rank_tol, "pinv_sqrtm");
  return spectral_apply(spec, threshold, [](double l) { return 1.0 / std::sqrt(l); });
}

/// Coupled Newton-Schulz iteration for the PSD square root.
///
/// The input is scaled by min(trace, max row sum) so the spectrum lies in
/// (0, 1]; the result is rescaled by the square root of that factor. Stops
/// early once the residual reaches roundoff.
inline Matrix sqrtm_newton_schulz(const Matrix& a, int iters = 15) {
  if (iters < 1) fail(ErrorKind::kParameter, "sqrtm_newton_schulz: iters must be >= 1");
  const Matrix sym = symmetrized(a, "sqrtm_newton_schulz");
  const Eigen::Index n = sym.rows();
  const double trace = sym.trace();
  if (trace < 0.0) fail(ErrorKind::kPrecondition, "sqrtm_newton_schulz: negative trace");
  if (trace == 0.0) return Matrix::Zero(n, n);
  // Both the trace and the max row sum bound the top eigenvalue; take the tighter.
  const double scale = std::min(trace, sym.cwiseAbs().rowwise().sum().maxCoeff());
  const Matrix target = sym / scale;
  const Matrix identity = Matrix::Identity(n, n);
  Matrix y = target;
  Matrix z = identity;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * target.norm();
  double prev_residual = (y * y - target).norm();
  int growth = 0;
  for (int k = 0; k < iters && prev_residual > floor; ++k) {
    const Matrix t = 0.5 * (3.0 * identity - z * y);
    y = y * t;
    z = t * z;
    const double residual = (y * y - target).norm();
    if (!std::isfinite(residual)) fail(ErrorKind::kNumerical, "sqrtm_newton_schulz: non-finite iterate");
    growth = residual > prev_residual ? growth + 1 : 0;
    if (growth >= 2) fail(ErrorKind::kNumerical, "sqrtm_newton_schulz: residual diverging");
    prev_residual = residual;
  }
  Matrix out = std::sqrt(scale) * y;
  return 0.5 * (out + out.transpose());
}

/// Vector-Jacobian product of the PSD square root at A = U diag(l) U^T:
/// returns U (F o (U^T G U)) U^T with F_ij = 1 / (sqrt(l_i) + sqrt(l_j)).
/// Eigenpairs at or below `threshold` are excluded.
inline Matrix sqrtm_vjp(const SymmetricSpectrum& spec, const Matrix& upstream, double threshold) {
  const Eigen::Index n = spec.size();
  const Matrix& u = spec.eigenvectors;
  Matrix inner = u.transpose() * (0.5 * (upstream + upstream.transpose())) * u;
  Vector root(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    root(i) = spec.eigenvalues(i) > threshold ? std::sqrt(spec.eigenvalues(i)) : -1.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      inner(i, j) = (root(i) < 0.0 || root(j) < 0.0) ? 0.0 : inner(i, j) / (root(i) + root(j));
    }
  }
  return u * inner * u.transpose();
}

inline double relative_frobenius(const Matrix& approx, const Matrix& exact) {
  const double denom = exact.norm();
  return denom > 0.0 ? (approx - exact).norm() / denom : approx.norm();
}

}  // namespace got
