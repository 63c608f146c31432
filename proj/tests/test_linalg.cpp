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

#include <cmath>

#include <gtest/gtest.h>

#include "got/error.hpp"
#include "got/graph.hpp"
#include "got/linalg.hpp"
#include "test_util.hpp"

namespace got {
namespace {

using testing::random_connected_graph;
using testing::random_matrix;
using testing::random_symmetric;
using testing::with_spectrum;

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

void expect_spectrum_invariants(const Matrix& a, const SymmetricSpectrum& s) {
  const int n = static_cast<int>(a.rows());
  EXPECT_LT(relative_frobenius(s.reconstruct(), a), 1e-10);
  EXPECT_LT((s.eigenvectors.transpose() * s.eigenvectors - Matrix::Identity(n, n)).norm(), 1e-10);
  for (int i = 1; i < n; ++i) EXPECT_LE(s.eigenvalues(i - 1), s.eigenvalues(i));
}

TEST(SymEig, Identity) {
  const Matrix a = Matrix::Identity(3, 3);
  const SymmetricSpectrum s = sym_eig(a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.eigenvalues(i), 1.0, 1e-14);
  expect_spectrum_invariants(a, s);
}

TEST(SymEig, TwoNodeLaplacian) {
  const SymmetricSpectrum s = sym_eig(m2(1, -1, -1, 1));
  EXPECT_NEAR(s.eigenvalues(0), 0.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), 2.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(s.eigenvectors(0, 0)), r, 1e-14);
  EXPECT_NEAR(s.eigenvectors(0, 0), s.eigenvectors(1, 0), 1e-14);
  EXPECT_NEAR(std::abs(s.eigenvectors(0, 1)), r, 1e-14);
  EXPECT_NEAR(s.eigenvectors(0, 1), -s.eigenvectors(1, 1), 1e-14);
}

TEST(SymEig, RandomMatchesJacobiOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_symmetric(8, rng);
    const SymmetricSpectrum s = sym_eig(a);
    expect_spectrum_invariants(a, s);
    const SymmetricSpectrum j = jacobi_eig(a);
    expect_spectrum_invariants(a, j);
    EXPECT_LT((s.eigenvalues - j.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SymEig, Errors) {
  EXPECT_THROW(
      try { sym_eig(Matrix::Zero(2, 3)); } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDimension);
        throw;
      },
      Error);
  EXPECT_THROW(sym_eig(m2(1, 2, 0, 1)), Error);
  Rng rng(1);
  EXPECT_THROW(jacobi_eig(random_symmetric(6, rng), 0), Error);
}

TEST(SymEig, SymmetrizesWithinTolerance) {
  Matrix a = m2(2, 1, 1 + 1e-12, 2);
  const SymmetricSpectrum s = sym_eig(a);
  EXPECT_NEAR(s.eigenvalues(0), 1.0, 1e-11);
  EXPECT_NEAR(s.eigenvalues(1), 3.0, 1e-11);
}

TEST(PseudoInverse, Examples) {
  EXPECT_LT((pseudo_inverse(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm(), 1e-14);
  EXPECT_LT((pseudo_inverse(m2(1, -1, -1, 1)) - m2(0.25, -0.25, -0.25, 0.25)).norm(), 1e-14);
  EXPECT_EQ(pseudo_inverse(Matrix::Zero(3, 3)).norm(), 0.0);
}

TEST(PseudoInverse, PenroseConditionsAndInvolution) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix l = laplacian(random_connected_graph(9, 0.4, rng, true));
    const Matrix p = pseudo_inverse(l);
    EXPECT_LT((l * p * l - l).norm(), 1e-8 * l.norm());
    EXPECT_LT((p * l * p - p).norm(), 1e-8 * p.norm());
    EXPECT_LT(relative_frobenius(pseudo_inverse(p), l), 1e-8);
    EXPECT_LT((p * Vector::Ones(9)).norm(), 1e-10);
  }
}

TEST(PseudoInverse, NotPsdRejected) {
  try {
    pseudo_inverse(m2(1, 0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
}

TEST(PseudoInverse, ClampsRoundoffNegatives) {
  Vector ev(3);
  ev << -1e-12, 1.0, 2.0;
  Rng rng(3);
  EXPECT_NO_THROW(pseudo_inverse(with_spectrum(ev, rng)));
}

TEST(RegularizedInverse, Examples) {
  EXPECT_LT((regularized_inverse(Matrix::Zero(2, 2), 0.5) - 2.0 * Matrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((regularized_inverse(m2(1, -1, -1, 1), 1.0) - m2(2, 1, 1, 2) / 3.0).norm(), 1e-14);
  Rng rng(2);
  const Matrix l = laplacian(random_connected_graph(7, 0.5, rng));
  const Vector ones = Vector::Ones(7);
  EXPECT_LT((regularized_inverse(l, 0.3) * ones - ones / 0.3).norm(), 1e-12);
  for (double bad : {0.0, -1.0}) {
    try {
      regularized_inverse(l, bad);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
}

TEST(RegularizedInverse, ApproachesPseudoInverseOffNullSpace) {
  Rng rng(8);
  const int n = 8;
  const Matrix l = laplacian(random_connected_graph(n, 0.4, rng));
  const Matrix center = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  const Matrix pinv = pseudo_inverse(l);
  double previous = std::numeric_limits<double>::infinity();
  for (double alpha : {1e-1, 1e-2, 1e-4}) {
    const double err = (center * regularized_inverse(l, alpha) * center - pinv).norm();
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(SqrtmPsd, Examples) {
  EXPECT_LT((sqrtm_psd(Matrix(4.0 * Matrix::Identity(3, 3))) - 2.0 * Matrix::Identity(3, 3)).norm(), 1e-14);
  const Matrix expected = m2(1, -1, -1, 1) / (2.0 * std::sqrt(2.0));
  EXPECT_LT((sqrtm_psd(m2(0.25, -0.25, -0.25, 0.25)) - expected).norm(), 1e-14);
}

TEST(SqrtmPsd, RandomSquaresBack) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix b = random_matrix(8, 5, rng);
    const Matrix a = b * b.transpose();  // rank 5
    const Matrix s = sqrtm_psd(a);
    EXPECT_LT(relative_frobenius(s * s, a), 1e-8);
    EXPECT_LT((s - s.transpose()).norm(), 1e-14);
    EXPECT_GE(sym_eig(s).eigenvalues(0), -1e-10);
  }
  EXPECT_THROW(sqrtm_psd(m2(1, 0, 0, -1)), Error);
}

TEST(NewtonSchulz, FixedPointAndScalar) {
  for (int iters : {1, 5, 15}) {
    EXPECT_LT((sqrtm_newton_schulz(Matrix::Identity(4, 4), iters) - Matrix::Identity(4, 4)).norm(), 1e-12);
  }
  EXPECT_LT((sqrtm_newton_schulz(Matrix(4.0 * Matrix::Identity(3, 3)), 15) - 2.0 * Matrix::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
}

TEST(NewtonSchulz, WellConditionedMatchesEigenPath) {
  Rng rng(21);
  Vector ev(10);
  for (int i = 0; i < 10; ++i) ev(i) = std::pow(100.0, i / 9.0);  // condition number 100
  const Matrix a = with_spectrum(ev, rng);
  EXPECT_LT(relative_frobenius(sqrtm_newton_schulz(a, 20), sqrtm_psd(a)), 1e-4);
}

TEST(NewtonSchulz, RejectsBadInput) {
  EXPECT_THROW(sqrtm_newton_schulz(Matrix::Identity(2, 2), 0), Error);
  EXPECT_THROW(sqrtm_newton_schulz(Matrix(-Matrix::Identity(2, 2)), 5), Error);
}

TEST(NewtonSchulz, DivergenceDetected) {
  // Indefinite input with positive trace: the iteration cannot settle.
  Vector ev(3);
  ev << -3.0, 1.0, 4.0;
  Rng rng(9);
  try {
    sqrtm_newton_schulz(with_spectrum(ev, rng), 60);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(SqrtmVjp, MatchesFiniteDifferences) {
  Rng rng(17);
  Vector ev(5);
  ev << 0.5, 1.0, 1.5, 2.5, 4.0;
  const Matrix a = with_spectrum(ev, rng);
  const Matrix g = random_symmetric(5, rng);
  const Matrix vjp = sqrtm_vjp(sym_eig(a), g, 0.0);
  const Matrix da = random_symmetric(5, rng);
  const double h = 1e-6;
  const double fd = ((sqrtm_psd(Matrix(a + h * da)) - sqrtm_psd(Matrix(a - h * da))) / (2 * h)).cwiseProduct(g).sum();
  EXPECT_NEAR(vjp.cwiseProduct(da).sum(), fd, 1e-7);
}

}  // namespace
}  // namespace got
