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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "got/error.hpp"
#include "got/sinkhorn.hpp"
#include "test_util.hpp"

namespace got {
namespace {

using testing::random_matrix;

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(Sinkhorn, ZeroInputIsExactlyUniform) {
  for (int n : {1, 3, 7}) {
    for (double tau : {0.1, 1.0, 5.0}) {
      const DoublyStochastic ds = sinkhorn_operator(Matrix::Zero(n, n), {tau, 10, 1e-6});
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) EXPECT_EQ(ds.matrix(i, j), 1.0 / n);
    }
  }
}

TEST(Sinkhorn, CrossRatioOracleTwoByTwo) {
  const DoublyStochastic ds = sinkhorn_converged(m2(0, 1, 1, 0), {1.0, 10, 1e-12});
  const double a = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(ds.matrix(0, 0), a, 1e-10);
  EXPECT_NEAR(ds.matrix(0, 1), 1.0 - a, 1e-10);
  EXPECT_NEAR(ds.matrix(1, 1), a, 1e-10);
  EXPECT_NEAR(std::log(ds.matrix(0, 0) * ds.matrix(1, 1) / (ds.matrix(0, 1) * ds.matrix(1, 0))), -2.0, 1e-10);
}

TEST(Sinkhorn, LowTemperatureApproachesPermutation) {
  const DoublyStochastic ds = sinkhorn_operator(Matrix(10.0 * Matrix::Identity(2, 2)), {0.1, 10, 1e-6});
  EXPECT_LT((ds.matrix - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Sinkhorn, CrossRatioPreservedOnRandom4x4) {
  Rng rng(1);
  const Matrix x = random_matrix(4, 4, rng);
  const double tau = 0.7;
  for (const DoublyStochastic& ds : {sinkhorn_operator(x, {tau, 10, 1e-6}), sinkhorn_converged(x, {tau, 10, 1e-12})}) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) {
            if (i == j || k == l) continue;
            const double got = std::log(ds.matrix(i, k)) + std::log(ds.matrix(j, l)) - std::log(ds.matrix(i, l)) -
                               std::log(ds.matrix(j, k));
            const double want = (x(i, k) + x(j, l) - x(i, l) - x(j, k)) / tau;
            EXPECT_NEAR(got, want, 1e-10);
          }
  }
}

TEST(Sinkhorn, ConvergedIsDoublyStochasticAndPositive) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = 3.0 * random_matrix(8, 8, rng);
    const DoublyStochastic ds = sinkhorn_converged(x, {1.0, 10, 1e-6});
    EXPECT_LE(ds.deviation, 1e-6);
    EXPECT_LE(detail::stochastic_deviation(ds.matrix), 1e-6);
    EXPECT_GT(ds.matrix.minCoeff(), 0.0);
    const DoublyStochastic fixed = sinkhorn_operator(x, {1.0, 10, 1e-6});
    EXPECT_EQ(fixed.iterations, 10);
    EXPECT_NEAR(detail::stochastic_deviation(fixed.matrix), fixed.deviation, 1e-15);
    EXPECT_LT((fixed.matrix.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);  // last step is a column step
  }
}

TEST(Sinkhorn, LargeInputsStayFinite) {
  Rng rng(3);
  const Matrix x = 1e4 * random_matrix(6, 6, rng);
  const DoublyStochastic ds = sinkhorn_operator(x, {0.01, 10, 1e-6});
  EXPECT_TRUE(ds.matrix.allFinite());
}

TEST(Sinkhorn, Errors) {
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = std::nan("");
  EXPECT_THROW(sinkhorn_operator(x), Error);
  EXPECT_THROW(sinkhorn_operator(Matrix::Zero(2, 3)), Error);
  EXPECT_THROW(sinkhorn_operator(Matrix::Zero(2, 2), {0.0, 10, 1e-6}), Error);
  EXPECT_THROW(sinkhorn_operator(Matrix::Zero(2, 2), {1.0, 0, 1e-6}), Error);
}

double argmax_mass(const Matrix& m, const Permutation& p) {
  double s = 0.0;
  for (int i = 0; i < p.n(); ++i) s += m(i, p[i]);
  return s;
}

TEST(Sinkhorn, SharpensAsTemperatureDrops) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = random_matrix(6, 6, rng);
    const Permutation best = max_weight_assignment(x);
    double previous = 0.0;
    for (double tau : {5.0, 1.0, 0.1}) {
      const double mass = argmax_mass(sinkhorn_converged(x, {tau, 10, 1e-9}).matrix, best);
      EXPECT_GE(mass, previous - 1e-9);
      previous = mass;
    }
  }
}

TEST(SinkhornBackward, MatchesFiniteDifferences) {
  Rng rng(5);
  const SinkhornConfig cfg{1.3, 10, 1e-6};
  const Matrix x = random_matrix(5, 5, rng), g = random_matrix(5, 5, rng);
  SinkhornTape tape;
  sinkhorn_forward(x, cfg, tape);
  const Matrix grad = sinkhorn_backward(tape, g);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      Matrix xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fd =
          (sinkhorn_operator(xp, cfg).matrix.cwiseProduct(g).sum() - sinkhorn_operator(xm, cfg).matrix.cwiseProduct(g).sum()) /
          (2 * h);
      EXPECT_NEAR(grad(i, j), fd, 1e-8);
    }
}

TEST(Rounding, Examples) {
  EXPECT_EQ(round_to_permutation({m2(0.9, 0.1, 0.1, 0.9)}), Permutation::identity(2));
  EXPECT_EQ(round_to_permutation({m2(0.4, 0.6, 0.6, 0.4)}), Permutation({1, 0}));
  for (int n : {1, 4, 9}) EXPECT_EQ(round_to_permutation({Matrix::Constant(n, n, 1.0 / n)}), Permutation::identity(n));
}

TEST(Rounding, LexicographicTieBreak) {
  Matrix m(3, 3);
  m << 1, 1, 0,
       1, 1, 0,
       0, 0, 1;
  EXPECT_EQ(max_weight_assignment(m), Permutation({0, 1, 2}));
  Matrix t(3, 3);
  t << 0, 1, 1,
       1, 0, 1,
       1, 1, 0;
  EXPECT_EQ(max_weight_assignment(t), Permutation({1, 2, 0}));
}

TEST(Rounding, MatchesBruteForce) {
  Rng rng(6);
  for (int n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 4; ++trial) {
      Matrix w = random_matrix(n, n, rng);
      if (trial % 2) w = w.array().round();  // many ties
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      double best = -std::numeric_limits<double>::infinity();
      std::vector<int> best_perm;
      do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += w(i, perm[static_cast<std::size_t>(i)]);
        if (s > best + 1e-12) {
          best = s;
          best_perm = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      const Permutation got = max_weight_assignment(w);
      EXPECT_NEAR(argmax_mass(w, got), best, 1e-9);
      if (trial % 2) EXPECT_EQ(got.mapping(), best_perm);  // first optimum in lexicographic order
    }
  }
}

TEST(Accuracy, Examples) {
  EXPECT_EQ(permutation_accuracy(Permutation::identity(5), Permutation::identity(5)), 1.0);
  EXPECT_EQ(permutation_accuracy(Permutation({3, 2, 1, 0}), Permutation::identity(4)), 0.0);
  std::vector<int> swapped{1, 0, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_DOUBLE_EQ(permutation_accuracy(Permutation(swapped), Permutation::identity(10)), 0.8);
  EXPECT_THROW(permutation_accuracy(Permutation::identity(2), Permutation::identity(3)), Error);
}

}  // namespace
}  // namespace got
