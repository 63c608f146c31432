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

#include "got/align.hpp"
#include "got/error.hpp"
#include "got/generators.hpp"
#include "test_util.hpp"

namespace got {
namespace {

using testing::random_connected_graph;
using testing::random_matrix;

std::vector<Matrix> noise(int samples, int n, Rng& rng) {
  std::vector<Matrix> eps;
  for (int s = 0; s < samples; ++s) eps.push_back(random_matrix(n, n, rng));
  return eps;
}

RelaxationParams random_params(int n, Rng& rng) {
  RelaxationParams p{random_matrix(n, n, rng), Matrix(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.sigma_raw(i, j) = softplus_inverse(0.3 + 0.7 * rng.uniform());
  return p;
}

double relative_error(const CostGradient& a, const CostGradient& b) {
  const double num = std::sqrt((a.grad_eta - b.grad_eta).squaredNorm() + (a.grad_sigma_raw - b.grad_sigma_raw).squaredNorm());
  const double den = std::sqrt(b.grad_eta.squaredNorm() + b.grad_sigma_raw.squaredNorm());
  return num / den;
}

TEST(Softplus, Basics) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(50.0), 50.0, 1e-12);
  EXPECT_EQ(softplus(-1e4), 0.0);
  EXPECT_NEAR(softplus(softplus_inverse(0.7)), 0.7, 1e-14);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
}

TEST(Objectives, TraceTermDerivativeOnRandom3x3) {
  // d/dP tr(P^T S P) = 2 S P; checked through the Frobenius objective's
  // structure by finite differences of the trace alone.
  Rng rng(1);
  const Matrix s = [&] {
    const Matrix b = random_matrix(3, 3, rng);
    return Matrix(b * b.transpose());
  }();
  const Matrix p = random_matrix(3, 3, rng);
  const Matrix analytic = 2.0 * s * p;
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Matrix pp = p, pm = p;
      pp(i, j) += h;
      pm(i, j) -= h;
      const double fd = ((pp.transpose() * s * pp).trace() - (pm.transpose() * s * pm).trace()) / (2 * h);
      EXPECT_NEAR(analytic(i, j), fd, 1e-7);
    }
}

TEST(Objectives, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  const Graph g1 = random_connected_graph(6, 0.5, rng, true), g2 = random_connected_graph(6, 0.5, rng, true);
  const Matrix p = sinkhorn_operator(random_matrix(6, 6, rng)).matrix;
  const W2Objective w2(graph_measure(g1, MeasureMode::exact()), graph_measure(g2, MeasureMode::exact()));
  const W2Objective w2r(graph_measure(g1, MeasureMode::regularized(0.2)), graph_measure(g2, MeasureMode::regularized(0.2)));
  const FrobeniusObjective fro(g1, g2);
  for (const AlignmentObjective* obj : std::vector<const AlignmentObjective*>{&w2, &w2r, &fro}) {
    Matrix grad;
    const double value = obj->value_and_gradient(p, grad);
    EXPECT_NEAR(value, obj->value(p), 1e-12 * std::max(1.0, value));
    const double h = 1e-6;
    Matrix fd(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        Matrix pp = p, pm = p;
        pp(i, j) += h;
        pm(i, j) -= h;
        fd(i, j) = (obj->value(pp) - obj->value(pm)) / (2 * h);
      }
    EXPECT_LT((grad - fd).norm() / fd.norm(), 1e-6);
  }
}

TEST(Objectives, W2ValueAtHardPermutationMatchesDistance) {
  Rng rng(3);
  const Graph g1 = random_connected_graph(7, 0.5, rng), g2 = random_connected_graph(7, 0.5, rng);
  const GraphMeasure m1 = graph_measure(g1, MeasureMode::exact()), m2 = graph_measure(g2, MeasureMode::exact());
  const Permutation p = Permutation::random(7, rng);
  EXPECT_NEAR(W2Objective(m1, m2).value(p.matrix()), w2_squared_permuted(m1, m2, p), 1e-10);
}

TEST(StochasticCost, SigmaCollapse) {
  Rng rng(4);
  const Graph g1 = random_connected_graph(6, 0.5, rng), g2 = random_connected_graph(6, 0.5, rng);
  const W2Objective obj(graph_measure(g1, MeasureMode::exact()), graph_measure(g2, MeasureMode::exact()));
  const SinkhornConfig cfg;
  RelaxationParams params{random_matrix(6, 6, rng), Matrix::Constant(6, 6, -1e4)};
  const double deterministic = obj.value(sinkhorn_operator(params.eta, cfg).matrix);
  for (const Matrix& eps : noise(5, 6, rng)) EXPECT_EQ(stochastic_cost(params, obj, {eps}, cfg), deterministic);

  // grad_eta collapses to the deterministic gradient.
  SinkhornTape tape;
  const DoublyStochastic ds = sinkhorn_forward(params.eta, cfg, tape);
  Matrix grad_p;
  obj.value_and_gradient(ds.matrix, grad_p);
  const Matrix expected = sinkhorn_backward(tape, grad_p);
  const CostGradient g = cost_gradient(params, obj, noise(3, 6, rng), cfg);
  EXPECT_LT((g.grad_eta - expected).norm(), 1e-12 * std::max(1.0, expected.norm()));
  EXPECT_EQ(g.grad_sigma_raw.norm(), 0.0);
}

TEST(StochasticCost, IdenticalGraphsNearIdentityIsZero) {
  Rng rng(5);
  const Graph g = random_connected_graph(7, 0.5, rng);
  const GraphMeasure m = graph_measure(g, MeasureMode::exact());
  const W2Objective obj(m, m);
  RelaxationParams params{Matrix(200.0 * Matrix::Identity(7, 7)), Matrix::Constant(7, 7, softplus_inverse(1e-3))};
  EXPECT_LT(stochastic_cost(params, obj, noise(4, 7, rng), SinkhornConfig{}), 1e-4);
}

TEST(StochasticCost, Deterministic) {
  Rng rng(6);
  const Graph g1 = random_connected_graph(6, 0.5, rng), g2 = random_connected_graph(6, 0.5, rng);
  const W2Objective obj(graph_measure(g1, MeasureMode::regularized(0.3)), graph_measure(g2, MeasureMode::regularized(0.3)));
  const RelaxationParams params = random_params(6, rng);
  const auto eps = noise(4, 6, rng);
  const double a = stochastic_cost(params, obj, eps, {});
  EXPECT_EQ(a, stochastic_cost(params, obj, eps, {}));
  EXPECT_NEAR(a, cost_gradient(params, obj, eps, {}).value, 1e-12 * std::abs(a));
  EXPECT_EQ(cost_gradient(params, obj, eps, {}, 1).grad_eta, cost_gradient(params, obj, eps, {}, 3).grad_eta);
}

TEST(CostGradient, MatchesFiniteDifferencesOnRandomInstances) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + trial % 4;
    const Graph g1 = random_connected_graph(n, 0.5, rng, true), g2 = random_connected_graph(n, 0.5, rng, true);
    const RelaxationParams params = random_params(n, rng);
    const auto eps = noise(3, n, rng);
    const MeasureMode mode = trial % 2 ? MeasureMode::exact() : MeasureMode::regularized_relative(g1, g2);
    const W2Objective obj(graph_measure(g1, mode), graph_measure(g2, mode));
    const SinkhornConfig cfg;
    const CostGradient analytic = cost_gradient(params, obj, eps, cfg);
    const CostGradient fd = finite_difference_gradient(params, obj, eps, cfg, 1e-5);
    EXPECT_NEAR(analytic.value, fd.value, 1e-12);
    EXPECT_LT(relative_error(analytic, fd), 1e-4) << "trial " << trial << " n " << n << " " << mode.describe();
  }
}

TEST(CostGradient, FrobeniusObjectiveMatchesFiniteDifferences) {
  Rng rng(8);
  const Graph g1 = random_connected_graph(6, 0.5, rng), g2 = random_connected_graph(6, 0.5, rng);
  const FrobeniusObjective obj(g1, g2);
  const RelaxationParams params = random_params(6, rng);
  const auto eps = noise(3, 6, rng);
  EXPECT_LT(relative_error(cost_gradient(params, obj, eps, {}), finite_difference_gradient(params, obj, eps, {}, 1e-5)),
            1e-4);
}

TEST(CostGradient, RejectsBadShapes) {
  Rng rng(9);
  const Graph g = random_connected_graph(4, 0.7, rng);
  const FrobeniusObjective obj(g, g);
  const RelaxationParams params = random_params(4, rng);
  EXPECT_THROW(cost_gradient(params, obj, {}, {}), Error);
  EXPECT_THROW(cost_gradient(params, obj, noise(1, 3, rng), {}), Error);
}

TEST(FiniteDifference, ConstantQuadraticAndOrder) {
  Rng rng(10);
  const RelaxationParams params = random_params(3, rng);
  const CostGradient zero = finite_difference_gradient([](const RelaxationParams&) { return 4.2; }, params, 1e-4);
  EXPECT_LT(zero.grad_eta.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(zero.grad_sigma_raw.cwiseAbs().maxCoeff(), 1e-12);

  const Matrix a = random_matrix(3, 3, rng);
  auto quad = [&](const RelaxationParams& p) { return (p.eta - a).squaredNorm() + 0.5 * p.sigma_raw.squaredNorm(); };
  const CostGradient g = finite_difference_gradient(quad, params, 1e-4);
  EXPECT_LT((g.grad_eta - 2.0 * (params.eta - a)).norm(), 1e-8);
  EXPECT_LT((g.grad_sigma_raw - params.sigma_raw).norm(), 1e-8);

  auto smooth = [](const RelaxationParams& p) { return std::sin(p.eta.sum()) + std::exp(0.3 * p.sigma_raw(0, 0)); };
  const double exact = std::cos(params.eta.sum());
  const double e1 = std::abs(finite_difference_gradient(smooth, params, 1e-2).grad_eta(0, 0) - exact);
  const double e2 = std::abs(finite_difference_gradient(smooth, params, 5e-3).grad_eta(0, 0) - exact);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
  EXPECT_THROW(finite_difference_gradient(smooth, params, 0.0), Error);
}

TEST(AmsGrad, ZeroGradientLeavesParameters) {
  Matrix param = Matrix::Constant(2, 2, 0.7);
  MomentState state = MomentState::zeros(2, 2);
  for (int t = 0; t < 5; ++t) amsgrad_update(param, state, Matrix::Zero(2, 2), AmsGradConfig{});
  EXPECT_EQ(param, Matrix::Constant(2, 2, 0.7));
}

TEST(AmsGrad, ConstantGradientStepApproachesLearningRate) {
  AmsGradConfig cfg;
  cfg.learning_rate = 0.2;
  Matrix param = Matrix::Zero(1, 2);
  Matrix grad(1, 2);
  grad << 3.0, -0.5;
  MomentState state = MomentState::zeros(1, 2);
  Matrix before = param;
  for (int t = 0; t < 20000; ++t) {
    before = param;
    amsgrad_update(param, state, grad, cfg, t);
  }
  const Matrix step = param - before;
  // Without bias correction the limit is lr * g / |g| = lr * sign(g).
  EXPECT_NEAR(step(0, 0), -0.2, 1e-6);
  EXPECT_NEAR(step(0, 1), 0.2, 1e-6);
}

TEST(AmsGrad, SecondMomentMaxIsMonotone) {
  Rng rng(11);
  MomentState state = MomentState::zeros(3, 3);
  Matrix param = Matrix::Zero(3, 3);
  Matrix previous = state.v_hat;
  for (int t = 0; t < 200; ++t) {
    amsgrad_update(param, state, Matrix((t < 50 ? 5.0 : 0.1) * random_matrix(3, 3, rng)), AmsGradConfig{}, t);
    EXPECT_TRUE((state.v_hat.array() >= previous.array()).all());
    EXPECT_TRUE((state.v_hat.array() >= state.v.array()).all());
    previous = state.v_hat;
  }
}

TEST(AmsGrad, StepUpdatesBothBlocks) {
  OptimizerState s = OptimizerState::start({Matrix::Zero(2, 2), Matrix::Zero(2, 2)});
  const CostGradient g{0.0, Matrix::Ones(2, 2), Matrix(-Matrix::Ones(2, 2))};
  s = amsgrad_step(std::move(s), g, AmsGradConfig{});
  EXPECT_EQ(s.step, 1);
  EXPECT_LT(s.params.eta(0, 0), 0.0);
  EXPECT_GT(s.params.sigma_raw(0, 0), 0.0);
}

SgdConfig small_config(int iterations, std::uint64_t seed) {
  SgdConfig cfg;
  cfg.iterations = iterations;
  cfg.samples = 4;
  cfg.seed = seed;
  return cfg;
}

TEST(Align, DeterministicForFixedSeed) {
  Rng rng(12);
  const Graph g1 = random_connected_graph(7, 0.5, rng), g2 = random_connected_graph(7, 0.5, rng);
  const SgdConfig cfg = small_config(40, 3);
  const AlignmentResult a = align(g1, g2, cfg), b = align(g1, g2, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.hard, b.hard);
  EXPECT_EQ(a.soft_assignment.matrix, b.soft_assignment.matrix);
  SgdConfig threaded = cfg;
  threaded.threads = 3;
  EXPECT_EQ(align(g1, g2, threaded).loss_history, a.loss_history);
  EXPECT_NE(align(g1, g2, small_config(40, 4)).loss_history, a.loss_history);
}

TEST(Align, HardPermutationConsistency) {
  Rng rng(13);
  const Graph g1 = random_connected_graph(8, 0.4, rng), g2 = random_connected_graph(8, 0.4, rng);
  const AlignmentResult r = align(g1, g2, small_config(30, 1));
  const GraphMeasure m1 = graph_measure(g1, MeasureMode::exact());
  EXPECT_NEAR(r.distance_aligned, w2_squared(m1, graph_measure(permute(g2, r.hard), MeasureMode::exact())), 1e-8);
  EXPECT_NEAR(r.distance_aligned, w2_squared_permuted(m1, graph_measure(g2, MeasureMode::exact()), r.hard), 1e-8);
  EXPECT_EQ(r.hard, round_to_permutation(r.soft_assignment));
  EXPECT_EQ(r.loss_history.size(), 30u);
  EXPECT_TRUE((r.sigma.array() > 0.0).all());
}

TEST(Align, CollapseMatchesDeterministicDescent) {
  Rng rng(14);
  const Graph g1 = random_connected_graph(6, 0.5, rng), g2 = random_connected_graph(6, 0.5, rng);
  SgdConfig cfg = small_config(60, 2);
  cfg.samples = 1;
  cfg.init_sigma = 0.0;
  const AlignmentResult stochastic = align(g1, g2, cfg);
  const AlignmentResult deterministic = align_deterministic(g1, g2, cfg);
  ASSERT_EQ(stochastic.loss_history.size(), deterministic.loss_history.size());
  for (std::size_t t = 0; t < stochastic.loss_history.size(); ++t) {
    EXPECT_NEAR(stochastic.loss_history[t], deterministic.loss_history[t], 1e-10);
  }
  EXPECT_EQ(stochastic.hard, deterministic.hard);
}

TEST(Align, IdentityStartOnIdenticalGraphs) {
  Rng rng(15);
  const Graph g = random_connected_graph(10, 0.3, rng);
  SgdConfig cfg = small_config(5, 1);
  cfg.initial_eta = Matrix(100.0 * Matrix::Identity(10, 10));
  const AlignmentResult r = align(g, g, cfg);
  EXPECT_EQ(r.hard, Permutation::identity(10));
  EXPECT_LT(r.distance_aligned, 1e-9);
  EXPECT_LT(r.loss_history.front(), 1e-3);
}

TEST(Align, RunningMinimumImproves) {
  Rng rng(16);
  const Graph g1 = generate(SbmModel{2, 0.7, 0.1}, 10, rng), g2 = generate(SbmModel{2, 0.7, 0.1}, 10, rng);
  SgdConfig cfg = small_config(300, 5);
  cfg.samples = 8;
  const AlignmentResult r = align(g1, g2, cfg);
  const auto& h = r.loss_history;
  EXPECT_LE(*std::min_element(h.begin(), h.end()), *std::min_element(h.begin(), h.begin() + 100));
  EXPECT_LT(*std::min_element(h.end() - 50, h.end()), h.front());
}

TEST(Align, PlateauStop) {
  Rng rng(17);
  const Graph g = random_connected_graph(6, 0.5, rng);
  SgdConfig cfg = small_config(2000, 1);
  cfg.initial_eta = Matrix(100.0 * Matrix::Identity(6, 6));
  cfg.init_sigma = 0.0;
  cfg.plateau_stop = true;
  cfg.plateau_window = 20;
  EXPECT_LT(align(g, g, cfg).loss_history.size(), 2000u);
}

TEST(Align, RejectsBadInput) {
  Rng rng(18);
  const Graph a = random_connected_graph(5, 0.6, rng), b = random_connected_graph(6, 0.6, rng);
  try {
    align(a, b, small_config(5, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  for (auto mutate : std::vector<std::function<void(SgdConfig&)>>{
           [](SgdConfig& c) { c.iterations = 0; }, [](SgdConfig& c) { c.samples = 0; },
           [](SgdConfig& c) { c.learning_rate = 0.0; }, [](SgdConfig& c) { c.sinkhorn.tau = -1.0; }}) {
    SgdConfig cfg = small_config(5, 1);
    mutate(cfg);
    try {
      align(a, a, cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
}

TEST(Align, NoiseStreamsAreIndependentOfSampleCount) {
  const auto a = draw_noise(7, 3, 2, 4), b = draw_noise(7, 3, 5, 4);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
  EXPECT_NE(draw_noise(7, 4, 1, 4)[0], a[0]);
}

}  // namespace
}  // namespace got
