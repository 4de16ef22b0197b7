// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "test_support.hpp"
#include "vflmope/error.hpp"
#include "vflmope/nn.hpp"

namespace vfl {
namespace {

using testing::max_gradient_error;
using testing::random_vector;

Mlp2 identity_net(std::size_t n) {
  Mlp2 m;
  m.w1 = Matrix(n, n);
  m.w2 = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m.w1(i, i) = 1.0;
    m.w2(i, i) = 1.0;
  }
  m.b1.assign(n, 0.0);
  m.b2.assign(n, 0.0);
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

TEST(MlpForward, ZeroWeightsYieldOutputBias) {
  Mlp2 m = init_mlp(3, 5, 2, 1).zeros_like();
  m.b2 = {0.25, -1.5};
  const auto f = mlp_forward(m, std::vector<double>{4.0, -2.0, 7.0});
  EXPECT_EQ(f.logits, m.b2);
}

TEST(MlpForward, IdentityComposesWithRelu) {
  const auto f = mlp_forward(identity_net(2), std::vector<double>{1.0, -2.0});
  EXPECT_EQ(f.logits, (std::vector<double>{1.0, 0.0}));
}

TEST(MlpForward, MatchesInlineMatrixArithmetic) {
  Mlp2 m = init_mlp(3, 4, 2, 42);
  for (std::size_t i = 0; i < 4; ++i) m.b1[i] = 0.1 * static_cast<double>(i) - 0.15;
  m.b2 = {0.3, -0.2};
  const std::vector<double> x{0.7, -1.1, 2.3};

  double hidden[4];
  for (int h = 0; h < 4; ++h) {
    double s = m.b1[h];
    for (int i = 0; i < 3; ++i) s += m.w1.data[h * 3 + i] * x[i];
    hidden[h] = s > 0 ? s : 0;
  }
  double expected[2];
  for (int o = 0; o < 2; ++o) {
    double s = m.b2[o];
    for (int h = 0; h < 4; ++h) s += m.w2.data[o * 4 + h] * hidden[h];
    expected[o] = s;
  }

  const auto f = mlp_forward(m, x);
  for (int o = 0; o < 2; ++o) {
    EXPECT_NEAR(f.logits[o], expected[o], 1e-12 * std::max(1.0, std::abs(expected[o])));
  }
}

TEST(MlpForward, RejectsWrongInputLength) {
  const Mlp2 m = init_mlp(3, 4, 2, 0);
  EXPECT_THROW(mlp_forward(m, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(MlpForward, RejectsNonFiniteInput) {
  const Mlp2 m = init_mlp(2, 2, 2, 0);
  EXPECT_THROW(mlp_forward(m, std::vector<double>{1.0, std::nan("")}), NumericError);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  const Mlp2 m = init_mlp(3, 6, 4, 3);
  const auto f = mlp_forward(m, random_vector(3, 9));
  const auto b = mlp_backward(m, f.cache, std::vector<double>(4, 0.0));
  for (auto t : b.grads.tensors()) {
    for (double g : t) EXPECT_EQ(g, 0.0);
  }
  for (double g : b.dx) EXPECT_EQ(g, 0.0);
}

TEST(MlpBackward, OutputWeightGradientIsHiddenActivation) {
  Mlp2 m;
  m.w1 = Matrix(1, 1, 2.0);
  m.b1 = {0.5};
  m.w2 = Matrix(1, 1, 3.0);
  m.b2 = {0.0};
  const auto f = mlp_forward(m, std::vector<double>{1.5});
  const auto b = mlp_backward(m, f.cache, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(b.grads.w2(0, 0), 3.5);
  EXPECT_DOUBLE_EQ(b.grads.b2[0], 1.0);
  EXPECT_DOUBLE_EQ(b.grads.w1(0, 0), 3.0 * 1.5);
  EXPECT_DOUBLE_EQ(b.dx[0], 6.0);
}

TEST(MlpBackward, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Mlp2 m = init_mlp(5, 7, 3, seed);
    for (double& b : m.b1) b = 0.05;
    auto x = random_vector(5, 100 + seed);
    const auto up = random_vector(3, 200 + seed);
    const auto f = mlp_forward(m, x);
    const auto b = mlp_backward(m, f.cache, up);
    auto objective = [&] { return dot(mlp_forward(m, x).logits, up); };

    const auto params = m.tensors();
    const auto grads = b.grads.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      EXPECT_LT(max_gradient_error(params[t], grads[t], objective), 1e-5) << "seed " << seed;
    }
    EXPECT_LT(max_gradient_error(x, b.dx, objective), 1e-5) << "seed " << seed;
  }
}

TEST(MlpBackward, MismatchedCacheIsAContractError) {
  const Mlp2 m = init_mlp(3, 4, 2, 0);
  const Mlp2 other = init_mlp(5, 4, 2, 0);
  const auto f = mlp_forward(other, random_vector(5, 1));
  EXPECT_THROW(mlp_backward(m, f.cache, std::vector<double>(2, 1.0)), ContractError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Mlp2 p = init_mlp(3, 4, 2, 5);
  const Mlp2 before = p;
  auto state = AdamState::for_params(p);
  adam_step(p, p.zeros_like(), state);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 1U);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Mlp2 p = init_mlp(1, 1, 1, 0).zeros_like();
  Mlp2 g = p.zeros_like();
  g.b2[0] = 1.0;
  auto state = AdamState::for_params(p);
  adam_step(p, g, state);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.b2[0], -1e-4, 1e-11);
  EXPECT_DOUBLE_EQ(p.b2[0], -1e-4 / (1.0 + 1e-8));
}

TEST(Adam, ConstantGradientDescendsMonotonically) {
  Mlp2 p = init_mlp(1, 1, 1, 0).zeros_like();
  Mlp2 g = p.zeros_like();
  g.b2[0] = 1.0;
  auto state = AdamState::for_params(p);
  double prev = p.b2[0];
  for (int i = 0; i < 1000; ++i) {
    adam_step(p, g, state);
    ASSERT_LT(p.b2[0], prev);
    prev = p.b2[0];
  }
  EXPECT_EQ(state.step, 1000U);
}

TEST(Adam, NonFiniteGradientAbortsWithoutMutation) {
  Mlp2 p = init_mlp(2, 3, 2, 1);
  const Mlp2 before = p;
  Mlp2 g = p.zeros_like();
  g.w1.data[0] = 0.5;
  g.w2.data[1] = std::numeric_limits<double>::infinity();
  auto state = AdamState::for_params(p);
  EXPECT_THROW(adam_step(p, g, state), NonFiniteGradientError);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.step, 0U);
  EXPECT_EQ(state.first_moment, p.zeros_like());
}

TEST(InitMlp, DeterministicPerSeed) {
  EXPECT_EQ(init_mlp(4, 8, 3, 11), init_mlp(4, 8, 3, 11));
  EXPECT_NE(init_mlp(4, 8, 3, 11), init_mlp(4, 8, 3, 12));
}

TEST(InitMlp, GlorotBoundsAndZeroBiases) {
  const Mlp2 m = init_mlp(10, 20, 5, 3);
  const double s1 = std::sqrt(6.0 / 30.0);
  const double s2 = std::sqrt(6.0 / 25.0);
  for (double w : m.w1.data) {
    EXPECT_GT(w, -s1);
    EXPECT_LT(w, s1);
  }
  for (double w : m.w2.data) {
    EXPECT_GT(w, -s2);
    EXPECT_LT(w, s2);
  }
  for (double b : m.b1) EXPECT_EQ(b, 0.0);
  for (double b : m.b2) EXPECT_EQ(b, 0.0);
  EXPECT_NO_THROW(m.validate());
}

TEST(InitMlp, ZeroDimensionIsAShapeError) {
  EXPECT_THROW(init_mlp(0, 2, 2, 0), ShapeError);
  EXPECT_THROW(init_mlp(2, 0, 2, 0), ShapeError);
  EXPECT_THROW(init_mlp(2, 2, 0, 0), ShapeError);
}

TEST(Mlp2Validate, DetectsInconsistentShapes) {
  Mlp2 m = init_mlp(3, 4, 2, 0);
  m.b1.pop_back();
  EXPECT_THROW(m.validate(), ShapeError);
  Mlp2 n = init_mlp(3, 4, 2, 0);
  n.w2.data[0] = std::nan("");
  EXPECT_THROW(n.validate(), NumericError);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto x = random_vector(7, seed, 5.0);
    const auto p = softmax(x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double& v : x) v += 123.456;
    const auto q = softmax(x);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Softmax, HandlesLargeLogits) {
  const auto p = softmax(std::vector<double>{1000.0, 0.0, -1000.0});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_TRUE(all_finite(p));
}

TEST(Sigmoid, StaysStrictlyInsideUnitInterval) {
  for (double x : {-1e6, -800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0, 1e6}) {
    const double s = sigmoid(x);
    EXPECT_GT(s, 0.0) << x;
    EXPECT_LT(s, 1.0) << x;
  }
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
}

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1U);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0U);
}

TEST(ClampedLog, FloorsAtOneEMinusTwelve) {
  EXPECT_DOUBLE_EQ(clamped_log(0.0), std::log(1e-12));
  EXPECT_DOUBLE_EQ(clamped_log(0.5), std::log(0.5));
}

}  // namespace
}  // namespace vfl
