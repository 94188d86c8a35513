// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cmcl/errors.hpp"
#include "cmcl/grad_check.hpp"
#include "cmcl/network.hpp"
#include "cmcl/optimizer.hpp"

using namespace cmcl;

namespace {

// One identity unit with weight θ and bias b.
NetworkParams scalar_net(double theta, double bias = 0.0) {
  NetworkParams p;
  p.layers.push_back({{1, 1, Activation::identity}, Matrix(1, 1, theta), {bias}});
  return p;
}

Gradients scalar_grad(double g, double gb = 0.0) {
  Gradients out;
  out.layers.push_back({Matrix(1, 1, g), {gb}});
  return out;
}

}  // namespace

TEST(Nesterov, PlainSgdWithoutMomentum) {
  auto p = scalar_net(1.0);
  auto state = OptimizerState::for_params(p, {0.1, 0.0, 0.0});
  sgd_nesterov_step(state, p, scalar_grad(2.0));
  EXPECT_DOUBLE_EQ(p.layers[0].weight(0, 0), 0.8);
}

TEST(Nesterov, ZeroGradientLeavesParametersUnchanged) {
  auto p = scalar_net(0.7, -0.3);
  auto state = OptimizerState::for_params(p, {0.1, 0.9, 0.0});
  sgd_nesterov_step(state, p, scalar_grad(0.0));
  EXPECT_EQ(p, scalar_net(0.7, -0.3));
  EXPECT_EQ(state.velocity[0].weight(0, 0), 0.0);
}

TEST(Nesterov, HandEvaluatedStep) {
  auto p = scalar_net(0.0);
  auto state = OptimizerState::for_params(p, {0.1, 0.9, 0.0});
  sgd_nesterov_step(state, p, scalar_grad(1.0));
  EXPECT_DOUBLE_EQ(state.velocity[0].weight(0, 0), -0.1);
  EXPECT_DOUBLE_EQ(p.layers[0].weight(0, 0), -0.19);
}

TEST(Nesterov, MatchesScalarRecurrenceWithDecay) {
  const double lr = 0.05;
  const double mu = 0.9;
  const double wd = 1e-2;
  auto p = scalar_net(1.5, 0.5);
  auto state = OptimizerState::for_params(p, {lr, mu, wd});
  double theta = 1.5;
  double v = 0.0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    const double g = n(rng);
    sgd_nesterov_step(state, p, scalar_grad(g));
    const double gd = g + wd * theta;
    v = mu * v - lr * gd;
    theta = theta + mu * v - lr * gd;
  }
  EXPECT_NEAR(p.layers[0].weight(0, 0), theta, 1e-14);
}

TEST(Nesterov, NonFiniteGradientNamesParameterAndChangesNothing) {
  auto p = scalar_net(1.0, 2.0);
  auto state = OptimizerState::for_params(p, {0.1, 0.9, 0.0});
  const auto before = p;
  try {
    sgd_nesterov_step(state, p, scalar_grad(1.0, std::numeric_limits<double>::quiet_NaN()));
    FAIL() << "expected OptimizerError";
  } catch (const OptimizerError& e) {
    EXPECT_NE(std::string(e.what()).find("bias[0]"), std::string::npos) << e.what();
  }
  EXPECT_EQ(p, before);
}

TEST(Nesterov, ShapeMismatch) {
  auto p = scalar_net(1.0);
  auto state = OptimizerState::for_params(p, {});
  Gradients g;
  EXPECT_THROW(sgd_nesterov_step(state, p, g), ShapeError);
}

TEST(OptimizerSettings, Validation) {
  EXPECT_THROW((OptimizerSettings{0.0, 0.9, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimizerSettings{0.1, 1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((OptimizerSettings{0.1, 0.9, -1.0}.validate()), ConfigError);
  EXPECT_NO_THROW(OptimizerSettings{}.validate());
}

TEST(GradCheck, QuadraticIsExact) {
  std::vector<double> x{0.3, -1.2, 2.5, 0.0};
  auto f = [](std::span<const double> t) {
    double s = 0.0;
    for (double v : t) s += 0.5 * v * v;
    return s;
  };
  const auto r = grad_check(f, x, x, 1e-8);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.parameter_count, 4u);
}

TEST(GradCheck, CorruptedGradientFails) {
  std::vector<double> x{0.3, -1.2, 2.5};
  std::vector<double> g = x;
  g[1] += 1e-3;
  auto f = [](std::span<const double> t) { return 0.5 * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]); };
  const auto r = grad_check(f, x, g, 1e-5);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(GradCheck, NonDeterministicObjectiveIsCheckError) {
  std::vector<double> x{1.0};
  int calls = 0;
  auto f = [&](std::span<const double> t) { return t[0] + static_cast<double>(++calls); };
  EXPECT_THROW(grad_check(f, x, x, 1e-5), CheckError);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-9 / kRelativeErrorFloor);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

TEST(GradCheck, LengthMismatchIsShapeError) {
  std::vector<double> x{1.0, 2.0};
  std::vector<double> g{1.0};
  EXPECT_THROW(grad_check([](std::span<const double>) { return 0.0; }, x, g, 1e-5), ShapeError);
}
