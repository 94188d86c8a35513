// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cmcl/errors.hpp"
#include "cmcl/grad_check.hpp"
#include "cmcl/losses.hpp"
#include "cmcl/network.hpp"
#include "oracle.hpp"

using namespace cmcl;

namespace {

Matrix to_matrix(const oracle::Table& t) {
  Matrix m(t.size(), t.front().size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) m(i, j) = t[i][j];
  }
  return m;
}

std::vector<double> softmax_of(std::span<const double> z) {
  Matrix m(1, z.size(), std::vector<double>(z.begin(), z.end()));
  const auto p = softmax_rows(m);
  return {p.values().begin(), p.values().end()};
}

}  // namespace

TEST(CrossEntropy, Values) {
  const std::vector<double> certain{0.0, 1.0};
  EXPECT_EQ(cross_entropy(certain, 1).value, 0.0);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(cross_entropy(half, 0).value, std::numbers::ln2, 1e-15);
  EXPECT_NEAR(cross_entropy(half, 0).value, 0.693147, 1e-6);
  const auto g = cross_entropy(half, 1).logit_gradient;
  EXPECT_EQ(g, (std::vector<double>{0.5, -0.5}));
}

TEST(CrossEntropy, ZeroProbabilityIsFloored) {
  const std::vector<double> p{1.0, 0.0};
  EXPECT_NEAR(cross_entropy(p, 1).value, -std::log(kProbabilityFloor), 1e-9);
}

TEST(CrossEntropy, OutOfRangeLabel) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_THROW(cross_entropy(p, 2), InputError);
}

TEST(KlFromUniform, Examples) {
  const std::vector<double> u4(4, 0.25);
  EXPECT_NEAR(kl_from_uniform(u4), 0.0, 1e-15);
  const std::vector<double> p{0.9, 0.1};
  EXPECT_NEAR(kl_from_uniform(p), oracle::kl_uniform(p), 1e-15);
  EXPECT_NEAR(kl_from_uniform(p), 0.510826, 1e-6);
}

TEST(KlFromUniform, MatchesDefinitionAndIsNonNegative) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    const auto p = oracle::random_distribution(rng, 2 + static_cast<std::size_t>(t % 9));
    const double kl = kl_from_uniform(p);
    EXPECT_NEAR(kl, oracle::kl_uniform(p), 1e-12);
    EXPECT_GE(kl, 0.0);
  }
}

TEST(KlGradient, Examples) {
  const std::vector<double> p{0.9, 0.1};
  const auto g = kl_from_uniform_grad_exact(p);
  EXPECT_NEAR(g[0], 0.4, 1e-15);
  EXPECT_NEAR(g[1], -0.4, 1e-15);
  const std::vector<double> u(5, 0.2);
  for (double v : kl_from_uniform_grad_exact(u)) EXPECT_NEAR(v, 0.0, 1e-16);
  const auto gm = kl_from_uniform_grad_exact(Matrix::from_rows({{0.9, 0.1}, {0.5, 0.5}}));
  EXPECT_NEAR(gm(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(gm(1, 1), 0.0, 1e-15);
}

TEST(KlGradient, MatchesFiniteDifferencesInLogits) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z(3 + static_cast<std::size_t>(t % 5));
    for (double& v : z) v = n(rng);
    const auto analytic = kl_from_uniform_grad_exact(softmax_of(z));
    const auto r = grad_check([](std::span<const double> zz) { return kl_from_uniform(softmax_of(zz)); }, z,
                              analytic, 1e-6);
    EXPECT_TRUE(r.passed) << r.max_relative_error;
  }
}

TEST(StochasticLabel, EnumerationEqualsExact) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = 2 + static_cast<std::size_t>(t % 8);
    const auto p = oracle::random_distribution(rng, c);
    std::vector<double> avg(c, 0.0);
    for (std::size_t y = 0; y < c; ++y) {
      const auto g = cross_entropy(p, y).logit_gradient;
      for (std::size_t k = 0; k < c; ++k) avg[k] += g[k] / static_cast<double>(c);
    }
    const auto exact = kl_from_uniform_grad_exact(p);
    for (std::size_t k = 0; k < c; ++k) EXPECT_NEAR(avg[k], exact[k], 1e-12);
  }
}

TEST(StochasticLabel, SingleClassIsZero) {
  Rng rng(1);
  const std::vector<double> p{1.0};
  EXPECT_EQ(stochastic_label_grad(p, rng), std::vector<double>{0.0});
}

TEST(StochasticLabel, SeededReproducibility) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  Rng a(9);
  Rng b(9);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(stochastic_label_grad(p, a), stochastic_label_grad(p, b));
  Rng c(9);
  EXPECT_THROW(stochastic_label_grad(p, c, 0), ConfigError);
}

TEST(StochasticLabel, SingleSampleIsOneCrossEntropyGradient) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto g = stochastic_label_grad(p, rng);
    int negatives = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (g[k] < 0.0) {
        ++negatives;
        EXPECT_NEAR(g[k], p[k] - 1.0, 1e-15);
      } else {
        EXPECT_EQ(g[k], p[k]);
      }
    }
    EXPECT_EQ(negatives, 1);
  }
}

TEST(CompositeLoss, Examples) {
  const std::vector<double> ce{0.4, 0.9};
  const std::vector<double> kl{0.3, 0.2};
  const auto l = composite_member_loss(ce, kl, 1.0);
  EXPECT_NEAR(l[0], 0.6, 1e-15);
  EXPECT_NEAR(l[1], 1.2, 1e-15);
  EXPECT_EQ(composite_member_loss(ce, kl, 0.0), ce);
  const std::vector<double> short_kl{0.3};
  EXPECT_THROW(composite_member_loss(ce, short_kl, 1.0), ShapeError);
  EXPECT_THROW(composite_member_loss(ce, kl, -1.0), ConfigError);
}

TEST(CompositeLoss, EqualKlPreservesArgmin) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> ce(5);
    for (double& v : ce) v = u(rng);
    const std::vector<double> kl(5, u(rng));
    const auto l = composite_member_loss(ce, kl, 1.3);
    const auto a = std::min_element(ce.begin(), ce.end()) - ce.begin();
    const auto b = std::min_element(l.begin(), l.end()) - l.begin();
    EXPECT_EQ(a, b);
  }
}

TEST(Assign, Examples) {
  const auto losses = Matrix::from_rows({{0.2, 0.5, 0.1}});
  const auto k1 = assign(losses, 1);
  EXPECT_FALSE(k1(0, 0));
  EXPECT_FALSE(k1(0, 1));
  EXPECT_TRUE(k1(0, 2));
  const auto k2 = assign(losses, 2);
  EXPECT_TRUE(k2(0, 0));
  EXPECT_FALSE(k2(0, 1));
  EXPECT_TRUE(k2(0, 2));
  const auto tie = assign(Matrix::from_rows({{0.3, 0.3, 0.9}}), 1);
  EXPECT_TRUE(tie(0, 0));
  EXPECT_FALSE(tie(0, 1));
  EXPECT_FALSE(tie(0, 2));
}

TEST(Assign, OverlapOutOfRange) {
  const auto losses = Matrix::from_rows({{0.2, 0.5, 0.1}});
  EXPECT_THROW(assign(losses, 0), ConfigError);
  try {
    assign(losses, 4);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("1 <= K <= M"), std::string::npos);
  }
}

TEST(Assign, RowAndColumnSums) {
  std::mt19937_64 rng(25);
  const auto t = oracle::random_table(rng, 20, 4, 0.0, 2.0);
  const auto a = assign(to_matrix(t), 3);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(a.row_sum(i), 3u);
  for (std::size_t m = 0; m < 4; ++m) total += a.column_sum(m);
  EXPECT_EQ(total, 60u);
}

TEST(EnsembleLosses, Examples) {
  const auto t = Matrix::from_rows({{1, 2}, {3, 0.5}});
  EXPECT_DOUBLE_EQ(oracle_loss(t), 1.5);
  EXPECT_DOUBLE_EQ(ie_loss(t), 6.5);
  EXPECT_DOUBLE_EQ(ie_loss(Matrix(1, 1)), 0.0);
  const auto single = Matrix::from_rows({{0.4}, {1.1}, {0.2}});
  EXPECT_DOUBLE_EQ(oracle_loss(single), 0.4 + 1.1 + 0.2);
}

TEST(ConfidentOracle, Reductions) {
  std::mt19937_64 rng(26);
  for (int t = 0; t < 100; ++t) {
    const auto task = to_matrix(oracle::random_table(rng, 7, 4, 0.0, 3.0));
    const auto kl = to_matrix(oracle::random_table(rng, 7, 4, 0.0, 2.0));
    EXPECT_EQ(confident_oracle_loss(task, kl, 0.0, 1).value, oracle_loss(task));
    EXPECT_DOUBLE_EQ(confident_oracle_loss(task, kl, 0.8, 4).value, ie_loss(task));
  }
}

TEST(ConfidentOracle, SmallInstanceMatchesEnumeration) {
  const oracle::Table task{{0.3, 1.4}, {2.0, 0.1}};
  const oracle::Table kl{{0.5, 0.05}, {0.2, 0.9}};
  for (double beta : {0.0, 0.5, 1.0, 3.0}) {
    const auto r = confident_oracle_loss(to_matrix(task), to_matrix(kl), beta, 1);
    EXPECT_NEAR(r.value, oracle::brute_confident(task, kl, beta, 1), 1e-14) << beta;
  }
}

TEST(ConfidentOracle, MatchesEnumerationOnRandomInstances) {
  std::mt19937_64 rng(27);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(t % 6);
    const std::size_t k = 1 + static_cast<std::size_t>(t / 6) % m;
    const auto task = oracle::random_table(rng, 5, m, 0.0, 3.0);
    const auto kl = oracle::random_table(rng, 5, m, 0.0, 2.0);
    const double beta = 0.25 * static_cast<double>(t % 7);
    const auto r = confident_oracle_loss(to_matrix(task), to_matrix(kl), beta, k);
    EXPECT_NEAR(r.value, oracle::brute_confident(task, kl, beta, k), 1e-12);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.assignment.row_sum(i), k);
    EXPECT_DOUBLE_EQ(confident_objective(to_matrix(task), to_matrix(kl), beta, r.assignment), r.value);
  }
}

TEST(ConfidentOracle, ShapeMismatch) {
  EXPECT_THROW(confident_oracle_loss(Matrix(2, 3), Matrix(3, 2), 1.0, 1), ShapeError);
  EXPECT_THROW(confident_objective(Matrix(2, 3), Matrix(2, 3), 1.0, AssignmentMatrix(2, 2, 1)), ShapeError);
}

TEST(ValidateDistribution, RejectsBadVectors) {
  EXPECT_NO_THROW(validate_distribution(std::vector<double>{0.25, 0.75}));
  EXPECT_THROW(validate_distribution(std::vector<double>{}), InputError);
  EXPECT_THROW(validate_distribution(std::vector<double>{0.5, 0.6}), InputError);
  EXPECT_THROW(validate_distribution(std::vector<double>{-0.1, 1.1}), InputError);
}
