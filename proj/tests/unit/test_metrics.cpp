// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "cmcl/data.hpp"
#include "cmcl/ensemble.hpp"
#include "cmcl/errors.hpp"
#include "cmcl/metrics.hpp"
#include "cmcl/report.hpp"
#include "oracle.hpp"

using namespace cmcl;

namespace {

Matrix random_dists(std::mt19937_64& rng, std::size_t n, std::size_t c) {
  Matrix m(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = oracle::random_distribution(rng, c);
    std::copy(p.begin(), p.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace

TEST(Argmax, TiesGoLow) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0u);
}

TEST(Top1, AveragesMembers) {
  const std::vector<Matrix> d{Matrix::from_rows({{0.6, 0.4}}), Matrix::from_rows({{0.2, 0.8}})};
  const std::vector<std::size_t> y{1};
  EXPECT_EQ(top1_error(d, y), 0.0);
  const std::vector<std::size_t> y0{0};
  EXPECT_EQ(top1_error(d, y0), 1.0);
}

TEST(Top1, SingleMemberIsPlainArgmaxError) {
  std::mt19937_64 rng(31);
  const auto d = random_dists(rng, 50, 4);
  std::vector<std::size_t> y(50);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = i % 4;
    if (argmax(d.row(i)) != y[i]) ++wrong;
  }
  EXPECT_DOUBLE_EQ(top1_error(std::vector<Matrix>{d}, y), static_cast<double>(wrong) / 50.0);
}

TEST(Top1, UniformMembersPredictClassZero) {
  const std::vector<Matrix> d{Matrix(4, 3, 1.0 / 3.0), Matrix(4, 3, 1.0 / 3.0)};
  const std::vector<std::size_t> y{0, 1, 2, 0};
  EXPECT_DOUBLE_EQ(top1_error(d, y), 0.5);
}

TEST(Top1, ShapeErrors) {
  const std::vector<Matrix> d{Matrix(2, 3, 1.0 / 3.0), Matrix(3, 3, 1.0 / 3.0)};
  const std::vector<std::size_t> y{0, 1};
  EXPECT_THROW(top1_error(d, y), ShapeError);
  EXPECT_THROW(top1_error(std::vector<Matrix>{}, y), ShapeError);
}

TEST(Oracle, Examples) {
  const MemberPredictions p{{1}, {2}};
  EXPECT_EQ(oracle_error(p, std::vector<std::size_t>{1}), 0.0);
  const MemberPredictions wrong{{0, 0}, {1, 1}};
  EXPECT_EQ(oracle_error(wrong, std::vector<std::size_t>{2, 2}), 1.0);
}

TEST(Oracle, DefinitionalAndBelowEveryMember) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<std::size_t> cls(0, 3);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(t % 4);
    MemberPredictions p(m, std::vector<std::size_t>(12));
    std::vector<std::size_t> y(12);
    for (auto& v : y) v = cls(rng);
    for (auto& row : p) {
      for (auto& v : row) v = cls(rng);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      double all_wrong = 1.0;
      for (std::size_t k = 0; k < m; ++k) all_wrong *= p[k][i] != y[i] ? 1.0 : 0.0;
      expected += all_wrong / 12.0;
    }
    const double oe = oracle_error(p, y);
    EXPECT_NEAR(oe, expected, 1e-15);
    for (std::size_t k = 0; k < m; ++k) EXPECT_LE(oe, member_error(p[k], y));
  }
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(predictive_entropy(std::vector<double>(10, 0.1)), std::log(10.0), 1e-12);
  EXPECT_NEAR(predictive_entropy(std::vector<double>(10, 0.1)), 2.302585, 1e-6);
  EXPECT_LT(predictive_entropy(std::vector<double>{1.0, 0.0, 0.0}), 1e-10);
  const std::vector<double> p{0.9, 0.1};
  EXPECT_NEAR(predictive_entropy(p), oracle::entropy(p), 1e-15);
  EXPECT_NEAR(predictive_entropy(p), 0.325083, 1e-6);
}

TEST(Entropy, BoundedOnRandomInputs) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 500; ++t) {
    const std::size_t c = 2 + static_cast<std::size_t>(t % 9);
    const auto p = oracle::random_distribution(rng, c);
    const double h = predictive_entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(c)));
    EXPECT_NEAR(h, oracle::entropy(p), 1e-12);
  }
}

TEST(Classwise, PerfectAndConstantPredictors) {
  const std::vector<std::size_t> y{0, 1, 2, 0, 1, 2};
  const MemberPredictions p{y, std::vector<std::size_t>(6, 0)};
  const auto acc = classwise_accuracy(p, y, 3);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(acc(0, c), 1.0);
  EXPECT_EQ(acc(1, 0), 1.0);
  EXPECT_EQ(acc(1, 1), 0.0);
  EXPECT_EQ(acc(1, 2), 0.0);
  EXPECT_EQ(acc.specialized_classes(1), std::vector<std::size_t>{0});
}

TEST(Classwise, AbsentClassIsUndefined) {
  const std::vector<std::size_t> y{0, 0, 2};
  const MemberPredictions p{{0, 1, 2}};
  const auto acc = classwise_accuracy(p, y, 3);
  EXPECT_FALSE(acc(0, 1).has_value());
  EXPECT_EQ(acc(0, 0), 0.5);
  EXPECT_THROW(classwise_accuracy(p, std::vector<std::size_t>{0, 0, 5}, 3), InputError);
}

TEST(Classwise, FrequencyWeightedMeanIsMemberAccuracy) {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<std::size_t> cls(0, 4);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::size_t> y(30);
    MemberPredictions p(2, std::vector<std::size_t>(30));
    for (auto& v : y) v = cls(rng);
    for (auto& row : p) {
      for (auto& v : row) v = cls(rng);
    }
    const auto acc = classwise_accuracy(p, y, 5);
    for (std::size_t m = 0; m < 2; ++m) {
      double weighted = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        if (acc(m, c)) weighted += *acc(m, c) * static_cast<double>(acc.class_counts[c]) / 30.0;
      }
      EXPECT_NEAR(weighted, 1.0 - member_error(p[m], y), 1e-12);
    }
  }
}

TEST(Histogram, EdgesAndTotals) {
  const double top = std::log(4.0);
  const std::vector<double> zeros(7, 0.0);
  const auto h0 = entropy_histogram(zeros, 5, 0.0, top);
  EXPECT_EQ(h0.counts.front(), 7u);
  const std::vector<double> tops(3, top);
  const auto h1 = entropy_histogram(tops, 5, 0.0, top);
  EXPECT_EQ(h1.counts.back(), 3u);
  EXPECT_EQ(h1.total(), 3u);
  EXPECT_TRUE(entropy_histogram(std::vector<double>{}, 5, 0.0, top).counts.empty());
  EXPECT_NEAR(h1.bin_center(0), top / 10.0, 1e-15);
  EXPECT_THROW(entropy_histogram(zeros, 0, 0.0, top), ConfigError);
}

TEST(Report, CountsAndSerialization) {
  EnsembleConfig c;
  c.members = 3;
  c.hidden = {6};
  c.epochs = 2;
  const auto data = gen_gaussian_clusters(4, 10, 2, 0.3, 5);
  const auto e = train(c, data).ensemble;
  const auto r = evaluate(e, data, 8);
  EXPECT_EQ(r.histogram.total(), data.size() * 3);
  EXPECT_EQ(r.member.size(), 3u);
  EXPECT_LE(r.oracle_error, 1.0);
  EXPECT_GE(r.top1_error, 0.0);

  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("examples").get<std::size_t>(), 40u);
  EXPECT_DOUBLE_EQ(j.at("top1_error").get<double>(), r.top1_error);
  EXPECT_EQ(j.at("member_reports").size(), 3u);
  EXPECT_EQ(j.at("entropy_histogram").at("counts").size(), 8u);

  const auto csv = r.histogram_csv();
  EXPECT_EQ(csv.rfind("bin_center,count\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 9u);
  EXPECT_NE(r.to_text().find("oracle_error = "), std::string::npos);
}

TEST(Report, RejectsMismatchedData) {
  EnsembleConfig c;
  c.members = 2;
  c.epochs = 0;
  const auto e = Ensemble::create(c, 2, 3);
  EXPECT_THROW(evaluate(e, gen_gaussian_clusters(3, 5, 3, 0.3, 1)), ShapeError);
  EXPECT_THROW(evaluate(e, gen_gaussian_clusters(4, 5, 2, 0.3, 1)), ShapeError);
}
