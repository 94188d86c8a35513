// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cmcl/matrix.hpp"

namespace cmcl {

/// Class predictions indexed [member][example].
using MemberPredictions = std::vector<std::vector<std::size_t>>;

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

MemberPredictions member_predictions(std::span<const Matrix> member_distributions);

/// Error of argmax over the member-averaged distributions.
double top1_error(std::span<const Matrix> member_distributions,
                  std::span<const std::size_t> labels);

/// Fraction of examples on which no member predicts the true class.
double oracle_error(const MemberPredictions& predictions, std::span<const std::size_t> labels);

/// Plain error rate of one member.
double member_error(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

/// −Σ p log p in nats, with the probability floor inside the log.
double predictive_entropy(std::span<const double> dist) noexcept;

/// Mean predictive entropy over every member and example.
double mean_entropy(std::span<const Matrix> member_distributions);

/// Per-member per-class accuracy. Classes with no examples are empty.
struct ClasswiseAccuracy {
  std::size_t members = 0;
  std::size_t classes = 0;
  std::vector<std::optional<double>> values;  // members x classes
  std::vector<std::size_t> class_counts;

  std::optional<double> operator()(std::size_t m, std::size_t c) const {
    return values[m * classes + c];
  }
  /// Classes on which member m's accuracy exceeds `threshold`.
  std::vector<std::size_t> specialized_classes(std::size_t m, double threshold = 0.9) const;
};

ClasswiseAccuracy classwise_accuracy(const MemberPredictions& predictions,
                                     std::span<const std::size_t> labels, std::size_t classes);

struct Histogram {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::size_t> counts;

  double bin_center(std::size_t k) const noexcept;
  std::size_t total() const noexcept;
};

/// Fixed-width bins over [lower, upper]; values outside are clamped, so the
/// upper edge lands in the last bin. Empty input gives an empty histogram.
Histogram entropy_histogram(std::span<const double> entropies, std::size_t bins, double lower,
                            double upper);

}  // namespace cmcl
