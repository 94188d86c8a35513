// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "cmcl/network.hpp"

namespace cmcl {

/// Central-difference step used throughout.
inline constexpr double kGradCheckStep = 1e-5;
/// Denominator floor of the relative error |a − n| / max(|a|, |n|, floor), so
/// entries whose true gradient is ~0 are compared on an absolute scale.
inline constexpr double kRelativeErrorFloor = 1e-4;

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t parameter_count = 0;
  double tolerance = 0.0;
  bool passed = false;
};

double relative_error(double analytic, double numeric) noexcept;

using FlatObjective = std::function<double(std::span<const double>)>;

/// Compares `analytic` against central differences of `objective` around `point`.
/// Throws CheckError when the objective returns different values for the same point.
GradCheckReport grad_check(const FlatObjective& objective, std::span<const double> point,
                           std::span<const double> analytic, double tolerance,
                           double step = kGradCheckStep);

struct LossAndGradient {
  double value = 0.0;
  Gradients gradients;
};

using NetworkObjective = std::function<LossAndGradient(const NetworkParams&)>;

GradCheckReport grad_check(const NetworkObjective& loss_fn, const NetworkParams& params,
                           double tolerance, double step = kGradCheckStep);

}  // namespace cmcl
