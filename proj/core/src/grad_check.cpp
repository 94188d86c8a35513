// SPDX-License-Identifier: Apache-2.0
#include "cmcl/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmcl/errors.hpp"

namespace cmcl {

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const FlatObjective& objective, std::span<const double> point,
                           std::span<const double> analytic, double tolerance, double step) {
  if (point.size() != analytic.size()) {
    throw ShapeError("grad_check: analytic gradient has " + std::to_string(analytic.size()) +
                     " entries for " + std::to_string(point.size()) + " parameters");
  }
  if (!(step > 0.0)) throw CheckError("grad_check: step must be positive");

  std::vector<double> x(point.begin(), point.end());
  const double first = objective(x);
  const double second = objective(x);
  if (!(first == second)) {
    throw CheckError("grad_check: objective is not deterministic (" + std::to_string(first) +
                     " vs " + std::to_string(second) + ")");
  }

  GradCheckReport report;
  report.parameter_count = x.size();
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + step;
    const double up = objective(x);
    x[k] = saved - step;
    const double down = objective(x);
    x[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = relative_error(analytic[k], numeric);
    const double abs_err = std::abs(analytic[k] - numeric);
    if (!std::isfinite(rel) || rel > report.max_relative_error) {
      report.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
      report.worst_index = k;
    }
    report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(const NetworkObjective& loss_fn, const NetworkParams& params,
                           double tolerance, double step) {
  const auto base = loss_fn(params);
  const auto analytic = flatten(base.gradients);
  const auto point = flatten(params);
  NetworkParams scratch = params;
  auto objective = [&](std::span<const double> values) {
    unflatten(values, scratch);
    return loss_fn(scratch).value;
  };
  return grad_check(objective, point, analytic, tolerance, step);
}

}  // namespace cmcl
