// SPDX-License-Identifier: Apache-2.0
#include "cmcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cmcl/errors.hpp"

namespace cmcl {

double safe_log(double p) noexcept { return std::log(std::max(p, kProbabilityFloor)); }

void validate_distribution(std::span<const double> dist) {
  if (dist.empty()) throw InputError("empty probability vector");
  double sum = 0.0;
  for (double p : dist) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InputError("probability entry out of [0, 1]: " + std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("probability vector sums to " + std::to_string(sum));
  }
}

LossWithGradient cross_entropy(std::span<const double> dist, std::size_t label) {
  if (label >= dist.size()) {
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(dist.size()) + " classes");
  }
  LossWithGradient out;
  out.value = -safe_log(dist[label]);
  out.logit_gradient.assign(dist.begin(), dist.end());
  out.logit_gradient[label] -= 1.0;
  return out;
}

double kl_from_uniform(std::span<const double> dist) {
  const double c = static_cast<double>(dist.size());
  double sum_log = 0.0;
  for (double p : dist) sum_log += safe_log(p);
  return std::max(0.0, -std::log(c) - sum_log / c);
}

std::vector<double> kl_from_uniform_grad_exact(std::span<const double> dist) {
  const double u = 1.0 / static_cast<double>(dist.size());
  std::vector<double> g(dist.begin(), dist.end());
  for (double& v : g) v -= u;
  return g;
}

Matrix kl_from_uniform_grad_exact(const Matrix& dists) {
  Matrix g = dists;
  const double u = 1.0 / static_cast<double>(dists.cols());
  for (double& v : g.values()) v -= u;
  return g;
}

std::vector<double> stochastic_label_grad(std::span<const double> dist, Rng& rng,
                                          std::size_t samples) {
  if (samples == 0) throw ConfigError("stochastic labeling needs at least one sample");
  std::uniform_int_distribution<std::size_t> pick(0, dist.size() - 1);
  std::vector<double> g(dist.size(), 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t y = pick(rng);
    for (std::size_t c = 0; c < dist.size(); ++c) g[c] += dist[c];
    g[y] -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(samples);
  for (double& v : g) v *= inv;
  return g;
}

std::vector<double> composite_member_loss(std::span<const double> ce, std::span<const double> kl,
                                          double beta) {
  if (ce.size() != kl.size()) {
    throw ShapeError("composite loss: " + std::to_string(ce.size()) + " cross-entropy terms vs " +
                     std::to_string(kl.size()) + " KL terms");
  }
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  std::vector<double> out(ce.size());
  for (std::size_t m = 0; m < ce.size(); ++m) {
    double others = 0.0;
    for (std::size_t n = 0; n < kl.size(); ++n) {
      if (n != m) others += kl[n];
    }
    out[m] = ce[m] + beta * others;
  }
  return out;
}

AssignmentMatrix::AssignmentMatrix(std::size_t examples, std::size_t members, std::size_t overlap)
    : examples_(examples), members_(members), overlap_(overlap), flags_(examples * members, 0) {}

std::size_t AssignmentMatrix::row_sum(std::size_t i) const noexcept {
  std::size_t s = 0;
  for (std::size_t m = 0; m < members_; ++m) s += flags_[i * members_ + m];
  return s;
}

std::size_t AssignmentMatrix::column_sum(std::size_t m) const noexcept {
  std::size_t s = 0;
  for (std::size_t i = 0; i < examples_; ++i) s += flags_[i * members_ + m];
  return s;
}

AssignmentMatrix assign(const Matrix& composite_losses, std::size_t overlap) {
  const std::size_t members = composite_losses.cols();
  if (overlap < 1 || overlap > members) {
    throw ConfigError("overlap K must satisfy 1 <= K <= M (K=" + std::to_string(overlap) +
                      ", M=" + std::to_string(members) + ")");
  }
  AssignmentMatrix a(composite_losses.rows(), members, overlap);
  std::vector<std::size_t> order(members);
  for (std::size_t i = 0; i < composite_losses.rows(); ++i) {
    const auto row = composite_losses.row(i);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return row[x] < row[y]; });
    for (std::size_t k = 0; k < overlap; ++k) a.set(i, order[k], true);
  }
  return a;
}

double oracle_loss(const Matrix& task_losses) {
  double total = 0.0;
  for (std::size_t i = 0; i < task_losses.rows(); ++i) {
    const auto row = task_losses.row(i);
    total += *std::min_element(row.begin(), row.end());
  }
  return total;
}

double ie_loss(const Matrix& task_losses) {
  double total = 0.0;
  for (std::size_t i = 0; i < task_losses.rows(); ++i) {
    for (double v : task_losses.row(i)) total += v;
  }
  return total;
}

double confident_objective(const Matrix& task_losses, const Matrix& kl_values, double beta,
                           const AssignmentMatrix& assignment) {
  if (!task_losses.same_shape(kl_values) || assignment.examples() != task_losses.rows() ||
      assignment.members() != task_losses.cols()) {
    throw ShapeError("confident objective: task, KL and assignment shapes differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < task_losses.rows(); ++i) {
    for (std::size_t m = 0; m < task_losses.cols(); ++m) {
      total += assignment(i, m) ? task_losses(i, m) : beta * kl_values(i, m);
    }
  }
  return total;
}

ConfidentOracleResult confident_oracle_loss(const Matrix& task_losses, const Matrix& kl_values,
                                            double beta, std::size_t overlap) {
  if (!task_losses.same_shape(kl_values)) {
    throw ShapeError("confident oracle loss: task and KL matrices differ in shape");
  }
  Matrix composite(task_losses.rows(), task_losses.cols());
  for (std::size_t i = 0; i < task_losses.rows(); ++i) {
    const auto scores = composite_member_loss(task_losses.row(i), kl_values.row(i), beta);
    std::copy(scores.begin(), scores.end(), composite.row(i).begin());
  }
  ConfidentOracleResult out;
  out.assignment = assign(composite, overlap);
  out.value = confident_objective(task_losses, kl_values, beta, out.assignment);
  return out;
}

}  // namespace cmcl
