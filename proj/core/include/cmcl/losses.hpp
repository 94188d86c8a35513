// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cmcl/matrix.hpp"

namespace cmcl {

using Rng = std::mt19937_64;

/// Floor applied to probabilities inside every log term.
inline constexpr double kProbabilityFloor = 1e-12;

double safe_log(double p) noexcept;

/// Throws InputError unless `dist` is a probability vector (entries in [0, 1], sum 1 ± 1e-9).
void validate_distribution(std::span<const double> dist);

struct LossWithGradient {
  double value = 0.0;
  std::vector<double> logit_gradient;
};

/// −log p_label and its softmax-logit gradient p − onehot(label).
LossWithGradient cross_entropy(std::span<const double> dist, std::size_t label);

/// KL(U ‖ p) = −log C − (1/C)·Σ_y log p_y, in nats.
double kl_from_uniform(std::span<const double> dist);

/// Exact logit gradient of kl_from_uniform: p − 1/C.
std::vector<double> kl_from_uniform_grad_exact(std::span<const double> dist);
/// Row-wise over a batch of distributions.
Matrix kl_from_uniform_grad_exact(const Matrix& dists);

/// Monte-Carlo estimate of the KL-to-uniform logit gradient: averages the
/// cross-entropy gradient p − onehot(ŷ) over `samples` labels ŷ ~ U{0..C-1}.
/// The caller scales by β.
std::vector<double> stochastic_label_grad(std::span<const double> dist, Rng& rng,
                                          std::size_t samples = 1);

/// L^m = ce[m] + β·Σ_{n≠m} kl[n], the per-member score used to pick assignments.
std::vector<double> composite_member_loss(std::span<const double> ce, std::span<const double> kl,
                                          double beta);

/// Binary N×M assignment; every row has exactly `overlap` ones.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(std::size_t examples, std::size_t members, std::size_t overlap);

  std::size_t examples() const noexcept { return examples_; }
  std::size_t members() const noexcept { return members_; }
  std::size_t overlap() const noexcept { return overlap_; }

  bool operator()(std::size_t i, std::size_t m) const noexcept {
    return flags_[i * members_ + m] != 0;
  }
  void set(std::size_t i, std::size_t m, bool on) noexcept {
    flags_[i * members_ + m] = on ? 1 : 0;
  }
  std::size_t row_sum(std::size_t i) const noexcept;
  /// Number of examples assigned to member m.
  std::size_t column_sum(std::size_t m) const noexcept;

  bool operator==(const AssignmentMatrix&) const = default;

 private:
  std::size_t examples_ = 0;
  std::size_t members_ = 0;
  std::size_t overlap_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Per row, flags the `overlap` members with the smallest score; ties go to the
/// lower member index.
AssignmentMatrix assign(const Matrix& composite_losses, std::size_t overlap);

/// Σ_i min_m task_losses(i, m).
double oracle_loss(const Matrix& task_losses);
/// Σ_i Σ_m task_losses(i, m).
double ie_loss(const Matrix& task_losses);

struct ConfidentOracleResult {
  double value = 0.0;
  AssignmentMatrix assignment;
};

/// Σ_i Σ_m [v·ℓ + β(1−v)·KL] evaluated at a given assignment.
double confident_objective(const Matrix& task_losses, const Matrix& kl_values, double beta,
                           const AssignmentMatrix& assignment);

/// Minimum of confident_objective over all assignments with row sums `overlap`.
/// The per-row objective equals Σ_m β·KL_m + Σ_m v_m·(ℓ_m − β·KL_m), so the
/// top-K rows of the composite score solve it exactly.
ConfidentOracleResult confident_oracle_loss(const Matrix& task_losses, const Matrix& kl_values,
                                            double beta, std::size_t overlap);

/// Per-example per-member terms for one batch.
struct LossBreakdown {
  Matrix task;       // cross-entropy ℓ(y_i, P_m)
  Matrix kl;         // KL(U ‖ P_m(·|x_i))
  Matrix composite;  // L^m_i
  double task_total = 0.0;
  double kl_total = 0.0;
  double objective = 0.0;  // confident objective at the chosen assignment
};

}  // namespace cmcl
