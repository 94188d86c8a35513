// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmcl/data.hpp"
#include "cmcl/losses.hpp"
#include "cmcl/network.hpp"
#include "cmcl/optimizer.hpp"

namespace cmcl {

enum class Mode { ie, mcl, cmcl };
enum class GradientVariant { exact_v0, stochastic_v1 };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(GradientVariant v) noexcept;
Mode mode_from_string(std::string_view s);
GradientVariant variant_from_string(std::string_view s);

/// Step decay: the learning rate is multiplied by `factor` every `every` epochs.
/// `every == 0` keeps it constant.
struct LrSchedule {
  std::size_t every = 0;
  double factor = 0.1;

  double rate_at(double base, std::size_t epoch) const noexcept;
  bool operator==(const LrSchedule&) const = default;
};

struct EnsembleConfig {
  Mode mode = Mode::cmcl;
  std::size_t members = 5;
  std::size_t overlap = 1;  // K
  double beta = 0.75;
  double lambda = 0.7;  // Bernoulli keep probability of the sharing masks
  /// Index of the layer whose input receives peer features; 1 shares the first
  /// hidden activation. Empty disables sharing.
  std::optional<std::size_t> share_layer;
  GradientVariant variant = GradientVariant::exact_v0;
  std::size_t label_samples = 1;  // S for stochastic labeling
  std::vector<std::size_t> hidden = {32};
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  OptimizerSettings optimizer;
  LrSchedule schedule;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  /// Mode normalization: MCL drops β and sharing; IE uses K = M and drops β
  /// and sharing.
  EnsembleConfig effective() const;
  bool sharing_enabled() const noexcept;

  bool operator==(const EnsembleConfig&) const = default;
};

/// Bernoulli(λ) masks σ_{nm} for every ordered member pair, one bit per
/// shared feature. A single mask is shared by every example of a minibatch.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(std::size_t members, std::size_t width, bool fill = false);

  static MaskSet sample(std::size_t members, std::size_t width, double lambda, Rng& rng);

  std::size_t members() const noexcept { return members_; }
  std::size_t width() const noexcept { return width_; }
  /// Mask from member `from` into member `to`.
  bool operator()(std::size_t from, std::size_t to, std::size_t k) const noexcept {
    return bits_[(from * members_ + to) * width_ + k] != 0;
  }
  void set(std::size_t from, std::size_t to, std::size_t k, bool on) noexcept {
    bits_[(from * members_ + to) * width_ + k] = on ? 1 : 0;
  }

  bool operator==(const MaskSet&) const = default;

 private:
  std::size_t members_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Ensemble {
  EnsembleConfig config;
  std::vector<NetworkParams> members;
  std::vector<OptimizerState> optimizers;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::size_t epoch = 0;  // completed epochs

  /// Members initialized from seeds derived from config.seed and the member index.
  static Ensemble create(const EnsembleConfig& config, std::size_t input_dim, std::size_t classes);

  std::size_t size() const noexcept { return members.size(); }
  bool operator==(const Ensemble&) const = default;
};

/// Forward pass of every member. With sharing enabled, member m's share layer
/// consumes h_m + Σ_{n≠m} σ_{nm} ⋆ h_n. In eval mode the masks are replaced by
/// the constant λ. Throws ConfigError if sharing is on, eval_mode is off and no
/// masks are supplied.
std::vector<ForwardTrace> forward_ensemble(const Ensemble& ensemble, const Matrix& inputs,
                                           const MaskSet* masks, bool eval_mode);

/// Backpropagates per-member logit gradients, routing the gradient of every
/// injected feature back into the peer that produced it.
std::vector<Gradients> backward_ensemble(const Ensemble& ensemble,
                                         const std::vector<ForwardTrace>& traces,
                                         const std::vector<Matrix>& logit_gradients,
                                         const MaskSet* masks, bool eval_mode = false);

/// Per-example per-member cross-entropy and KL-to-uniform.
LossBreakdown loss_terms(const std::vector<ForwardTrace>& traces,
                         std::span<const std::size_t> labels, double beta);

struct ObjectiveEvaluation {
  double value = 0.0;
  std::vector<Gradients> gradients;  // per member, peer contributions included
};

/// Batch-mean confident objective (1/B)·Σ_i Σ_m [v·ℓ + β(1−v)·KL] at a fixed
/// assignment and fixed masks, with its exact gradient for every member.
ObjectiveEvaluation confident_objective_and_gradient(const Ensemble& ensemble, const Batch& batch,
                                                     const MaskSet* masks,
                                                     const AssignmentMatrix& assignment,
                                                     double beta);

struct StepResult {
  LossBreakdown losses;
  AssignmentMatrix assignment;
};

/// One confident step: masks, forward, assignment by composite loss, then a
/// cross-entropy gradient on assigned examples and a β-scaled KL gradient
/// (exact or stochastic labeling) on the rest, followed by one optimizer step
/// per member.
StepResult train_step_cmcl(Ensemble& ensemble, const Batch& batch, Rng& rng);
/// Top-K assignment by cross-entropy; unassigned examples contribute nothing.
StepResult train_step_mcl(Ensemble& ensemble, const Batch& batch);
/// Every member takes a cross-entropy step on the whole batch.
StepResult train_step_ie(Ensemble& ensemble, const Batch& batch);
/// Dispatches on config.mode.
StepResult train_step(Ensemble& ensemble, const Batch& batch, Rng& rng);

/// Deterministic RNG for the step at (epoch, batch).
Rng step_rng(std::uint64_t seed, std::size_t epoch, std::size_t batch_index);

struct EpochRecord {
  std::size_t epoch = 0;
  Mode mode = Mode::cmcl;
  double train_objective = 0.0;  // mean per-example confident objective
  double oracle_error = 0.0;
  double top1_error = 0.0;
  double mean_entropy = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  Ensemble ensemble;
  std::vector<EpochRecord> log;
};

/// Runs config.epochs epochs of seeded minibatch steps. Per-epoch metrics are
/// computed on `eval` when given, otherwise on `train`.
TrainResult train(const EnsembleConfig& config, const Dataset& train,
                  const Dataset* eval = nullptr);
/// Continues training an existing ensemble for its configured epochs.
TrainResult train(Ensemble ensemble, const Dataset& train, const Dataset* eval = nullptr);

/// JSON object with nested "optimizer" section. Keys absent from `json`
/// keep their value from `base`; unknown keys raise ConfigError.
std::string config_to_json(const EnsembleConfig& config);
EnsembleConfig config_from_json(std::string_view json, const EnsembleConfig& base = {});

/// Self-describing JSON checkpoint; doubles round-trip exactly.
void save_checkpoint(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const Ensemble& ensemble);
Ensemble checkpoint_from_string(const std::string& text);

}  // namespace cmcl
