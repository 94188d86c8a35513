// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cmcl/network.hpp"

namespace cmcl {

struct OptimizerSettings {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;

  void validate() const;
  bool operator==(const OptimizerSettings&) const = default;
};

/// Velocity buffers for SGD with Nesterov momentum; shapes mirror the parameters.
struct OptimizerState {
  OptimizerSettings settings;
  std::vector<LayerGradient> velocity;

  static OptimizerState for_params(const NetworkParams& params, const OptimizerSettings& settings);
  bool operator==(const OptimizerState&) const = default;
};

/// One Nesterov step. With g' = g + weight_decay·θ:
///   v ← μ·v − lr·g'
///   θ ← θ + μ·v − lr·g'
/// Every gradient entry is checked before anything is modified; a non-finite
/// entry raises OptimizerError naming the parameter.
void sgd_nesterov_step(OptimizerState& state, NetworkParams& params, const Gradients& grads);

}  // namespace cmcl
