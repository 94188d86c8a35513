// SPDX-License-Identifier: Apache-2.0
#include "cmcl/optimizer.hpp"

#include <cmath>
#include <string>

#include "cmcl/errors.hpp"

namespace cmcl {

void OptimizerSettings::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight decay must be non-negative");
  }
}

OptimizerState OptimizerState::for_params(const NetworkParams& params,
                                          const OptimizerSettings& settings) {
  settings.validate();
  OptimizerState state{settings, {}};
  state.velocity = Gradients::zeros_like(params).layers;
  return state;
}

void sgd_nesterov_step(OptimizerState& state, NetworkParams& params, const Gradients& grads) {
  const std::size_t depth = params.layers.size();
  if (grads.layers.size() != depth || state.velocity.size() != depth) {
    throw ShapeError("optimizer: layer count mismatch");
  }
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    const auto& v = state.velocity[l];
    if (!g.weight.same_shape(p.weight) || !v.weight.same_shape(p.weight) ||
        g.bias.size() != p.bias.size() || v.bias.size() != p.bias.size()) {
      throw ShapeError("optimizer: shape mismatch at layer " + std::to_string(l));
    }
    const auto gw = g.weight.values();
    for (std::size_t k = 0; k < gw.size(); ++k) {
      if (!std::isfinite(gw[k])) {
        throw OptimizerError("non-finite gradient at layer " + std::to_string(l) + " weight[" +
                             std::to_string(k / p.weight.cols()) + "," +
                             std::to_string(k % p.weight.cols()) + "]");
      }
    }
    for (std::size_t k = 0; k < g.bias.size(); ++k) {
      if (!std::isfinite(g.bias[k])) {
        throw OptimizerError("non-finite gradient at layer " + std::to_string(l) + " bias[" +
                             std::to_string(k) + "]");
      }
    }
  }

  const double lr = state.settings.learning_rate;
  const double mu = state.settings.momentum;
  const double wd = state.settings.weight_decay;
  auto update = [&](double& theta, double& vel, double grad) {
    const double g = grad + wd * theta;
    vel = mu * vel - lr * g;
    theta = theta + mu * vel - lr * g;
  };
  for (std::size_t l = 0; l < depth; ++l) {
    auto w = params.layers[l].weight.values();
    auto vw = state.velocity[l].weight.values();
    const auto gw = grads.layers[l].weight.values();
    for (std::size_t k = 0; k < w.size(); ++k) update(w[k], vw[k], gw[k]);
    auto& b = params.layers[l].bias;
    auto& vb = state.velocity[l].bias;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t k = 0; k < b.size(); ++k) update(b[k], vb[k], gb[k]);
  }
}

}  // namespace cmcl
