// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmcl/matrix.hpp"

namespace cmcl {

enum class Activation { relu, softmax, identity };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::relu;

  bool operator==(const LayerSpec&) const = default;
};

struct Layer {
  LayerSpec spec;
  Matrix weight;  // output_dim x input_dim
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

/// Parameters of one feedforward network, first layer first.
struct NetworkParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const noexcept;
  std::vector<LayerSpec> specs() const;

  /// Throws ShapeError / InputError when the chain or entries are invalid.
  void validate() const;

  bool operator==(const NetworkParams&) const = default;
};

/// Per-layer extra matrices aligned with the network's layers. Entry `l`, when
/// present, is added to the input of layer `l` (the output of layer `l-1`).
using LayerInputs = std::vector<std::optional<Matrix>>;

struct LayerTrace {
  Matrix input;           // what the affine map consumed, injection included
  Matrix pre_activation;  // W·input + b
  Matrix output;          // activation applied
  bool injected = false;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;

  /// Final post-activation, a row-stochastic matrix for a softmax head.
  const Matrix& output() const { return layers.back().output; }
  /// Final pre-activation.
  const Matrix& logits() const { return layers.back().pre_activation; }
  std::size_t batch_size() const { return layers.front().input.rows(); }
};

struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;

  bool operator==(const LayerGradient&) const = default;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Matrix input;          // d loss / d batch inputs
  LayerInputs injected;  // d loss / d injected features, where injected

  static Gradients zeros_like(const NetworkParams& params);
  Gradients& operator+=(const Gradients& other);
  void scale(double s) noexcept;
};

/// Row-wise softmax computed with max subtraction.
Matrix softmax_rows(const Matrix& logits);
void softmax_inplace(std::span<double> row) noexcept;

/// Runs the batch through the network. `injected` may be empty or hold one
/// optional entry per layer.
ForwardTrace forward(const NetworkParams& params, const Matrix& batch_inputs,
                     const LayerInputs& injected = {});

/// Output of layer `layer - 1` for `batch_inputs`, i.e. the raw input that layer
/// `layer` sees before any injection. `layer == 0` returns the inputs.
Matrix hidden_activation(const NetworkParams& params, const Matrix& batch_inputs,
                         std::size_t layer);

/// Reverse pass. `output_gradient` is the gradient with respect to the final
/// layer's pre-activation (the logits); for a softmax head pair it with the
/// logit gradients from the losses module. `input_gradients[l]`, when present,
/// is an additional gradient arriving at the raw input of layer `l` from outside
/// the network (peer members consuming this network's features).
Gradients backward(const ForwardTrace& trace, const NetworkParams& params,
                   const Matrix& output_gradient, const LayerInputs& input_gradients = {});

/// He initialization: weights ~ N(0, 2 / input_dim), zero biases.
NetworkParams init_params(std::span<const LayerSpec> specs, std::uint64_t seed);

/// Builds the layer chain input -> hidden... (relu) -> classes (softmax).
std::vector<LayerSpec> mlp_specs(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t classes);

/// Parameters in a fixed order: per layer, weights row-major then biases.
std::vector<double> flatten(const NetworkParams& params);
void unflatten(std::span<const double> values, NetworkParams& params);
std::vector<double> flatten(const Gradients& grads);

}  // namespace cmcl
