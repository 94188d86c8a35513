// SPDX-License-Identifier: Apache-2.0
#include "cmcl/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cmcl/errors.hpp"

namespace cmcl {

namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    if (s.input_dim == 0 || s.output_dim == 0) {
      throw ConfigError("layer " + std::to_string(l) + " has a zero dimension");
    }
    if (s.activation == Activation::softmax && l + 1 != specs.size()) {
      throw ConfigError("softmax is only allowed on the final layer (layer " + std::to_string(l) +
                        ")");
    }
    if (l > 0 && specs[l - 1].output_dim != s.input_dim) {
      throw ConfigError("layer " + std::to_string(l) + " input_dim " + std::to_string(s.input_dim) +
                        " does not chain with previous output_dim " +
                        std::to_string(specs[l - 1].output_dim));
    }
  }
}

void apply_activation(Activation a, Matrix& z_to_out) {
  switch (a) {
    case Activation::relu:
      for (double& v : z_to_out.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::softmax:
      for (std::size_t r = 0; r < z_to_out.rows(); ++r) softmax_inplace(z_to_out.row(r));
      break;
    case Activation::identity:
      break;
  }
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::softmax:
      return "softmax";
    case Activation::identity:
      return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t NetworkParams::input_dim() const {
  if (layers.empty()) throw ShapeError("empty network");
  return layers.front().spec.input_dim;
}

std::size_t NetworkParams::output_dim() const {
  if (layers.empty()) throw ShapeError("empty network");
  return layers.back().spec.output_dim;
}

std::size_t NetworkParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<LayerSpec> NetworkParams::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.spec);
  return out;
}

void NetworkParams::validate() const {
  const auto s = specs();
  try {
    validate_specs(s);
  } catch (const ConfigError& e) {
    throw ShapeError(e.what());
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() != layer.spec.output_dim || layer.weight.cols() != layer.spec.input_dim ||
        layer.bias.size() != layer.spec.output_dim) {
      throw ShapeError("layer " + std::to_string(l) + " parameters do not match its spec");
    }
    if (!layer.weight.all_finite() ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), [](double v) { return std::isfinite(v); })) {
      throw InputError("layer " + std::to_string(l) + " has non-finite parameters");
    }
  }
}

Gradients Gradients::zeros_like(const NetworkParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size())});
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (layers.size() != other.layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    auto& b = layers[l].bias;
    const auto& ob = other.layers[l].bias;
    if (b.size() != ob.size()) throw ShapeError("gradient bias mismatch");
    for (std::size_t j = 0; j < b.size(); ++j) b[j] += ob[j];
  }
  return *this;
}

void Gradients::scale(double s) noexcept {
  for (auto& l : layers) {
    l.weight *= s;
    for (double& v : l.bias) v *= s;
  }
}

void softmax_inplace(std::span<double> row) noexcept {
  if (row.empty()) return;
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

ForwardTrace forward(const NetworkParams& params, const Matrix& batch_inputs,
                     const LayerInputs& injected) {
  params.validate();
  if (batch_inputs.cols() != params.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch_inputs.cols()) +
                     " features, network expects " + std::to_string(params.input_dim()));
  }
  if (!batch_inputs.all_finite()) throw InputError("batch inputs contain non-finite values");
  if (!injected.empty() && injected.size() != params.layers.size()) {
    throw ShapeError("injected features must have one entry per layer");
  }

  ForwardTrace trace;
  trace.layers.reserve(params.layers.size());
  Matrix current = batch_inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    LayerTrace lt;
    if (!injected.empty() && injected[l]) {
      const Matrix& inj = *injected[l];
      if (!inj.same_shape(current)) {
        throw ShapeError("injected features for layer " + std::to_string(l) + " are " +
                         dims(inj.rows(), inj.cols()) + ", expected " +
                         dims(current.rows(), current.cols()));
      }
      if (!inj.all_finite()) throw InputError("injected features contain non-finite values");
      current += inj;
      lt.injected = true;
    }
    lt.input = std::move(current);
    lt.pre_activation = multiply_transposed(lt.input, layer.weight);
    for (std::size_t r = 0; r < lt.pre_activation.rows(); ++r) {
      auto row = lt.pre_activation.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
    }
    lt.output = lt.pre_activation;
    apply_activation(layer.spec.activation, lt.output);
    current = lt.output;
    trace.layers.push_back(std::move(lt));
  }
  return trace;
}

Matrix hidden_activation(const NetworkParams& params, const Matrix& batch_inputs,
                         std::size_t layer) {
  if (layer >= params.layers.size()) {
    throw ShapeError("layer index " + std::to_string(layer) + " out of range");
  }
  if (layer == 0) return batch_inputs;
  NetworkParams prefix;
  prefix.layers.assign(params.layers.begin(), params.layers.begin() + static_cast<long>(layer));
  auto trace = forward(prefix, batch_inputs);
  return std::move(trace.layers.back().output);
}

Gradients backward(const ForwardTrace& trace, const NetworkParams& params,
                   const Matrix& output_gradient, const LayerInputs& input_gradients) {
  const std::size_t depth = params.layers.size();
  if (trace.layers.size() != depth) throw ShapeError("trace does not match network depth");
  if (!input_gradients.empty() && input_gradients.size() != depth) {
    throw ShapeError("input gradients must have one entry per layer");
  }
  const Matrix& final_pre = trace.layers.back().pre_activation;
  if (!output_gradient.same_shape(final_pre)) {
    throw ShapeError("output gradient is " + dims(output_gradient.rows(), output_gradient.cols()) +
                     ", expected " + dims(final_pre.rows(), final_pre.cols()));
  }

  Gradients grads;
  grads.layers.resize(depth);
  grads.injected.resize(depth);

  Matrix delta = output_gradient;  // d loss / d pre-activation of the current layer
  for (std::size_t l = depth; l-- > 0;) {
    const Layer& layer = params.layers[l];
    const LayerTrace& lt = trace.layers[l];
    if (lt.input.cols() != layer.spec.input_dim || lt.pre_activation.cols() != layer.spec.output_dim) {
      throw ShapeError("trace layer " + std::to_string(l) + " does not match parameters");
    }

    auto& lg = grads.layers[l];
    lg.weight = transposed_multiply(delta, lt.input);
    lg.bias.assign(layer.spec.output_dim, 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) lg.bias[j] += row[j];
    }

    Matrix d_input = multiply(delta, layer.weight);
    if (lt.injected) grads.injected[l] = d_input;
    if (!input_gradients.empty() && input_gradients[l]) {
      if (!input_gradients[l]->same_shape(d_input)) {
        throw ShapeError("input gradient for layer " + std::to_string(l) + " has wrong shape");
      }
      d_input += *input_gradients[l];
    }

    if (l == 0) {
      grads.input = std::move(d_input);
      break;
    }
    const LayerTrace& prev = trace.layers[l - 1];
    switch (params.layers[l - 1].spec.activation) {
      case Activation::relu: {
        const auto pre = prev.pre_activation.values();
        auto d = d_input.values();
        for (std::size_t k = 0; k < d.size(); ++k) {
          if (!(pre[k] > 0.0)) d[k] = 0.0;
        }
        break;
      }
      case Activation::identity:
        break;
      case Activation::softmax:
        throw ShapeError("softmax on a hidden layer");
    }
    delta = std::move(d_input);
  }
  return grads;
}

NetworkParams init_params(std::span<const LayerSpec> specs, std::uint64_t seed) {
  validate_specs(specs);
  std::mt19937_64 rng(seed);
  NetworkParams params;
  params.layers.reserve(specs.size());
  for (const auto& s : specs) {
    Layer layer{s, Matrix(s.output_dim, s.input_dim), std::vector<double>(s.output_dim, 0.0)};
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(s.input_dim)));
    for (double& w : layer.weight.values()) w = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<LayerSpec> mlp_specs(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t classes) {
  std::vector<LayerSpec> specs;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    specs.push_back({in, h, Activation::relu});
    in = h;
  }
  specs.push_back({in, classes, Activation::softmax});
  return specs;
}

std::vector<double> flatten(const NetworkParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void unflatten(std::span<const double> values, NetworkParams& params) {
  if (values.size() != params.parameter_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(values.size()) +
                     " entries, network has " + std::to_string(params.parameter_count()));
  }
  std::size_t k = 0;
  for (auto& l : params.layers) {
    for (double& w : l.weight.values()) w = values[k++];
    for (double& b : l.bias) b = values[k++];
  }
}

std::vector<double> flatten(const Gradients& grads) {
  std::vector<double> out;
  for (const auto& l : grads.layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

}  // namespace cmcl
