// SPDX-License-Identifier: Apache-2.0
#include "cmcl/ensemble.hpp"

#include <cmath>
#include <string>

#include "cmcl/errors.hpp"
#include "cmcl/metrics.hpp"

namespace cmcl {

namespace {

std::uint64_t member_seed(std::uint64_t seed, std::size_t member) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(member), 0x3e3b3e5u};
  std::mt19937_64 rng(seq);
  return rng();
}

std::size_t shared_width(const Ensemble& e) {
  return e.members.front().layers[*e.config.share_layer].spec.input_dim;
}

void require_mode(const Ensemble& e, Mode expected) {
  if (e.config.mode != expected) {
    throw ConfigError("step for mode " + std::string(to_string(expected)) +
                      " called on an ensemble configured for " +
                      std::string(to_string(e.config.mode)));
  }
}

void check_batch(const Ensemble& e, const Batch& batch) {
  if (batch.size() == 0) throw InputError("empty batch");
  if (batch.features.rows() != batch.size()) throw ShapeError("batch rows and labels differ");
  for (auto y : batch.labels) {
    if (y >= e.classes) throw InputError("batch label " + std::to_string(y) + " out of range");
  }
}

// Logit gradients of the batch-mean objective. Assigned rows get p − onehot(y);
// unassigned rows get β times the exact or sampled KL-to-uniform gradient.
std::vector<Matrix> objective_logit_gradients(const std::vector<ForwardTrace>& traces,
                                              std::span<const std::size_t> labels,
                                              const AssignmentMatrix& assignment, double beta,
                                              GradientVariant variant, std::size_t samples,
                                              Rng* rng) {
  const std::size_t batch = labels.size();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  std::vector<Matrix> out;
  out.reserve(traces.size());
  for (std::size_t m = 0; m < traces.size(); ++m) {
    const Matrix& probs = traces[m].output();
    Matrix g(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < batch; ++i) {
      const auto p = probs.row(i);
      auto row = g.row(i);
      if (assignment(i, m)) {
        for (std::size_t c = 0; c < p.size(); ++c) row[c] = p[c] * inv_batch;
        row[labels[i]] -= inv_batch;
      } else if (beta > 0.0) {
        std::vector<double> kl_grad;
        if (variant == GradientVariant::exact_v0) {
          kl_grad = kl_from_uniform_grad_exact(p);
        } else {
          if (rng == nullptr) throw ConfigError("stochastic labeling needs an RNG");
          kl_grad = stochastic_label_grad(p, *rng, samples);
        }
        for (std::size_t c = 0; c < p.size(); ++c) row[c] = beta * kl_grad[c] * inv_batch;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

StepResult apply_step(Ensemble& e, const Batch& batch, const MaskSet* masks,
                      std::vector<ForwardTrace> traces, LossBreakdown losses,
                      AssignmentMatrix assignment, double beta, Rng* rng) {
  losses.objective = confident_objective(losses.task, losses.kl, beta, assignment);
  const auto logit_grads = objective_logit_gradients(traces, batch.labels, assignment, beta,
                                                     e.config.variant, e.config.label_samples, rng);
  const auto grads = backward_ensemble(e, traces, logit_grads, masks);
  for (std::size_t m = 0; m < e.size(); ++m) {
    sgd_nesterov_step(e.optimizers[m], e.members[m], grads[m]);
  }
  return {std::move(losses), std::move(assignment)};
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::ie:
      return "ie";
    case Mode::mcl:
      return "mcl";
    case Mode::cmcl:
      return "cmcl";
  }
  return "unknown";
}

std::string_view to_string(GradientVariant v) noexcept {
  return v == GradientVariant::exact_v0 ? "v0" : "v1";
}

Mode mode_from_string(std::string_view s) {
  if (s == "ie") return Mode::ie;
  if (s == "mcl") return Mode::mcl;
  if (s == "cmcl") return Mode::cmcl;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected ie, mcl or cmcl)");
}

GradientVariant variant_from_string(std::string_view s) {
  if (s == "v0") return GradientVariant::exact_v0;
  if (s == "v1") return GradientVariant::stochastic_v1;
  throw ConfigError("unknown gradient variant '" + std::string(s) + "' (expected v0 or v1)");
}

double LrSchedule::rate_at(double base, std::size_t epoch) const noexcept {
  if (every == 0) return base;
  return base * std::pow(factor, static_cast<double>(epoch / every));
}

void EnsembleConfig::validate() const {
  if (members < 1) throw ConfigError("members M must be at least 1");
  if (mode != Mode::ie && (overlap < 1 || overlap > members)) {
    throw ConfigError("overlap K must satisfy 1 <= K <= M (K=" + std::to_string(overlap) +
                      ", M=" + std::to_string(members) + ")");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be non-negative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  for (auto h : hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be at least 1");
  }
  if (share_layer && (*share_layer < 1 || *share_layer > hidden.size())) {
    throw ConfigError("share layer must lie in [1, " + std::to_string(hidden.size()) +
                      "] so that it receives a hidden activation");
  }
  if (label_samples < 1) throw ConfigError("label samples S must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(schedule.factor > 0.0)) throw ConfigError("learning-rate decay factor must be positive");
  optimizer.validate();
}

EnsembleConfig EnsembleConfig::effective() const {
  EnsembleConfig e = *this;
  if (mode == Mode::mcl) {
    e.beta = 0.0;
    e.share_layer.reset();
  } else if (mode == Mode::ie) {
    e.overlap = members;
    e.beta = 0.0;
    e.share_layer.reset();
  }
  return e;
}

bool EnsembleConfig::sharing_enabled() const noexcept {
  return mode == Mode::cmcl && share_layer.has_value() && members > 1;
}

MaskSet::MaskSet(std::size_t members, std::size_t width, bool fill)
    : members_(members), width_(width), bits_(members * members * width, fill ? 1 : 0) {}

MaskSet MaskSet::sample(std::size_t members, std::size_t width, double lambda, Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  MaskSet masks(members, width);
  std::bernoulli_distribution keep(lambda);
  for (std::size_t from = 0; from < members; ++from) {
    for (std::size_t to = 0; to < members; ++to) {
      if (from == to) continue;
      for (std::size_t k = 0; k < width; ++k) masks.set(from, to, k, keep(rng));
    }
  }
  return masks;
}

Ensemble Ensemble::create(const EnsembleConfig& config, std::size_t input_dim,
                          std::size_t classes) {
  config.validate();
  if (input_dim < 1) throw ConfigError("input dimension must be at least 1");
  if (classes < 1) throw ConfigError("class count must be at least 1");
  Ensemble e;
  e.config = config.effective();
  e.input_dim = input_dim;
  e.classes = classes;
  const auto specs = mlp_specs(input_dim, e.config.hidden, classes);
  for (std::size_t m = 0; m < e.config.members; ++m) {
    e.members.push_back(init_params(specs, member_seed(e.config.seed, m)));
    e.optimizers.push_back(OptimizerState::for_params(e.members.back(), e.config.optimizer));
  }
  return e;
}

std::vector<ForwardTrace> forward_ensemble(const Ensemble& ensemble, const Matrix& inputs,
                                           const MaskSet* masks, bool eval_mode) {
  std::vector<ForwardTrace> traces;
  traces.reserve(ensemble.size());
  if (!ensemble.config.sharing_enabled()) {
    for (const auto& member : ensemble.members) traces.push_back(forward(member, inputs));
    return traces;
  }

  const std::size_t layer = *ensemble.config.share_layer;
  const std::size_t width = shared_width(ensemble);
  const std::size_t count = ensemble.size();
  if (!eval_mode) {
    if (masks == nullptr) throw ConfigError("feature sharing needs masks in training mode");
    if (masks->members() != count || masks->width() != width) {
      throw ShapeError("mask set does not match ensemble (members " +
                       std::to_string(masks->members()) + ", width " +
                       std::to_string(masks->width()) + ")");
    }
  }

  std::vector<Matrix> hidden;
  hidden.reserve(count);
  for (const auto& member : ensemble.members) {
    hidden.push_back(hidden_activation(member, inputs, layer));
    if (hidden.back().cols() != width) throw ShapeError("shared feature widths differ");
  }

  const double lambda = ensemble.config.lambda;
  for (std::size_t m = 0; m < count; ++m) {
    Matrix injected(inputs.rows(), width);
    for (std::size_t n = 0; n < count; ++n) {
      if (n == m) continue;
      for (std::size_t r = 0; r < inputs.rows(); ++r) {
        const auto src = hidden[n].row(r);
        auto dst = injected.row(r);
        for (std::size_t k = 0; k < width; ++k) {
          if (eval_mode) {
            dst[k] += lambda * src[k];
          } else if ((*masks)(n, m, k)) {
            dst[k] += src[k];
          }
        }
      }
    }
    LayerInputs inj(ensemble.members[m].layers.size());
    inj[layer] = std::move(injected);
    traces.push_back(forward(ensemble.members[m], inputs, inj));
  }
  return traces;
}

std::vector<Gradients> backward_ensemble(const Ensemble& ensemble,
                                         const std::vector<ForwardTrace>& traces,
                                         const std::vector<Matrix>& logit_gradients,
                                         const MaskSet* masks, bool eval_mode) {
  const std::size_t count = ensemble.size();
  if (traces.size() != count || logit_gradients.size() != count) {
    throw ShapeError("backward_ensemble: expected one trace and gradient per member");
  }
  std::vector<Gradients> grads;
  grads.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    grads.push_back(backward(traces[m], ensemble.members[m], logit_gradients[m]));
  }
  if (!ensemble.config.sharing_enabled()) return grads;
  if (!eval_mode && masks == nullptr) throw ConfigError("feature sharing needs masks");

  // Member m consumed σ_{nm} ⋆ h_n, so h_n receives σ_{nm} ⋆ dL/d(injected_m).
  const std::size_t layer = *ensemble.config.share_layer;
  const std::size_t width = shared_width(ensemble);
  const std::size_t rows = traces.front().batch_size();
  const double lambda = ensemble.config.lambda;
  std::vector<Matrix> peer(count, Matrix(rows, width));
  for (std::size_t m = 0; m < count; ++m) {
    const auto& d_inj = grads[m].injected[layer];
    if (!d_inj) throw ShapeError("trace of member " + std::to_string(m) + " has no injection");
    for (std::size_t n = 0; n < count; ++n) {
      if (n == m) continue;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = d_inj->row(r);
        auto dst = peer[n].row(r);
        for (std::size_t k = 0; k < width; ++k) {
          if (eval_mode) {
            dst[k] += lambda * src[k];
          } else if ((*masks)(n, m, k)) {
            dst[k] += src[k];
          }
        }
      }
    }
  }
  for (std::size_t n = 0; n < count; ++n) {
    LayerInputs extra(ensemble.members[n].layers.size());
    extra[layer] = std::move(peer[n]);
    const Matrix zero(logit_gradients[n].rows(), logit_gradients[n].cols());
    const auto through_peers = backward(traces[n], ensemble.members[n], zero, extra);
    grads[n] += through_peers;
  }
  return grads;
}

LossBreakdown loss_terms(const std::vector<ForwardTrace>& traces,
                         std::span<const std::size_t> labels, double beta) {
  if (traces.empty()) throw ShapeError("no member traces");
  const std::size_t count = traces.size();
  const std::size_t batch = labels.size();
  LossBreakdown out;
  out.task = Matrix(batch, count);
  out.kl = Matrix(batch, count);
  out.composite = Matrix(batch, count);
  for (std::size_t m = 0; m < count; ++m) {
    const Matrix& probs = traces[m].output();
    if (probs.rows() != batch) throw ShapeError("trace batch size differs from label count");
    for (std::size_t i = 0; i < batch; ++i) {
      const auto p = probs.row(i);
      if (labels[i] >= p.size()) throw InputError("label out of range");
      out.task(i, m) = -safe_log(p[labels[i]]);
      out.kl(i, m) = kl_from_uniform(p);
      out.task_total += out.task(i, m);
      out.kl_total += out.kl(i, m);
    }
  }
  for (std::size_t i = 0; i < batch; ++i) {
    const auto scores = composite_member_loss(out.task.row(i), out.kl.row(i), beta);
    std::copy(scores.begin(), scores.end(), out.composite.row(i).begin());
  }
  return out;
}

ObjectiveEvaluation confident_objective_and_gradient(const Ensemble& ensemble, const Batch& batch,
                                                     const MaskSet* masks,
                                                     const AssignmentMatrix& assignment,
                                                     double beta) {
  check_batch(ensemble, batch);
  const auto traces = forward_ensemble(ensemble, batch.features, masks, false);
  const auto losses = loss_terms(traces, batch.labels, beta);
  ObjectiveEvaluation out;
  out.value = confident_objective(losses.task, losses.kl, beta, assignment) /
              static_cast<double>(batch.size());
  const auto logit_grads = objective_logit_gradients(
      traces, batch.labels, assignment, beta, GradientVariant::exact_v0, 1, nullptr);
  out.gradients = backward_ensemble(ensemble, traces, logit_grads, masks);
  return out;
}

StepResult train_step_cmcl(Ensemble& ensemble, const Batch& batch, Rng& rng) {
  require_mode(ensemble, Mode::cmcl);
  check_batch(ensemble, batch);
  const auto& cfg = ensemble.config;
  std::optional<MaskSet> masks;
  if (cfg.sharing_enabled()) {
    masks = MaskSet::sample(ensemble.size(), shared_width(ensemble), cfg.lambda, rng);
  }
  const MaskSet* mask_ptr = masks ? &*masks : nullptr;
  auto traces = forward_ensemble(ensemble, batch.features, mask_ptr, false);
  auto losses = loss_terms(traces, batch.labels, cfg.beta);
  auto assignment = assign(losses.composite, cfg.overlap);
  return apply_step(ensemble, batch, mask_ptr, std::move(traces), std::move(losses),
                    std::move(assignment), cfg.beta, &rng);
}

StepResult train_step_mcl(Ensemble& ensemble, const Batch& batch) {
  require_mode(ensemble, Mode::mcl);
  check_batch(ensemble, batch);
  auto traces = forward_ensemble(ensemble, batch.features, nullptr, false);
  auto losses = loss_terms(traces, batch.labels, 0.0);
  auto assignment = assign(losses.task, ensemble.config.overlap);
  return apply_step(ensemble, batch, nullptr, std::move(traces), std::move(losses),
                    std::move(assignment), 0.0, nullptr);
}

StepResult train_step_ie(Ensemble& ensemble, const Batch& batch) {
  require_mode(ensemble, Mode::ie);
  check_batch(ensemble, batch);
  auto traces = forward_ensemble(ensemble, batch.features, nullptr, false);
  auto losses = loss_terms(traces, batch.labels, 0.0);
  AssignmentMatrix assignment(batch.size(), ensemble.size(), ensemble.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t m = 0; m < ensemble.size(); ++m) assignment.set(i, m, true);
  }
  return apply_step(ensemble, batch, nullptr, std::move(traces), std::move(losses),
                    std::move(assignment), 0.0, nullptr);
}

StepResult train_step(Ensemble& ensemble, const Batch& batch, Rng& rng) {
  switch (ensemble.config.mode) {
    case Mode::ie:
      return train_step_ie(ensemble, batch);
    case Mode::mcl:
      return train_step_mcl(ensemble, batch);
    case Mode::cmcl:
      return train_step_cmcl(ensemble, batch, rng);
  }
  throw ConfigError("unknown mode");
}

Rng step_rng(std::uint64_t seed, std::size_t epoch, std::size_t batch_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(batch_index),
                    0x57e9u};
  return Rng(seq);
}

TrainResult train(const EnsembleConfig& config, const Dataset& train_data, const Dataset* eval) {
  config.validate();
  train_data.validate();
  if (eval != nullptr) {
    eval->validate();
    if (eval->dim() != train_data.dim() || eval->classes > train_data.classes) {
      throw ShapeError("evaluation data does not match training data");
    }
  }
  return train(Ensemble::create(config, train_data.dim(), train_data.classes), train_data, eval);
}

TrainResult train(Ensemble ensemble, const Dataset& train_data, const Dataset* eval) {
  train_data.validate();
  if (train_data.dim() != ensemble.input_dim) throw ShapeError("dataset dimension mismatch");
  if (train_data.classes > ensemble.classes) throw ShapeError("dataset has too many classes");

  const auto& cfg = ensemble.config;
  const Dataset& monitor = eval != nullptr ? *eval : train_data;
  TrainResult result;
  for (std::size_t epoch = ensemble.epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.schedule.rate_at(cfg.optimizer.learning_rate, epoch);
    for (auto& opt : ensemble.optimizers) opt.settings.learning_rate = lr;

    double objective = 0.0;
    const auto epoch_batches = batches(train_data, cfg.batch_size, cfg.seed, epoch);
    for (std::size_t b = 0; b < epoch_batches.size(); ++b) {
      Rng rng = step_rng(cfg.seed, epoch, b);
      objective += train_step(ensemble, epoch_batches[b], rng).losses.objective;
    }
    ensemble.epoch = epoch + 1;

    const auto traces = forward_ensemble(ensemble, monitor.features, nullptr, true);
    std::vector<Matrix> dists;
    dists.reserve(traces.size());
    for (const auto& t : traces) dists.push_back(t.output());
    const auto predictions = member_predictions(dists);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.mode = cfg.mode;
    rec.train_objective = objective / static_cast<double>(train_data.size());
    rec.top1_error = top1_error(dists, monitor.labels);
    rec.oracle_error = oracle_error(predictions, monitor.labels);
    rec.mean_entropy = mean_entropy(dists);
    result.log.push_back(rec);
  }
  for (auto& opt : ensemble.optimizers) opt.settings.learning_rate = cfg.optimizer.learning_rate;
  result.ensemble = std::move(ensemble);
  return result;
}

}  // namespace cmcl
