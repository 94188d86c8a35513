// SPDX-License-Identifier: Apache-2.0
#include "cmcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmcl/errors.hpp"
#include "cmcl/losses.hpp"

namespace cmcl {

namespace {

void check_distributions(std::span<const Matrix> dists, std::size_t examples) {
  if (dists.empty()) throw ShapeError("need at least one member");
  for (const auto& d : dists) {
    if (!d.same_shape(dists.front())) throw ShapeError("member distributions differ in shape");
  }
  if (dists.front().rows() != examples) {
    throw ShapeError("distributions have " + std::to_string(dists.front().rows()) +
                     " rows for " + std::to_string(examples) + " labels");
  }
}

}  // namespace

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

MemberPredictions member_predictions(std::span<const Matrix> member_distributions) {
  MemberPredictions out;
  out.reserve(member_distributions.size());
  for (const auto& d : member_distributions) {
    std::vector<std::size_t> preds(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) preds[i] = argmax(d.row(i));
    out.push_back(std::move(preds));
  }
  return out;
}

double top1_error(std::span<const Matrix> member_distributions,
                  std::span<const std::size_t> labels) {
  check_distributions(member_distributions, labels.size());
  if (labels.empty()) return 0.0;
  const std::size_t classes = member_distributions.front().cols();
  std::vector<double> avg(classes);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::fill(avg.begin(), avg.end(), 0.0);
    for (const auto& d : member_distributions) {
      const auto row = d.row(i);
      for (std::size_t c = 0; c < classes; ++c) avg[c] += row[c];
    }
    for (double& v : avg) v /= static_cast<double>(member_distributions.size());
    if (argmax(avg) != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double oracle_error(const MemberPredictions& predictions, std::span<const std::size_t> labels) {
  if (predictions.empty()) throw ShapeError("need at least one member");
  for (const auto& p : predictions) {
    if (p.size() != labels.size()) throw ShapeError("prediction count differs from label count");
  }
  if (labels.empty()) return 0.0;
  std::size_t missed = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool any = std::any_of(predictions.begin(), predictions.end(),
                                 [&](const auto& p) { return p[i] == labels[i]; });
    if (!any) ++missed;
  }
  return static_cast<double>(missed) / static_cast<double>(labels.size());
}

double member_error(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("prediction count differs");
  if (labels.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += predictions[i] != labels[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double predictive_entropy(std::span<const double> dist) noexcept {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * safe_log(p);
  }
  const double cap = std::log(static_cast<double>(dist.size()));
  return std::clamp(h, 0.0, cap);
}

double mean_entropy(std::span<const Matrix> member_distributions) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& d : member_distributions) {
    for (std::size_t i = 0; i < d.rows(); ++i) {
      total += predictive_entropy(d.row(i));
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::vector<std::size_t> ClasswiseAccuracy::specialized_classes(std::size_t m,
                                                                double threshold) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto acc = (*this)(m, c);
    if (acc && *acc > threshold) out.push_back(c);
  }
  return out;
}

ClasswiseAccuracy classwise_accuracy(const MemberPredictions& predictions,
                                     std::span<const std::size_t> labels, std::size_t classes) {
  ClasswiseAccuracy out;
  out.members = predictions.size();
  out.classes = classes;
  out.class_counts.assign(classes, 0);
  for (auto y : labels) {
    if (y >= classes) throw InputError("label " + std::to_string(y) + " out of range");
    ++out.class_counts[y];
  }
  out.values.assign(out.members * classes, std::nullopt);
  for (std::size_t m = 0; m < out.members; ++m) {
    if (predictions[m].size() != labels.size()) throw ShapeError("prediction count differs");
    std::vector<std::size_t> correct(classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (predictions[m][i] == labels[i]) ++correct[labels[i]];
    }
    for (std::size_t c = 0; c < classes; ++c) {
      if (out.class_counts[c] > 0) {
        out.values[m * classes + c] =
            static_cast<double>(correct[c]) / static_cast<double>(out.class_counts[c]);
      }
    }
  }
  return out;
}

double Histogram::bin_center(std::size_t k) const noexcept {
  const double width = (upper - lower) / static_cast<double>(counts.size());
  return lower + (static_cast<double>(k) + 0.5) * width;
}

std::size_t Histogram::total() const noexcept {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram entropy_histogram(std::span<const double> entropies, std::size_t bins, double lower,
                            double upper) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (!(upper > lower)) throw ConfigError("histogram range must be non-empty");
  Histogram h{lower, upper, {}};
  if (entropies.empty()) return h;
  h.counts.assign(bins, 0);
  const double width = (upper - lower) / static_cast<double>(bins);
  for (double e : entropies) {
    std::size_t k = 0;
    if (e >= upper) {
      k = bins - 1;
    } else if (e > lower) {
      k = std::min(bins - 1, static_cast<std::size_t>((e - lower) / width));
    }
    ++h.counts[k];
  }
  return h;
}

}  // namespace cmcl
