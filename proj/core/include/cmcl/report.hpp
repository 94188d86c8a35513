// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cmcl/data.hpp"
#include "cmcl/ensemble.hpp"
#include "cmcl/metrics.hpp"

namespace cmcl {

struct MemberReport {
  double error = 0.0;
  std::vector<std::size_t> specialized_classes;  // class-wise accuracy > threshold
  std::vector<double> entropies;                 // one per example
  /// Mean entropy over examples whose true class is / is not specialized.
  std::optional<double> entropy_specialized;
  std::optional<double> entropy_non_specialized;
};

struct EvalReport {
  std::string dataset;
  std::size_t examples = 0;
  std::size_t members = 0;
  std::size_t classes = 0;
  double top1_error = 0.0;
  double oracle_error = 0.0;
  double mean_entropy = 0.0;
  double specialization_threshold = 0.9;
  ClasswiseAccuracy classwise;
  std::vector<MemberReport> member;
  /// Pooled over members, each example classified by that member's specialized set.
  std::optional<double> entropy_specialized;
  std::optional<double> entropy_non_specialized;
  Histogram histogram;  // all N·M entropies over [0, ln C]

  std::string to_json() const;
  /// `key = value` lines.
  std::string to_text() const;
  /// `bin_center,count` rows.
  std::string histogram_csv() const;
};

/// Evaluates the ensemble (eval-mode forward) on `data`.
EvalReport evaluate(const Ensemble& ensemble, const Dataset& data, std::size_t histogram_bins = 20,
                    double specialization_threshold = 0.9);

}  // namespace cmcl
