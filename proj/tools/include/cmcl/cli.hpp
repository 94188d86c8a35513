// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmcl/data.hpp"
#include "cmcl/ensemble.hpp"
#include "cmcl/report.hpp"

namespace cmcl::cli {

/// Where examples come from: a delimited file or one of the generators.
struct DataSource {
  std::optional<std::filesystem::path> path;
  bool label_last = false;
  std::string generator = "clusters";  // clusters | rings
  std::size_t classes = 4;
  std::size_t per_class = 125;
  std::size_t dim = 2;
  double spread = 0.45;
  double noise = 0.1;
  ClusterLayout layout = ClusterLayout::grid;
  std::uint64_t seed = 1;
  bool gcn = false;

  bool operator==(const DataSource&) const = default;
};

struct RunConfig {
  EnsembleConfig ensemble;
  DataSource data;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 1;
  std::size_t histogram_bins = 20;
  double specialization_threshold = 0.9;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Ensemble keys at the top level plus nested "data" and "evaluation" objects.
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(std::string_view json, const RunConfig& base = {});
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});

ClusterLayout layout_from_string(std::string_view name);
std::string_view to_string(ClusterLayout layout) noexcept;

Dataset load_dataset(const DataSource& source);
/// Seeded train/held-out split of the configured data.
std::pair<Dataset, Dataset> train_test_data(const RunConfig& config);

std::string training_log_csv(const std::vector<EpochRecord>& log);

struct GradCheckCase {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  bool passed = false;
};

inline constexpr std::string_view kGradCheckCases[] = {"cross_entropy", "kl_exact",
                                                       "cmcl_objective", "peer_sharing"};

/// Gradient checks over cross-entropy, the exact KL term, the full confident
/// objective at a fixed assignment and peer gradients under feature sharing,
/// all on small random instances shaped by `config`. `corrupt` names a case
/// whose analytic gradient is deliberately perturbed.
std::vector<GradCheckCase> gradcheck_suite(const EnsembleConfig& config, double tolerance,
                                           std::optional<std::string_view> corrupt = {});

struct SweepRow {
  double beta = 0.0;
  std::size_t overlap = 0;
  double oracle_error = 0.0;
  double top1_error = 0.0;
  std::string status;  // "ok" or the error message
};

std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Trains, writes training_log.csv, checkpoint.json, report.json, report.txt,
/// entropy_hist.csv and config.json into `out`, and returns the evaluation on
/// the held-out split.
EvalReport cmd_train(const RunConfig& config, const std::filesystem::path& out);

/// One cmd_train per grid point in a subdirectory of `out`, every point with
/// the same seed; writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const RunConfig& config, const std::vector<double>& betas,
                                const std::vector<std::size_t>& overlaps,
                                const std::filesystem::path& out);

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 runtime or check failure, 2 usage or configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmcl::cli
