// SPDX-License-Identifier: Apache-2.0
#include "cmcl/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmcl/errors.hpp"
#include "cmcl/grad_check.hpp"
#include "cmcl/losses.hpp"

namespace cmcl::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void check_keys(const json& j, std::initializer_list<std::string_view> known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown " + std::string(where) + " key '" + key + "'");
    }
  }
}

Batch random_batch(Rng& rng, std::size_t n, std::size_t dim, std::size_t classes) {
  std::normal_distribution<double> x(0.0, 1.0);
  Batch b;
  b.features = Matrix(n, dim);
  for (double& v : b.features.values()) v = x(rng);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(i % classes);
    b.indices.push_back(i);
  }
  return b;
}

std::vector<double> concat(const std::vector<Gradients>& grads, std::size_t first = 0) {
  std::vector<double> out;
  for (std::size_t m = first; m < grads.size(); ++m) {
    const auto f = flatten(grads[m]);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::vector<double> concat(const Ensemble& e, std::size_t first = 0) {
  std::vector<double> out;
  for (std::size_t m = first; m < e.size(); ++m) {
    const auto f = flatten(e.members[m]);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

void scatter(Ensemble& e, std::span<const double> values, std::size_t first = 0) {
  std::size_t offset = 0;
  for (std::size_t m = first; m < e.size(); ++m) {
    const std::size_t n = e.members[m].parameter_count();
    unflatten(values.subspan(offset, n), e.members[m]);
    offset += n;
  }
}

// Mean over the batch of a per-row loss on a single network's softmax output.
template <typename RowLoss>
LossAndGradient single_network_objective(const NetworkParams& p, const Batch& b, RowLoss loss) {
  const auto trace = forward(p, b.features);
  const double inv = 1.0 / static_cast<double>(b.size());
  Matrix g(b.size(), p.output_dim());
  double value = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto [v, grad] = loss(trace.output().row(i), b.labels[i]);
    value += v * inv;
    for (std::size_t c = 0; c < grad.size(); ++c) g(i, c) = grad[c] * inv;
  }
  return {value, backward(trace, p, g)};
}

GradCheckCase run_case(std::string name, const FlatObjective& f, std::span<const double> point,
                       std::vector<double> analytic, double tolerance,
                       std::optional<std::string_view> corrupt) {
  if (corrupt && *corrupt == name && !analytic.empty()) analytic.front() += 1e-3;
  const auto r = grad_check(f, point, analytic, tolerance);
  return {std::move(name), r.max_relative_error, r.parameter_count, r.passed};
}

using Overrides = std::vector<std::function<void(RunConfig&)>>;

template <typename V>
void flag(CLI::App& cmd, Overrides& overrides, const std::string& name, const std::string& help,
          void (*setter)(RunConfig&, const V&)) {
  auto value = std::make_shared<V>();
  CLI::Option* opt = nullptr;
  if constexpr (std::is_same_v<V, bool>) {
    opt = cmd.add_flag(name, *value, help);
  } else {
    opt = cmd.add_option(name, *value, help);
  }
  if constexpr (std::is_same_v<V, std::vector<std::size_t>>) opt->delimiter(',');
  overrides.push_back([opt, value, setter](RunConfig& c) {
    if (opt->count() > 0) setter(c, *value);
  });
}

void add_run_flags(CLI::App& cmd, std::optional<std::filesystem::path>& config_path,
                   Overrides& ov) {
  using S = std::string;
  using U = std::size_t;
  cmd.add_option("--config", config_path, "JSON run configuration; flags override its values")
      ->check(CLI::ExistingFile);
  flag<std::uint64_t>(cmd, ov, "--seed", "run seed", [](RunConfig& c, const std::uint64_t& v) { c.ensemble.seed = v; });
  flag<S>(cmd, ov, "--mode", "ie, mcl or cmcl", [](RunConfig& c, const S& v) { c.ensemble.mode = mode_from_string(v); });
  flag<U>(cmd, ov, "--members", "ensemble size M", [](RunConfig& c, const U& v) { c.ensemble.members = v; });
  flag<U>(cmd, ov, "--overlap", "overlap K", [](RunConfig& c, const U& v) { c.ensemble.overlap = v; });
  flag<double>(cmd, ov, "--beta", "KL penalty weight", [](RunConfig& c, const double& v) { c.ensemble.beta = v; });
  flag<double>(cmd, ov, "--lambda", "feature-sharing keep probability", [](RunConfig& c, const double& v) { c.ensemble.lambda = v; });
  flag<S>(cmd, ov, "--variant", "v0 (exact KL gradient) or v1 (stochastic labeling)", [](RunConfig& c, const S& v) { c.ensemble.variant = variant_from_string(v); });
  flag<U>(cmd, ov, "--share-layer", "layer receiving peer features, 0 disables sharing", [](RunConfig& c, const U& v) {
    if (v == 0) {
      c.ensemble.share_layer.reset();
    } else {
      c.ensemble.share_layer = v;
    }
  });
  flag<U>(cmd, ov, "--label-samples", "labels drawn per example for v1", [](RunConfig& c, const U& v) { c.ensemble.label_samples = v; });
  flag<std::vector<U>>(cmd, ov, "--hidden", "hidden widths, comma separated", [](RunConfig& c, const std::vector<U>& v) { c.ensemble.hidden = v; });
  flag<U>(cmd, ov, "--epochs", "training epochs", [](RunConfig& c, const U& v) { c.ensemble.epochs = v; });
  flag<U>(cmd, ov, "--batch-size", "minibatch size", [](RunConfig& c, const U& v) { c.ensemble.batch_size = v; });
  flag<double>(cmd, ov, "--lr", "learning rate", [](RunConfig& c, const double& v) { c.ensemble.optimizer.learning_rate = v; });
  flag<double>(cmd, ov, "--momentum", "Nesterov momentum", [](RunConfig& c, const double& v) { c.ensemble.optimizer.momentum = v; });
  flag<double>(cmd, ov, "--weight-decay", "L2 weight decay", [](RunConfig& c, const double& v) { c.ensemble.optimizer.weight_decay = v; });
  flag<S>(cmd, ov, "--data", "delimited data file", [](RunConfig& c, const S& v) { c.data.path = v; });
  flag<bool>(cmd, ov, "--label-last", "labels are in the last column", [](RunConfig& c, const bool& v) { c.data.label_last = v; });
  flag<S>(cmd, ov, "--generator", "clusters or rings", [](RunConfig& c, const S& v) { c.data.generator = v; });
  flag<U>(cmd, ov, "--classes", "generated classes", [](RunConfig& c, const U& v) { c.data.classes = v; });
  flag<U>(cmd, ov, "--per-class", "generated examples per class", [](RunConfig& c, const U& v) { c.data.per_class = v; });
  flag<U>(cmd, ov, "--dim", "generated feature dimension", [](RunConfig& c, const U& v) { c.data.dim = v; });
  flag<double>(cmd, ov, "--spread", "cluster standard deviation", [](RunConfig& c, const double& v) { c.data.spread = v; });
  flag<double>(cmd, ov, "--noise", "ring radial noise", [](RunConfig& c, const double& v) { c.data.noise = v; });
  flag<S>(cmd, ov, "--layout", "circle, line or grid", [](RunConfig& c, const S& v) { c.data.layout = layout_from_string(v); });
  flag<std::uint64_t>(cmd, ov, "--data-seed", "generator seed", [](RunConfig& c, const std::uint64_t& v) { c.data.seed = v; });
  flag<bool>(cmd, ov, "--gcn", "apply global contrast normalization", [](RunConfig& c, const bool& v) { c.data.gcn = v; });
  flag<double>(cmd, ov, "--train-fraction", "training share of the split", [](RunConfig& c, const double& v) { c.train_fraction = v; });
  flag<std::uint64_t>(cmd, ov, "--split-seed", "split seed", [](RunConfig& c, const std::uint64_t& v) { c.split_seed = v; });
}

RunConfig resolve(const std::optional<std::filesystem::path>& config_path,
                  const Overrides& overrides) {
  RunConfig rc = config_path ? load_run_config(*config_path) : RunConfig{};
  for (const auto& apply : overrides) apply(rc);
  rc.validate();
  return rc;
}

Dataset select_split(const RunConfig& rc, const std::string& which) {
  if (which == "all") return load_dataset(rc.data);
  auto [train, test] = train_test_data(rc);
  if (which == "train") return train;
  if (which == "test") return test;
  throw ConfigError("split must be train, test or all");
}

void write_report(const EvalReport& r, const std::filesystem::path& out) {
  write_text(out / "report.json", r.to_json());
  write_text(out / "report.txt", r.to_text());
  write_text(out / "entropy_hist.csv", r.histogram_csv());
}

}  // namespace

void RunConfig::validate() const {
  ensemble.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  if (histogram_bins < 1) throw ConfigError("histogram needs at least one bin");
  if (!(specialization_threshold >= 0.0 && specialization_threshold <= 1.0)) {
    throw ConfigError("specialization threshold must lie in [0, 1]");
  }
  if (!data.path && data.generator != "clusters" && data.generator != "rings") {
    throw ConfigError("generator must be clusters or rings");
  }
}

ClusterLayout layout_from_string(std::string_view name) {
  if (name == "circle") return ClusterLayout::circle;
  if (name == "line") return ClusterLayout::line;
  if (name == "grid") return ClusterLayout::grid;
  throw ConfigError("unknown cluster layout '" + std::string(name) + "'");
}

std::string_view to_string(ClusterLayout layout) noexcept {
  switch (layout) {
    case ClusterLayout::circle:
      return "circle";
    case ClusterLayout::line:
      return "line";
    case ClusterLayout::grid:
      return "grid";
  }
  return "circle";
}

std::string run_config_to_json(const RunConfig& c) {
  json j = json::parse(config_to_json(c.ensemble));
  json d;
  d["path"] = c.data.path ? json(c.data.path->string()) : json(nullptr);
  d["label_last"] = c.data.label_last;
  d["generator"] = c.data.generator;
  d["classes"] = c.data.classes;
  d["per_class"] = c.data.per_class;
  d["dim"] = c.data.dim;
  d["spread"] = c.data.spread;
  d["noise"] = c.data.noise;
  d["layout"] = to_string(c.data.layout);
  d["seed"] = c.data.seed;
  d["gcn"] = c.data.gcn;
  j["data"] = d;
  j["evaluation"] = {{"train_fraction", c.train_fraction},
                     {"split_seed", c.split_seed},
                     {"histogram_bins", c.histogram_bins},
                     {"specialization_threshold", c.specialization_threshold}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text, const RunConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be an object");
  RunConfig c = base;
  json ensemble_part = j;
  ensemble_part.erase("data");
  ensemble_part.erase("evaluation");
  c.ensemble = config_from_json(ensemble_part.dump(), base.ensemble);
  try {
    if (auto it = j.find("data"); it != j.end()) {
      const json& d = *it;
      check_keys(d, {"path", "label_last", "generator", "classes", "per_class", "dim", "spread",
                     "noise", "layout", "seed", "gcn"},
                 "data");
      if (auto p = d.find("path"); p != d.end()) {
        if (p->is_null()) {
          c.data.path.reset();
        } else {
          c.data.path = p->get<std::string>();
        }
      }
      read(d, "label_last", c.data.label_last);
      read(d, "generator", c.data.generator);
      read(d, "classes", c.data.classes);
      read(d, "per_class", c.data.per_class);
      read(d, "dim", c.data.dim);
      read(d, "spread", c.data.spread);
      read(d, "noise", c.data.noise);
      if (auto l = d.find("layout"); l != d.end()) c.data.layout = layout_from_string(l->get<std::string>());
      read(d, "seed", c.data.seed);
      read(d, "gcn", c.data.gcn);
    }
    if (auto it = j.find("evaluation"); it != j.end()) {
      const json& e = *it;
      check_keys(e, {"train_fraction", "split_seed", "histogram_bins", "specialization_threshold"},
                 "evaluation");
      read(e, "train_fraction", c.train_fraction);
      read(e, "split_seed", c.split_seed);
      read(e, "histogram_bins", c.histogram_bins);
      read(e, "specialization_threshold", c.specialization_threshold);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  try {
    return run_config_from_json(read_text(path), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const DataSource& s) {
  Dataset d;
  if (s.path) {
    d = load_delimited(*s.path, !s.label_last);
  } else if (s.generator == "clusters") {
    d = gen_gaussian_clusters(s.classes, s.per_class, s.dim, s.spread, s.seed, s.layout);
  } else if (s.generator == "rings") {
    d = gen_rings(s.classes, s.per_class, s.noise, s.seed);
  } else {
    throw ConfigError("generator must be clusters or rings");
  }
  return s.gcn ? gcn_normalize(d) : d;
}

std::pair<Dataset, Dataset> train_test_data(const RunConfig& config) {
  return split(load_dataset(config.data), config.train_fraction, config.split_seed);
}

std::string training_log_csv(const std::vector<EpochRecord>& log) {
  std::string out = "epoch,mode,train_objective,oracle_error,top1_error,mean_entropy\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + ',' + std::string(to_string(r.mode)) + ',' +
           num(r.train_objective) + ',' + num(r.oracle_error) + ',' + num(r.top1_error) + ',' +
           num(r.mean_entropy) + '\n';
  }
  return out;
}

std::vector<GradCheckCase> gradcheck_suite(const EnsembleConfig& config, double tolerance,
                                           std::optional<std::string_view> corrupt) {
  config.validate();
  constexpr std::size_t kDim = 3;
  constexpr std::size_t kClasses = 4;
  constexpr std::size_t kBatch = 4;
  Rng rng(config.seed);
  const Batch batch = random_batch(rng, kBatch, kDim, kClasses);
  std::vector<GradCheckCase> out;

  const auto net = init_params(mlp_specs(kDim, config.hidden, kClasses), config.seed);
  const auto point = flatten(net);
  auto net_case = [&](std::string name, auto row_loss) {
    auto objective = [&](std::span<const double> theta) {
      NetworkParams p = net;
      unflatten(theta, p);
      return single_network_objective(p, batch, row_loss).value;
    };
    const auto analytic = flatten(single_network_objective(net, batch, row_loss).gradients);
    out.push_back(run_case(std::move(name), objective, point, analytic, tolerance, corrupt));
  };
  net_case("cross_entropy", [](std::span<const double> p, std::size_t y) {
    auto ce = cross_entropy(p, y);
    return std::pair{ce.value, std::move(ce.logit_gradient)};
  });
  net_case("kl_exact", [](std::span<const double> p, std::size_t) {
    return std::pair{kl_from_uniform(p), kl_from_uniform_grad_exact(p)};
  });

  // Full objective over every member at the assignment the composite score picks.
  EnsembleConfig cm = config;
  cm.mode = Mode::cmcl;
  if (cm.beta == 0.0) cm.beta = 0.75;
  {
    const Ensemble e = Ensemble::create(cm, kDim, kClasses);
    std::optional<MaskSet> masks;
    if (e.config.sharing_enabled()) {
      const std::size_t width = e.members.front().layers[*e.config.share_layer].spec.input_dim;
      masks = MaskSet::sample(e.size(), width, e.config.lambda, rng);
    }
    const MaskSet* mp = masks ? &*masks : nullptr;
    const auto traces = forward_ensemble(e, batch.features, mp, false);
    const auto assignment = assign(loss_terms(traces, batch.labels, cm.beta).composite, cm.overlap);
    auto objective = [&](std::span<const double> theta) {
      Ensemble copy = e;
      scatter(copy, theta);
      return confident_objective_and_gradient(copy, batch, mp, assignment, cm.beta).value;
    };
    const auto analytic = concat(confident_objective_and_gradient(e, batch, mp, assignment, cm.beta).gradients);
    out.push_back(run_case("cmcl_objective", objective, concat(e), analytic, tolerance, corrupt));
  }

  // Member 0's task loss only, differentiated with respect to its peers.
  {
    EnsembleConfig sh = cm;
    if (sh.members < 2) sh.members = 2;
    sh.overlap = 1;
    if (!sh.share_layer) sh.share_layer = 1;
    const Ensemble e = Ensemble::create(sh, kDim, kClasses);
    const std::size_t width = e.members.front().layers[*sh.share_layer].spec.input_dim;
    const MaskSet masks = MaskSet::sample(e.size(), width, sh.lambda, rng);
    AssignmentMatrix first_only(kBatch, e.size(), 1);
    for (std::size_t i = 0; i < kBatch; ++i) first_only.set(i, 0, true);
    auto objective = [&](std::span<const double> theta) {
      Ensemble copy = e;
      scatter(copy, theta, 1);
      return confident_objective_and_gradient(copy, batch, &masks, first_only, 0.0).value;
    };
    const auto analytic = concat(confident_objective_and_gradient(e, batch, &masks, first_only, 0.0).gradients, 1);
    out.push_back(run_case("peer_sharing", objective, concat(e, 1), analytic, tolerance, corrupt));
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "beta,overlap,oracle_error,top1_error,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out += num(r.beta) + ',' + std::to_string(r.overlap) + ',' + num(r.oracle_error) + ',' +
           num(r.top1_error) + ',' + status + '\n';
  }
  return out;
}

EvalReport cmd_train(const RunConfig& config, const std::filesystem::path& out) {
  config.validate();
  const auto [train_data, test_data] = train_test_data(config);
  make_dir(out);
  const auto result = train(config.ensemble, train_data, &test_data);
  const auto report = evaluate(result.ensemble, test_data, config.histogram_bins,
                               config.specialization_threshold);
  write_text(out / "config.json", run_config_to_json(config));
  write_text(out / "training_log.csv", training_log_csv(result.log));
  save_checkpoint(result.ensemble, out / "checkpoint.json");
  write_report(report, out);
  return report;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& config, const std::vector<double>& betas,
                                const std::vector<std::size_t>& overlaps,
                                const std::filesystem::path& out) {
  if (betas.empty() || overlaps.empty()) throw ConfigError("sweep grids must be non-empty");
  make_dir(out);
  std::vector<SweepRow> rows;
  for (double beta : betas) {
    for (std::size_t k : overlaps) {
      SweepRow row{beta, k, 0.0, 0.0, "ok"};
      RunConfig point = config;
      point.ensemble.beta = beta;
      point.ensemble.overlap = k;
      try {
        const auto dir = out / ("beta_" + num(beta) + "_K_" + std::to_string(k));
        const auto report = cmd_train(point, dir);
        row.oracle_error = report.oracle_error;
        row.top1_error = report.top1_error;
      } catch (const Error& e) {
        row.status = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  write_text(out / "sweep.csv", sweep_csv(rows));
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train and evaluate specialist ensembles", "cmcl"};
  app.require_subcommand(1);

  std::optional<std::filesystem::path> config_path;
  Overrides overrides;
  std::filesystem::path out_dir = "run";

  auto* train_cmd = app.add_subcommand("train", "train an ensemble and write its artifacts");
  add_run_flags(*train_cmd, config_path, overrides);
  train_cmd->add_option("--out", out_dir, "output directory");

  std::filesystem::path checkpoint;
  std::string which = "test";
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  Overrides eval_overrides;
  std::optional<std::filesystem::path> eval_config;
  add_run_flags(*eval_cmd, eval_config, eval_overrides);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", which, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  eval_cmd->add_option("--out", out_dir, "output directory");

  double tolerance = 1e-5;
  std::optional<std::string> corrupt;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  Overrides grad_overrides;
  std::optional<std::filesystem::path> grad_config;
  add_run_flags(*grad_cmd, grad_config, grad_overrides);
  grad_cmd->add_option("--tolerance", tolerance, "maximum relative error");
  grad_cmd->add_option("--corrupt-gradient", corrupt, "perturb the analytic gradient of one case")
      ->check(CLI::IsMember({"cross_entropy", "kl_exact", "cmcl_objective", "peer_sharing"}));

  std::vector<double> betas{0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<std::size_t> overlaps{2, 3, 4};
  auto* sweep_cmd = app.add_subcommand("sweep", "train once per (beta, K) grid point");
  Overrides sweep_overrides;
  std::optional<std::filesystem::path> sweep_config;
  add_run_flags(*sweep_cmd, sweep_config, sweep_overrides);
  sweep_cmd->add_option("--betas", betas, "beta grid, comma separated")->delimiter(',');
  sweep_cmd->add_option("--overlaps", overlaps, "K grid, comma separated")->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      const auto rc = resolve(config_path, overrides);
      const auto report = cmd_train(rc, out_dir);
      out << "wrote " << out_dir.string() << '\n'
          << "top1_error = " << num(report.top1_error) << '\n'
          << "oracle_error = " << num(report.oracle_error) << '\n';
      return 0;
    }
    if (*eval_cmd) {
      const auto rc = resolve(eval_config, eval_overrides);
      const auto ensemble = load_checkpoint(checkpoint);
      const auto data = select_split(rc, which);
      const auto report = evaluate(ensemble, data, rc.histogram_bins, rc.specialization_threshold);
      make_dir(out_dir);
      write_report(report, out_dir);
      out << report.to_text();
      return 0;
    }
    if (*grad_cmd) {
      const auto rc = resolve(grad_config, grad_overrides);
      std::optional<std::string_view> target;
      if (corrupt) target = *corrupt;
      const auto cases = gradcheck_suite(rc.ensemble, tolerance, target);
      bool ok = true;
      for (const auto& c : cases) {
        out << c.name << " max_relative_error=" << num(c.max_relative_error)
            << " parameters=" << c.parameters << ' ' << (c.passed ? "PASS" : "FAIL") << '\n';
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    }
    if (*sweep_cmd) {
      const auto rc = resolve(sweep_config, sweep_overrides);
      const auto rows = cmd_sweep(rc, betas, overlaps, out_dir);
      out << sweep_csv(rows);
      const bool ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status == "ok"; });
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace cmcl::cli
