// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmcl/ensemble.hpp"
#include "cmcl/errors.hpp"

namespace cmcl {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "cmcl-checkpoint";
constexpr int kVersion = 1;

json config_json(const EnsembleConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["members"] = c.members;
  j["overlap"] = c.overlap;
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["share_layer"] = c.share_layer ? json(*c.share_layer) : json(nullptr);
  j["variant"] = to_string(c.variant);
  j["label_samples"] = c.label_samples;
  j["hidden"] = c.hidden;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"momentum", c.optimizer.momentum},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"decay_every", c.schedule.every},
                    {"decay_factor", c.schedule.factor}};
  return j;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

EnsembleConfig config_from(const json& j, EnsembleConfig c) {
  if (!j.is_object()) throw ConfigError("ensemble configuration must be an object");
  static const char* known[] = {"mode",  "members",       "overlap", "beta",   "lambda",
                                "share_layer", "variant", "label_samples", "hidden", "epochs",
                                "batch_size",  "seed",    "optimizer"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown ensemble configuration key '" + key + "'");
    }
  }
  try {
    if (auto it = j.find("mode"); it != j.end()) c.mode = mode_from_string(it->get<std::string>());
    if (auto it = j.find("variant"); it != j.end()) {
      c.variant = variant_from_string(it->get<std::string>());
    }
    read(j, "members", c.members);
    read(j, "overlap", c.overlap);
    read(j, "beta", c.beta);
    read(j, "lambda", c.lambda);
    if (auto it = j.find("share_layer"); it != j.end()) {
      if (it->is_null()) {
        c.share_layer.reset();
      } else {
        c.share_layer = it->get<std::size_t>();
      }
    }
    read(j, "label_samples", c.label_samples);
    read(j, "hidden", c.hidden);
    read(j, "epochs", c.epochs);
    read(j, "batch_size", c.batch_size);
    read(j, "seed", c.seed);
    if (auto it = j.find("optimizer"); it != j.end()) {
      const json& o = *it;
      for (const auto& [key, _] : o.items()) {
        if (key != "learning_rate" && key != "momentum" && key != "weight_decay" &&
            key != "decay_every" && key != "decay_factor") {
          throw ConfigError("unknown optimizer configuration key '" + key + "'");
        }
      }
      read(o, "learning_rate", c.optimizer.learning_rate);
      read(o, "momentum", c.optimizer.momentum);
      read(o, "weight_decay", c.optimizer.weight_decay);
      read(o, "decay_every", c.schedule.every);
      read(o, "decay_factor", c.schedule.factor);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

json matrix_json(const Matrix& m) { return json(std::vector<double>(m.values().begin(), m.values().end())); }

Matrix matrix_from(const json& j, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, j.get<std::vector<double>>());
}

}  // namespace

std::string config_to_json(const EnsembleConfig& config) { return config_json(config).dump(2); }

EnsembleConfig config_from_json(std::string_view text, const EnsembleConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return config_from(j, base);
}

std::string checkpoint_to_string(const Ensemble& e) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = config_json(e.config);
  j["seed"] = e.config.seed;
  j["epoch"] = e.epoch;
  j["input_dim"] = e.input_dim;
  j["classes"] = e.classes;
  auto& members = j["members"] = json::array();
  for (std::size_t m = 0; m < e.size(); ++m) {
    json mj;
    auto& layers = mj["layers"] = json::array();
    for (std::size_t l = 0; l < e.members[m].layers.size(); ++l) {
      const auto& layer = e.members[m].layers[l];
      const auto& vel = e.optimizers[m].velocity[l];
      layers.push_back({{"input_dim", layer.spec.input_dim},
                        {"output_dim", layer.spec.output_dim},
                        {"activation", to_string(layer.spec.activation)},
                        {"weight", matrix_json(layer.weight)},
                        {"bias", layer.bias},
                        {"velocity_weight", matrix_json(vel.weight)},
                        {"velocity_bias", vel.bias}});
    }
    const auto& s = e.optimizers[m].settings;
    mj["optimizer"] = {{"learning_rate", s.learning_rate},
                       {"momentum", s.momentum},
                       {"weight_decay", s.weight_decay}};
    members.push_back(std::move(mj));
  }
  return j.dump() + "\n";
}

Ensemble checkpoint_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != kFormat) throw IoError("not a cmcl checkpoint");
    if (j.at("version").get<int>() != kVersion) throw IoError("unsupported checkpoint version");
    Ensemble e;
    e.config = config_from(j.at("config"), EnsembleConfig{});
    e.config.validate();
    e.epoch = j.at("epoch").get<std::size_t>();
    e.input_dim = j.at("input_dim").get<std::size_t>();
    e.classes = j.at("classes").get<std::size_t>();
    for (const auto& mj : j.at("members")) {
      NetworkParams params;
      OptimizerState opt;
      for (const auto& lj : mj.at("layers")) {
        LayerSpec spec{lj.at("input_dim").get<std::size_t>(), lj.at("output_dim").get<std::size_t>(),
                       activation_from_string(lj.at("activation").get<std::string>())};
        params.layers.push_back({spec, matrix_from(lj.at("weight"), spec.output_dim, spec.input_dim),
                                 lj.at("bias").get<std::vector<double>>()});
        opt.velocity.push_back({matrix_from(lj.at("velocity_weight"), spec.output_dim, spec.input_dim),
                                lj.at("velocity_bias").get<std::vector<double>>()});
      }
      const auto& oj = mj.at("optimizer");
      opt.settings = {oj.at("learning_rate").get<double>(), oj.at("momentum").get<double>(),
                      oj.at("weight_decay").get<double>()};
      params.validate();
      e.members.push_back(std::move(params));
      e.optimizers.push_back(std::move(opt));
    }
    if (e.members.size() != e.config.members) throw IoError("member count disagrees with config");
    for (const auto& m : e.members) {
      if (m.input_dim() != e.input_dim || m.output_dim() != e.classes ||
          m.specs() != e.members.front().specs()) {
        throw IoError("member architectures disagree");
      }
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt checkpoint: ") + ex.what());
  } catch (const ShapeError& ex) {
    throw IoError(std::string("corrupt checkpoint: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw IoError(std::string("corrupt checkpoint: ") + ex.what());
  } catch (const InputError& ex) {
    throw IoError(std::string("corrupt checkpoint: ") + ex.what());
  }
}

void save_checkpoint(const Ensemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(ensemble);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Ensemble load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return checkpoint_from_string(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace cmcl
