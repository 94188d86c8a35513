// SPDX-License-Identifier: Apache-2.0
#include "cmcl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <string_view>

#include "cmcl/errors.hpp"

namespace cmcl {

namespace {

void check_counts(std::size_t classes, std::size_t per_class) {
  if (classes < 2) throw ConfigError("need at least 2 classes");
  if (per_class < 1) throw ConfigError("need at least 1 example per class");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

void Dataset::validate() const {
  if (labels.empty()) throw InputError("dataset is empty");
  if (features.rows() != labels.size()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw InputError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " is not below class count " + std::to_string(classes));
    }
  }
  if (!features.all_finite()) throw InputError("dataset features contain non-finite values");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(indices.size(), dim());
  out.labels.reserve(indices.size());
  out.classes = classes;
  out.name = name;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = features.row(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(classes, 0);
  for (auto y : labels) ++counts[y];
  return counts;
}

Batch as_batch(const Dataset& data) {
  Batch b{data.features, data.labels, std::vector<std::size_t>(data.size())};
  std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
  return b;
}

Dataset gen_gaussian_clusters(std::size_t classes, std::size_t per_class, std::size_t dim,
                              double spread, std::uint64_t seed, ClusterLayout layout) {
  check_counts(classes, per_class);
  if (dim < 1) throw ConfigError("dimension must be at least 1");
  if (!(spread >= 0.0)) throw ConfigError("spread must be non-negative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.features = Matrix(classes * per_class, dim);
  d.labels.reserve(classes * per_class);
  d.classes = classes;
  d.name = "gaussian_clusters";
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> center(dim, 0.0);
    if (dim == 1 || layout == ClusterLayout::line) {
      center[0] = static_cast<double>(c) - static_cast<double>(classes - 1) / 2.0;
    } else if (layout == ClusterLayout::grid) {
      const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(classes))));
      const std::size_t rows = (classes + cols - 1) / cols;
      center[0] = 2.0 * (static_cast<double>(c % cols) - static_cast<double>(cols - 1) / 2.0);
      center[1] = static_cast<double>(c / cols) - static_cast<double>(rows - 1) / 2.0;
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                           static_cast<double>(classes);
      center[0] = std::cos(angle);
      center[1] = std::sin(angle);
    }
    for (std::size_t k = 0; k < per_class; ++k) {
      auto row = d.features.row(c * per_class + k);
      for (std::size_t j = 0; j < dim; ++j) {
        const double z = noise(rng);
        row[j] = spread == 0.0 ? center[j] : center[j] + spread * z;
      }
      d.labels.push_back(c);
    }
  }
  return d;
}

Dataset gen_rings(std::size_t classes, std::size_t per_class, double noise, std::uint64_t seed) {
  check_counts(classes, per_class);
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> radial(0.0, 1.0);
  Dataset d;
  d.features = Matrix(classes * per_class, 2);
  d.classes = classes;
  d.name = "rings";
  for (std::size_t c = 0; c < classes; ++c) {
    const double radius = static_cast<double>(c + 1);
    for (std::size_t k = 0; k < per_class; ++k) {
      const double a = angle(rng);
      const double z = radial(rng);
      const double r = noise == 0.0 ? radius : radius + noise * z;
      auto row = d.features.row(c * per_class + k);
      row[0] = r * std::cos(a);
      row[1] = r * std::sin(a);
      d.labels.push_back(c);
    }
  }
  return d;
}

Dataset load_delimited(const std::filesystem::path& path, bool label_first) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = trim(line);
    if (text.empty()) continue;

    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      cells.push_back(trim(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 2) fail("expected a label and at least one feature");
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      fail("expected " + std::to_string(width) + " columns, found " + std::to_string(cells.size()));
    }

    const std::size_t label_col = label_first ? 0 : cells.size() - 1;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto cell = cells[k];
      if (k == label_col) {
        std::size_t label = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
          fail("label '" + std::string(cell) + "' is not a non-negative integer");
        }
        labels.push_back(label);
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
          fail("cell '" + std::string(cell) + "' is not a finite number");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw ParseError(path.string() + ": file contains no examples");

  Dataset d;
  d.features = Matrix(labels.size(), width - 1, std::move(values));
  d.classes = *std::max_element(labels.begin(), labels.end()) + 1;
  d.labels = std::move(labels);
  d.name = path.filename().string();
  return d;
}

void write_delimited(const Dataset& data, const std::filesystem::path& path, bool label_first) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string line;
    if (label_first) line += std::to_string(data.labels[i]);
    const auto row = data.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!line.empty()) line += ',';
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[j]);
      line.append(buf, ptr);
    }
    if (!label_first) line += "," + std::to_string(data.labels[i]);
    out << line << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset gcn_normalize(const Dataset& data, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = out.features.row(i);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    double sq = 0.0;
    for (double& v : row) {
      v -= mean;
      sq += v * v;
    }
    const double scale = std::max(std::sqrt(sq), epsilon);
    for (double& v : row) v /= scale;
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  if (n_train == 0 || n_train == data.size()) throw ConfigError("split leaves an empty part");
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                           std::size_t epoch) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0xba7c4u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    b.features = Matrix(end - start, data.dim());
    for (std::size_t k = start; k < end; ++k) {
      const auto src = data.features.row(order[k]);
      std::copy(src.begin(), src.end(), b.features.row(k - start).begin());
      b.labels.push_back(data.labels[order[k]]);
      b.indices.push_back(order[k]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace cmcl
