// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmcl/matrix.hpp"

namespace cmcl {

struct Dataset {
  Matrix features;  // N x d
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;

  bool operator==(const Dataset&) const = default;
};

struct Batch {
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> indices;  // positions in the parent dataset

  std::size_t size() const noexcept { return labels.size(); }
};

/// Wraps a whole dataset as a single batch.
Batch as_batch(const Dataset& data);

enum class ClusterLayout {
  circle,  // unit circle at angle 2πc/C in the first two coordinates
  line,    // unit spacing along the first coordinate, centred on the origin
  grid,    // ceil(sqrt C) columns 2 apart, rows 1 apart, centred on the origin
};

/// Isotropic Gaussian blobs with `per_class` points each, labels balanced and
/// stored class by class. With dim = 1 every layout falls back to the line.
Dataset gen_gaussian_clusters(std::size_t classes, std::size_t per_class, std::size_t dim,
                              double spread, std::uint64_t seed,
                              ClusterLayout layout = ClusterLayout::circle);

/// Concentric circles in 2-D, class c at radius c + 1 with Gaussian radial noise.
Dataset gen_rings(std::size_t classes, std::size_t per_class, double noise, std::uint64_t seed);

/// Comma-separated text, one example per line, integer label in the first
/// (or last) column. Class count is max label + 1.
Dataset load_delimited(const std::filesystem::path& path, bool label_first = true);
void write_delimited(const Dataset& data, const std::filesystem::path& path,
                     bool label_first = true);

/// Per example: subtract the feature mean, divide by max(L2 norm, epsilon).
Dataset gcn_normalize(const Dataset& data, double epsilon = 1e-8);

/// Seeded shuffle split; the first part holds round(fraction · N) examples.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Seeded permutation for (seed, epoch) cut into batches; the short tail is kept.
std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                           std::size_t epoch);

}  // namespace cmcl
