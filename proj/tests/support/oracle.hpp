// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reference implementations written straight from the definitions, in long
// double, for use as test oracles. Nothing here calls into the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Table = std::vector<Vec>;

inline Vec softmax(const Vec& logits) {
  long double denom = 0.0L;
  for (double z : logits) denom += std::exp(static_cast<long double>(z));
  Vec out;
  for (double z : logits) out.push_back(static_cast<double>(std::exp(static_cast<long double>(z)) / denom));
  return out;
}

inline long double floored_log(double p) {
  return std::log(static_cast<long double>(std::max(p, 1e-12)));
}

/// Σ_y (1/C)·log((1/C)/p_y).
inline double kl_uniform(const Vec& p) {
  const long double u = 1.0L / static_cast<long double>(p.size());
  long double s = 0.0L;
  for (double v : p) s += u * (std::log(u) - floored_log(v));
  return static_cast<double>(s);
}

inline double entropy(const Vec& p) {
  long double s = 0.0L;
  for (double v : p) s -= static_cast<long double>(v) * floored_log(v);
  return static_cast<double>(s);
}

inline double cross_entropy(const Vec& p, std::size_t y) { return static_cast<double>(-floored_log(p[y])); }

/// Calls `visit` with every 0/1 row of length m that has exactly k ones.
inline void for_each_row(std::size_t m, std::size_t k, const std::function<void(const std::vector<int>&)>& visit) {
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> row(m);
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = (mask >> j) & 1u;
      ones += row[j];
    }
    if (ones == k) visit(row);
  }
}

/// Per-row term of the confident objective for one assignment row.
inline long double confident_row(const Vec& task, const Vec& kl, double beta, const std::vector<int>& v) {
  long double s = 0.0L;
  for (std::size_t j = 0; j < task.size(); ++j) {
    s += v[j] ? static_cast<long double>(task[j]) : static_cast<long double>(beta) * kl[j];
  }
  return s;
}

/// Minimum of the confident objective by enumerating every valid assignment row.
inline double brute_confident(const Table& task, const Table& kl, double beta, std::size_t k) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < task.size(); ++i) {
    long double best = std::numeric_limits<long double>::infinity();
    for_each_row(task[i].size(), k, [&](const std::vector<int>& v) {
      best = std::min(best, confident_row(task[i], kl[i], beta, v));
    });
    total += best;
  }
  return static_cast<double>(total);
}

/// Central differences of f around x, one coordinate at a time.
inline Vec numeric_gradient(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double keep = x[j];
    x[j] = keep + h;
    const double up = f(x);
    x[j] = keep - h;
    const double down = f(x);
    x[j] = keep;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Random probability vector with entries bounded away from zero.
inline Vec random_distribution(std::mt19937_64& rng, std::size_t c) {
  std::exponential_distribution<double> e(1.0);
  Vec p(c);
  double s = 0.0;
  for (double& v : p) {
    v = e(rng) + 1e-3;
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

inline Table random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Table t(rows, Vec(cols));
  for (auto& r : t) {
    for (double& v : r) v = u(rng);
  }
  return t;
}

}  // namespace oracle
