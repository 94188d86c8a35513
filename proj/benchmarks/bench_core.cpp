// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "cmcl/data.hpp"
#include "cmcl/ensemble.hpp"
#include "cmcl/losses.hpp"
#include "cmcl/network.hpp"

using namespace cmcl;

namespace {

Batch gaussian_batch(std::size_t n, std::size_t dim, std::size_t classes) {
  std::mt19937_64 rng(7);
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

EnsembleConfig bench_config(Mode mode, std::size_t members, bool sharing) {
  EnsembleConfig c;
  c.mode = mode;
  c.members = members;
  c.hidden = {64, 64};
  if (sharing) c.share_layer = 1;
  return c;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const auto params = init_params(mlp_specs(32, std::vector<std::size_t>{64, 64}, 10), 1);
  const auto batch = gaussian_batch(static_cast<std::size_t>(state.range(0)), 32, 10);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, batch.features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

static void BM_TrainStep(benchmark::State& state) {
  const auto mode = static_cast<Mode>(state.range(0));
  const bool sharing = state.range(1) != 0;
  auto e = Ensemble::create(bench_config(mode, 5, sharing), 32, 10);
  const auto batch = gaussian_batch(64, 32, 10);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(e, batch, rng));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainStep)
    ->Args({static_cast<int>(Mode::ie), 0})
    ->Args({static_cast<int>(Mode::mcl), 0})
    ->Args({static_cast<int>(Mode::cmcl), 0})
    ->Args({static_cast<int>(Mode::cmcl), 1});

static void BM_Assign(benchmark::State& state) {
  const auto members = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  Matrix scores(1024, members);
  for (double& v : scores.values()) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(assign(scores, members / 2));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_Assign)->Arg(2)->Arg(6)->Arg(10);
BENCHMARK_MAIN();
