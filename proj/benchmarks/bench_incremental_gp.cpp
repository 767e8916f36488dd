#include <benchmark/benchmark.h>

#include <random>

#include "failop/incremental_gp.hpp"

namespace {

using namespace failop;

GpModel warm_model(int capacity, std::mt19937_64& rng) {
  GpModel model(RbfKernelParams{}, 1e-6);
  std::normal_distribution<double> dist(0.0, 1.0);
  UpdateBudget budget{capacity};
  for (int i = 0; i < capacity; ++i) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = dist(rng);
    incremental_update(model, x, dist(rng), budget);
  }
  return model;
}

void BM_IncrementalUpdate(benchmark::State& state) {
  const int capacity = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 1.0);
  GpModel model = warm_model(capacity, rng);
  UpdateBudget budget{capacity};
  for (auto _ : state) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = dist(rng);
    incremental_update(model, x, dist(rng), budget);
    benchmark::DoNotOptimize(model.K_inv.data());
  }
}
BENCHMARK(BM_IncrementalUpdate)->Arg(10)->Arg(20)->Arg(40)->Arg(80);

void BM_Posterior(benchmark::State& state) {
  const int capacity = static_cast<int>(state.range(0));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  GpModel model = warm_model(capacity, rng);
  Eigen::VectorXd x(4);
  for (int j = 0; j < 4; ++j) x(j) = dist(rng);
  for (auto _ : state) {
    auto post = model.posterior(x);
    benchmark::DoNotOptimize(post);
  }
}
BENCHMARK(BM_Posterior)->Arg(20)->Arg(40);

}  // namespace
