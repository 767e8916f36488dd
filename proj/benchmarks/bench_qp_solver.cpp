#include <benchmark/benchmark.h>

#include <random>

#include "failop/qp_controller.hpp"

namespace {

using namespace failop;

ControlProblem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ControlProblem prob;
  prob.u_min = -4855.95;
  prob.u_max = 4855.95;
  for (int r = 0; r < 2; ++r) {
    CbfConstraintRow row;
    row.coef_u = 1e-5 * unit(rng);
    row.rhs = 0.5 * unit(rng);
    prob.cbf_rows.push_back(row);
  }
  ClfQuadratic q;
  q.c0 = 2.0 * unit(rng);
  q.c1 = 0.02 / 1650.0;
  q.sigma_v = 0.05 * std::abs(unit(rng));
  q.c = 3.0;
  q.c_v = 0.8;
  q.v_now_err_sq = 4.0 * unit(rng) * unit(rng);
  prob.clf = q;
  return prob;
}

void BM_QpSolve(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<ControlProblem> problems;
  for (int i = 0; i < 256; ++i) problems.push_back(random_problem(rng));
  size_t i = 0;
  for (auto _ : state) {
    auto sol = solve(problems[i++ % problems.size()]);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_QpSolve);

}  // namespace

BENCHMARK_MAIN();
