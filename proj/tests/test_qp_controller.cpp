#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "failop/qp_controller.hpp"

using namespace failop;

namespace {

// dense grid + golden-section polish, independent of the solver internals
double grid_polish(const std::function<double(double)>& phi, double lo,
                   double hi, int grid = 100000) {
  double best_u = lo, best_f = phi(lo);
  const double step = (hi - lo) / grid;
  for (int i = 1; i <= grid; ++i) {
    const double u = lo + step * i;
    const double f = phi(u);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }
  double a = std::max(lo, best_u - step), b = std::min(hi, best_u + step);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = phi(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = phi(x2);
    }
  }
  return 0.5 * (a + b);
}

ControlProblem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  std::uniform_int_distribution<int> nrows(0, 3);
  std::uniform_int_distribution<int> coin(0, 1);
  ControlProblem prob;
  const int n = nrows(rng);
  for (int r = 0; r < n; ++r) {
    CbfConstraintRow row;
    // mix of weak (headway-like) and strong coupling scales
    row.coef_u = (coin(rng) ? 2.4e-7 : 1.2e-5) * (ur(rng) < 0 ? -1.0 : 1.0) *
                 (0.5 + std::abs(ur(rng)));
    row.rhs = 0.5 * ur(rng);
    prob.cbf_rows.push_back(row);
  }
  if (coin(rng)) {
    ClfQuadratic q;
    q.c0 = 2.0 * ur(rng);
    q.c1 = 1.2e-5;
    q.sigma_v = 0.1 * std::abs(ur(rng));
    q.c = 3.0;
    q.c_v = 0.8;
    q.v_now_err_sq = 4.0 * std::abs(ur(rng));
    prob.clf = q;
  }
  if (coin(rng)) {
    prob.lambda_zeta = 1e30;
    prob.lambda_iota = 1e10;
  }
  return prob;
}

}  // namespace

TEST_CASE("slack elimination") {
  SUBCASE("unconstrained problem leaves the pure control cost") {
    ControlProblem prob;
    ClfQuadratic q;
    q.c0 = 0.0;
    q.c1 = 1.2e-5;
    q.v_now_err_sq = 0.0;
    prob.clf = q;
    auto phi = eliminate_slacks(prob);
    CHECK(phi(0.0) == 0.0);
    CHECK(phi(10.0) == doctest::Approx(100.0).epsilon(1e-9));
    ControlSolution sol = solve(prob);
    CHECK(sol.u_star == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("single binding row matches the grid oracle") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 1.2e-5;
    row.rhs = 0.02;
    prob.cbf_rows.push_back(row);
    auto phi = eliminate_slacks(prob);
    const double u_oracle = grid_polish(phi, prob.u_min, prob.u_max);
    ControlSolution sol = solve(prob);
    CHECK(std::abs(sol.u_star - u_oracle) <
          1e-4 * (prob.u_max - prob.u_min));
    CHECK(phi(sol.u_star) <= phi(u_oracle) * (1.0 + 1e-6) + 1e-12);
  }
  SUBCASE("re-extracted slacks are the pointwise max expressions") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 2.4e-7;
    row.rhs = 0.3;
    prob.cbf_rows.push_back(row);
    ClfQuadratic q;
    q.c0 = -1.5;
    q.c1 = 1.2e-5;
    q.v_now_err_sq = 4.0;
    q.c_v = 0.8;
    prob.clf = q;
    ControlSolution sol = solve(prob);
    const double deficit = row.rhs - row.coef_u * sol.u_star;
    CHECK(sol.zeta_star ==
          doctest::Approx(std::max(0.0, deficit)).epsilon(1e-9));
    const double worst = std::abs(q.c0 + q.c1 * sol.u_star);
    const double g = worst * worst - (1.0 - q.c_v) * q.v_now_err_sq;
    CHECK(sol.iota_star ==
          doctest::Approx(std::max(0.0, g)).epsilon(1e-9));
    CHECK(sol.zeta_star >= 0.0);
    CHECK(sol.iota_star >= 0.0);
  }
}

TEST_CASE("solve") {
  SUBCASE("empty problem returns zero control") {
    ControlProblem prob;
    ControlSolution sol = solve(prob);
    CHECK(sol.u_star == 0.0);
    CHECK(sol.zeta_star == 0.0);
    CHECK(sol.iota_star == 0.0);
    CHECK(sol.status == SolveStatus::kOptimal);
  }
  SUBCASE("deep headway violation commands strong corrective control") {
    // upper-headway barrier at h = -15 m: the gap must shrink, so the
    // control pushes forward (positive) as hard as the program allows
    ControlProblem prob;
    prob.lambda_zeta = 1e30;
    prob.lambda_iota = 1e10;
    CbfConstraintRow row;
    row.coef_u = 2.4e-7;          // headway coupling, meters per Newton
    row.rhs = 0.05 * 15.0 + 1e-6; // one-step envelope demand at h = -15
    prob.cbf_rows.push_back(row);
    ControlSolution sol = solve(prob);
    CHECK(sol.u_star > 0.0);
    auto phi = eliminate_slacks(prob);
    const double u_oracle = grid_polish(phi, prob.u_min, prob.u_max);
    CHECK(std::abs(sol.u_star - u_oracle) <
          1e-4 * (prob.u_max - prob.u_min));
  }
  SUBCASE("clipped when the minimizer leaves the box") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 1.0;
    row.rhs = 1e6;
    prob.cbf_rows.push_back(row);
    ControlSolution sol = solve(prob);
    CHECK(sol.u_star == prob.u_max);
    CHECK(sol.status == SolveStatus::kClipped);
  }
  SUBCASE("non-finite input degrades to hold-last-command") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 1.2e-5;
    row.rhs = std::nan("");
    prob.cbf_rows.push_back(row);
    ControlSolution sol = solve(prob, -123.5);
    CHECK(sol.status == SolveStatus::kDegraded);
    CHECK(sol.u_star == -123.5);
  }
  SUBCASE("oracle equivalence over 500 random instances") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
      ControlProblem prob = random_problem(rng);
      ControlSolution sol = solve(prob);
      CHECK(sol.u_star >= prob.u_min);
      CHECK(sol.u_star <= prob.u_max);
      auto phi = eliminate_slacks(prob);
      const double u_oracle = grid_polish(phi, prob.u_min, prob.u_max);
      CHECK(std::abs(sol.u_star - u_oracle) <=
            1e-4 * (prob.u_max - prob.u_min));
      const double fo = phi(u_oracle);
      CHECK(phi(sol.u_star) <= fo + 1e-6 * (1.0 + std::abs(fo)));
      CHECK(kkt_check(prob, sol).ok());
    }
  }
  SUBCASE("raising the safety weight never increases the safety slack") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      ControlProblem prob;
      CbfConstraintRow row;
      row.coef_u = 2.4e-7;
      row.rhs = 0.2 + 0.3 * std::abs(ur(rng));
      prob.cbf_rows.push_back(row);
      ClfQuadratic q;
      q.c0 = 1.5;  // tracking pulls the opposite way
      q.c1 = 1.2e-5;
      q.v_now_err_sq = 4.0;
      q.c_v = 0.8;
      prob.clf = q;
      ControlSolution a = solve(prob);
      prob.lambda_zeta *= 10.0;
      ControlSolution b = solve(prob);
      CHECK(b.zeta_star <= a.zeta_star + 1e-12);
    }
  }
  SUBCASE("determinism") {
    std::mt19937_64 rng(19);
    ControlProblem prob = random_problem(rng);
    ControlSolution a = solve(prob);
    ControlSolution b = solve(prob);
    CHECK(a.u_star == b.u_star);
    CHECK(a.zeta_star == b.zeta_star);
    CHECK(a.iota_star == b.iota_star);
    CHECK(a.objective == b.objective);
  }
}

TEST_CASE("kkt check") {
  SUBCASE("clean interior optimum passes") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 1.2e-5;
    row.rhs = 0.01;
    prob.cbf_rows.push_back(row);
    ControlSolution sol = solve(prob);
    CHECK(kkt_check(prob, sol).ok());
  }
  SUBCASE("perturbing the optimum strictly increases the objective") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      ControlProblem prob = random_problem(rng);
      ControlSolution sol = solve(prob);
      if (sol.status != SolveStatus::kOptimal) continue;
      auto phi = eliminate_slacks(prob);
      const double delta = 1e-3 * (prob.u_max - prob.u_min);
      const double f0 = phi(sol.u_star);
      for (double s : {-1.0, 1.0}) {
        const double u = sol.u_star + s * delta;
        if (u < prob.u_min || u > prob.u_max) continue;
        CHECK(phi(u) >= f0 - 1e-9 * (1.0 + std::abs(f0)));
      }
    }
  }
  SUBCASE("corrupted solution is reported") {
    ControlProblem prob;
    CbfConstraintRow row;
    row.coef_u = 1.2e-5;
    row.rhs = 0.05;
    prob.cbf_rows.push_back(row);
    ControlSolution sol = solve(prob);
    sol.u_star = 0.5 * (prob.u_min + prob.u_max) + 1000.0;
    sol.zeta_star = -1.0;
    KktReport report = kkt_check(prob, sol);
    CHECK_FALSE(report.ok());
    CHECK_FALSE(report.violations.empty());
  }
}
