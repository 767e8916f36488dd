#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "failop/clf_tracking.hpp"
#include "failop/safety_barrier.hpp"

namespace failop {

struct ControlProblem {
  std::vector<CbfConstraintRow> cbf_rows;
  std::optional<ClfQuadratic> clf;
  double u_min = -4855.95;
  double u_max = 4855.95;
  double lambda_zeta = 1e8;
  double lambda_iota = 1e4;

  bool valid() const {
    return u_min < u_max && lambda_zeta > lambda_iota && lambda_iota > 0.0;
  }
};

enum class SolveStatus { kOptimal, kClipped, kDegraded };

struct ControlSolution {
  double u_star = 0.0;
  double zeta_star = 0.0;
  double iota_star = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  double solve_time = 0.0;  // seconds
};

/// Exact reformulation of the slack-augmented program: each slack appears in
/// the objective and a single constraint, so at the optimum
/// zeta_r = max(0, deficit_r(u)) and iota = max(0, g(u, 0)), leaving a
/// one-dimensional convex piecewise-polynomial function of u.
std::function<double(double)> eliminate_slacks(const ControlProblem& prob);

ControlSolution solve(const ControlProblem& prob, double u_prev = 0.0);

struct KktReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

KktReport kkt_check(const ControlProblem& prob, const ControlSolution& sol);

}  // namespace failop
