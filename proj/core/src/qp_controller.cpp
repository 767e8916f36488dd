#include "failop/qp_controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace failop {

namespace {

double phi_eval(const ControlProblem& prob, double u) {
  double val = u * u;
  for (const auto& row : prob.cbf_rows) {
    const double deficit = std::max(0.0, row.rhs - row.coef_u * u);
    val += prob.lambda_zeta * deficit * deficit;
  }
  if (prob.clf) {
    const double viol = std::max(0.0, clf_g(*prob.clf, u, 0.0));
    val += prob.lambda_iota * viol * viol;
  }
  return val;
}

bool problem_finite(const ControlProblem& prob) {
  auto fin = [](double v) { return std::isfinite(v); };
  if (!fin(prob.u_min) || !fin(prob.u_max) || !fin(prob.lambda_zeta) ||
      !fin(prob.lambda_iota)) {
    return false;
  }
  for (const auto& row : prob.cbf_rows) {
    if (!fin(row.coef_u) || !fin(row.rhs)) return false;
  }
  if (prob.clf) {
    const auto& q = *prob.clf;
    if (!fin(q.c0) || !fin(q.c1) || !fin(q.sigma_v) || !fin(q.c) ||
        !fin(q.v_now_err_sq)) {
      return false;
    }
  }
  return true;
}

// Kinks of the max(0, .) terms inside [lo, hi].
std::vector<double> collect_breakpoints(const ControlProblem& prob, double lo,
                                        double hi) {
  std::vector<double> pts{lo, hi};
  auto push = [&](double u) {
    if (u > lo && u < hi) pts.push_back(u);
  };
  for (const auto& row : prob.cbf_rows) {
    if (row.coef_u != 0.0) push(row.rhs / row.coef_u);
  }
  if (prob.clf && prob.clf->c1 != 0.0) {
    const auto& q = *prob.clf;
    push(-q.c0 / q.c1);  // kink of |c0 + c1 u|
    const double s =
        std::sqrt(std::max(0.0, (1.0 - q.c_v) * q.v_now_err_sq)) -
        q.c * q.sigma_v;
    if (s >= 0.0) {  // roots of g(u, 0) = 0
      push((s - q.c0) / q.c1);
      push((-s - q.c0) / q.c1);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Minimize phi over [a, b]. phi is smooth on the open segment; when only
// quadratic terms are active a closed form applies, otherwise golden section.
double minimize_segment(const ControlProblem& prob, double a, double b) {
  const double mid = 0.5 * (a + b);
  const bool clf_active =
      prob.clf && clf_g(*prob.clf, mid, 0.0) > 0.0 && prob.clf->c1 != 0.0;

  if (!clf_active) {
    // phi = A u^2 - 2 B u + C on this segment
    double A = 1.0, B = 0.0;
    for (const auto& row : prob.cbf_rows) {
      if (row.rhs - row.coef_u * mid > 0.0) {
        A += prob.lambda_zeta * row.coef_u * row.coef_u;
        B += prob.lambda_zeta * row.coef_u * row.rhs;
      }
    }
    if (prob.clf && prob.clf->c1 == 0.0 &&
        clf_g(*prob.clf, mid, 0.0) > 0.0) {
      // constant term only, does not move the minimizer
    }
    return std::clamp(B / A, a, b);
  }

  // golden section
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = phi_eval(prob, x1);
  double f2 = phi_eval(prob, x2);
  double lo = a, hi = b;
  for (int i = 0; i < 90 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi));
       ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = phi_eval(prob, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = phi_eval(prob, x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::function<double(double)> eliminate_slacks(const ControlProblem& prob) {
  if (!prob.valid()) {
    throw std::invalid_argument("eliminate_slacks: invalid problem");
  }
  return [prob](double u) { return phi_eval(prob, u); };
}

ControlSolution solve(const ControlProblem& prob, double u_prev) {
  const auto t0 = std::chrono::steady_clock::now();
  ControlSolution sol;

  if (!problem_finite(prob)) {
    sol.u_star = u_prev;
    sol.status = SolveStatus::kDegraded;
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return sol;
  }
  if (!prob.valid()) {
    throw std::invalid_argument("solve: invalid problem");
  }

  const std::vector<double> pts =
      collect_breakpoints(prob, prob.u_min, prob.u_max);
  double best_u = prob.u_min;
  double best_f = phi_eval(prob, best_u);
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double u = minimize_segment(prob, pts[i], pts[i + 1]);
    const double f = phi_eval(prob, u);
    if (f < best_f || (f == best_f && u < best_u)) {
      best_f = f;
      best_u = u;
    }
  }

  sol.u_star = best_u;
  sol.objective = best_f;
  for (const auto& row : prob.cbf_rows) {
    sol.zeta_star =
        std::max(sol.zeta_star, row.rhs - row.coef_u * best_u);
  }
  sol.zeta_star = std::max(0.0, sol.zeta_star);
  if (prob.clf) {
    sol.iota_star = std::max(0.0, clf_g(*prob.clf, best_u, 0.0));
  }

  // clipped when the unconstrained minimizer lies outside the box
  const double probe = 1e-7 * (prob.u_max - prob.u_min);
  if (best_u <= prob.u_min + probe &&
      phi_eval(prob, prob.u_min) <= phi_eval(prob, prob.u_min + probe)) {
    sol.u_star = prob.u_min;
    sol.status = SolveStatus::kClipped;
  } else if (best_u >= prob.u_max - probe &&
             phi_eval(prob, prob.u_max) <=
                 phi_eval(prob, prob.u_max - probe)) {
    sol.u_star = prob.u_max;
    sol.status = SolveStatus::kClipped;
  }
  sol.objective = phi_eval(prob, sol.u_star);

  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return sol;
}

KktReport kkt_check(const ControlProblem& prob, const ControlSolution& sol) {
  KktReport report;
  constexpr double kFeasTol = 1e-6;
  const double range = prob.u_max - prob.u_min;

  if (sol.u_star < prob.u_min - kFeasTol ||
      sol.u_star > prob.u_max + kFeasTol) {
    report.violations.push_back("control outside the input box");
  }
  if (sol.zeta_star < -kFeasTol || sol.iota_star < -kFeasTol) {
    report.violations.push_back("negative slack");
  }
  for (size_t r = 0; r < prob.cbf_rows.size(); ++r) {
    const auto& row = prob.cbf_rows[r];
    if (row.coef_u * sol.u_star + sol.zeta_star < row.rhs - kFeasTol) {
      report.violations.push_back("cbf row " + std::to_string(r) +
                                  " infeasible");
    }
  }
  if (prob.clf && clf_g(*prob.clf, sol.u_star, sol.iota_star) > kFeasTol) {
    report.violations.push_back("clf constraint infeasible");
  }

  // subgradient condition via one-sided differences; valid at kinks
  const double delta = 1e-7 * range;
  const double f0 = phi_eval(prob, sol.u_star);
  const double dr = (phi_eval(prob, sol.u_star + delta) - f0) / delta;
  const double dl = (f0 - phi_eval(prob, sol.u_star - delta)) / delta;
  const double scale = 1.0 + std::max(std::abs(dl), std::abs(dr));
  // with heavy penalty weights the objective is huge; roundoff limits how
  // well any minimizer can be localized (to about sqrt(eps f / f'')), so
  // grant the gradient the matching slack c2 * sqrt(eps f / c2)
  const double c2 = std::max(0.0, (dr - dl) / delta);
  const double fd_noise =
      std::sqrt(std::numeric_limits<double>::epsilon() * std::abs(f0) *
                std::max(1.0, c2));
  const double tol = 1e-4 * scale + c2 * delta + 4.0 * fd_noise;
  const bool at_lo = sol.u_star <= prob.u_min + delta;
  const bool at_hi = sol.u_star >= prob.u_max - delta;
  if (at_lo) {
    if (dr < -tol) report.violations.push_back("descent direction at u_min");
  } else if (at_hi) {
    if (dl > tol) report.violations.push_back("descent direction at u_max");
  } else if (!(dl <= tol && dr >= -tol)) {
    report.violations.push_back("not stationary at u_star");
  }
  return report;
}

}  // namespace failop
