#include "failop/safety_barrier.hpp"

#include <cmath>
#include <stdexcept>

#include "failop/disturbance_learner.hpp"

namespace failop {

double h_eval(const AffineBarrier& bar, const Eigen::VectorXd& x_joint) {
  if (bar.a.size() != x_joint.size()) {
    throw std::invalid_argument("h_eval: dimension mismatch");
  }
  return bar.a.dot(x_joint) + bar.b;
}

double classk_gamma(double alpha, double h) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("classk_gamma: alpha must be in (0,1)");
  }
  return alpha * h;
}

double cbf_residual(double h_next, double h_cur, double alpha) {
  return (h_next - h_cur) + alpha * h_cur;
}

CbfConstraintRow build_cbf_row(const AffineBarrier& bar,
                               const Eigen::VectorXd& x_joint,
                               const Eigen::VectorXd& nominal_next,
                               const Eigen::VectorXd& u_channel,
                               const DisturbanceEstimate& est, double c,
                               double margin, SigmaNorm norm) {
  const double h_now = h_eval(bar, x_joint);
  const double nominal_term = h_eval(bar, nominal_next);

  // only the linear functional of h touches the disturbance; the offset b
  // already lives in the nominal term
  const double mean_term = bar.a.dot(est.mu);
  double robust_term = 0.0;
  if (norm == SigmaNorm::kWeightedOne) {
    robust_term = c * bar.a.cwiseAbs().dot(est.sigma);
  } else {
    robust_term = c * bar.a.cwiseProduct(est.sigma).norm();
  }

  CbfConstraintRow row;
  row.coef_u = bar.a.dot(u_channel);
  row.rhs = (1.0 - bar.alpha) * h_now + margin - nominal_term - mean_term +
            robust_term;
  row.diagnostics.h_now = h_now;
  row.diagnostics.eps_term = mean_term - robust_term;
  row.diagnostics.nominal_term = nominal_term;
  if (row.coef_u == 0.0 && row.rhs > 0.0) {
    row.unactuated_violation = true;
  }
  return row;
}

double convergence_envelope(double h0, double alpha, int k) {
  if (k < 0) throw std::invalid_argument("convergence_envelope: k < 0");
  return std::pow(1.0 - alpha, k) * h0;
}

}  // namespace failop
