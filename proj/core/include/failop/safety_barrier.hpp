#pragma once

#include <Eigen/Dense>

namespace failop {

struct DisturbanceEstimate;  // disturbance_learner.hpp

/// h(x) = a^T x + b with class-K rate alpha in (0,1).
struct AffineBarrier {
  Eigen::VectorXd a;
  double b = 0.0;
  double alpha = 0.05;
};

/// Linear inequality row "coef_u * u + zeta >= rhs" in the control program.
struct CbfConstraintRow {
  double coef_u = 0.0;
  double rhs = 0.0;
  bool unactuated_violation = false;
  struct {
    double h_now = 0.0;
    double eps_term = 0.0;
    double nominal_term = 0.0;
  } diagnostics;
};

enum class SigmaNorm {
  kWeightedOne,  // sum |a_j| sigma_j, exact over the confidence box
  kWeightedTwo,  // ||a .* sigma||_2
};

double h_eval(const AffineBarrier& bar, const Eigen::VectorXd& x_joint);

double classk_gamma(double alpha, double h);

/// (h_next - h_cur) + alpha * h_cur; positive iff the discrete CBF
/// condition holds for the step.
double cbf_residual(double h_next, double h_cur, double alpha);

/// Robustified one-step constraint: the nominal next state plus the control
/// channel must keep h above (1-alpha) h(x) against any disturbance in the
/// confidence box [mu - c sigma, mu + c sigma].
CbfConstraintRow build_cbf_row(const AffineBarrier& bar,
                               const Eigen::VectorXd& x_joint,
                               const Eigen::VectorXd& nominal_next,
                               const Eigen::VectorXd& u_channel,
                               const DisturbanceEstimate& est, double c,
                               double margin,
                               SigmaNorm norm = SigmaNorm::kWeightedOne);

/// (1-alpha)^k * h0
double convergence_envelope(double h0, double alpha, int k);

}  // namespace failop
