#pragma once

namespace failop {

struct DisturbanceEstimate;

/// Exponentially stabilizing velocity CLF: V(x) = (v - v_d)^2.
struct VelocityClf {
  double v_d = 20.0;   // m/s
  double c_v = 0.8;    // decay rate in (0,1]
};

/// Coefficients of the box-robust stabilization constraint
///   g(u, iota) = (|c0 + c1 u| + c sigma_v)^2 - (1 - c_v) V(x) - iota < 0,
/// where c0 is the disturbance-shifted nominal next velocity error at u = 0
/// and c1 maps the control into the next velocity.
struct ClfQuadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double sigma_v = 0.0;
  double c = 3.0;
  double c_v = 0.8;
  double v_now_err_sq = 0.0;  // current V value
};

double v_eval(const VelocityClf& clf, double v);

/// v_next_nominal_u0: nominal next velocity at u = 0 (no disturbance);
/// control_gain: dv+/du (T_s / M for the EV).
ClfQuadratic build_clf_quadratic(const VelocityClf& clf, double v_now,
                                 double v_next_nominal_u0,
                                 double control_gain, double mu_v,
                                 double sigma_v, double c);

/// g(u, iota) as above; the worst case over the disturbance box is attained
/// at an endpoint, making the bound exact.
double clf_g(const ClfQuadratic& q, double u, double iota);

/// (V(v_next) - V(v_now)) + c_v V(v_now): the minimal iota certifying the
/// realized step.
double clf_violation(const VelocityClf& clf, double v_now, double v_next);

}  // namespace failop
