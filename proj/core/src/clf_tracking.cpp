#include "failop/clf_tracking.hpp"

#include <cmath>
#include <stdexcept>

namespace failop {

double v_eval(const VelocityClf& clf, double v) {
  const double e = v - clf.v_d;
  return e * e;
}

ClfQuadratic build_clf_quadratic(const VelocityClf& clf, double v_now,
                                 double v_next_nominal_u0,
                                 double control_gain, double mu_v,
                                 double sigma_v, double c) {
  if (clf.c_v <= 0.0 || clf.c_v > 1.0) {
    throw std::invalid_argument("build_clf_quadratic: c_v must be in (0,1]");
  }
  ClfQuadratic q;
  q.c0 = v_next_nominal_u0 + mu_v - clf.v_d;
  q.c1 = control_gain;
  q.sigma_v = sigma_v;
  q.c = c;
  q.c_v = clf.c_v;
  q.v_now_err_sq = v_eval(clf, v_now);
  return q;
}

double clf_g(const ClfQuadratic& q, double u, double iota) {
  const double worst = std::abs(q.c0 + q.c1 * u) + q.c * q.sigma_v;
  return worst * worst - (1.0 - q.c_v) * q.v_now_err_sq - iota;
}

double clf_violation(const VelocityClf& clf, double v_now, double v_next) {
  const double v0 = v_eval(clf, v_now);
  return (v_eval(clf, v_next) - v0) + clf.c_v * v0;
}

}  // namespace failop
