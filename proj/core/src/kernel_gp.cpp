#include "failop/kernel_gp.hpp"

#include <cmath>
#include <numbers>

namespace failop {

double rbf_eval(const RbfKernelParams& params, const Eigen::VectorXd& x1,
                const Eigen::VectorXd& x2) {
  if (x1.size() != x2.size()) {
    throw std::invalid_argument("rbf_eval: dimension mismatch");
  }
  const double d2 = (x1 - x2).squaredNorm();
  return params.theta_f * std::exp(-d2 / (params.l_f * params.l_f));
}

Eigen::MatrixXd build_kernel_matrix(const RbfKernelParams& params,
                                    const std::vector<Eigen::VectorXd>& X) {
  const int n = static_cast<int>(X.size());
  if (n == 0) {
    throw std::invalid_argument("build_kernel_matrix: empty input set");
  }
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = params.theta_f;
    for (int q = i + 1; q < n; ++q) {
      const double v = rbf_eval(params, X[i], X[q]);
      K(i, q) = v;
      K(q, i) = v;
    }
  }
  return K;
}

void GpModel::rebuild() {
  const int n = size();
  if (n == 0) {
    K.resize(0, 0);
    K_inv.resize(0, 0);
    return;
  }
  K = build_kernel_matrix(params, X);
  Eigen::MatrixXd reg =
      K + sigma_noise * sigma_noise * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw numerical_fault("GpModel::rebuild: regularized kernel not PD");
  }
  K_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
}

double GpModel::inverse_consistency_error() const {
  const int n = size();
  if (n == 0) return 0.0;
  Eigen::MatrixXd reg =
      K + sigma_noise * sigma_noise * Eigen::MatrixXd::Identity(n, n);
  return (K_inv * reg - Eigen::MatrixXd::Identity(n, n))
      .cwiseAbs()
      .maxCoeff();
}

GpPosterior GpModel::posterior(const Eigen::VectorXd& x_star,
                               double clamp_tol) const {
  const double prior_var = params.theta_f;
  if (empty()) {
    return {0.0, std::sqrt(prior_var)};
  }
  const int n = size();
  Eigen::VectorXd k_n(n);
  for (int i = 0; i < n; ++i) k_n(i) = rbf_eval(params, X[i], x_star);

  const double mean = k_n.dot(K_inv * y);
  double var = prior_var - k_n.dot(K_inv * k_n);
  if (var < 0.0) {
    if (var < -clamp_tol) {
      throw numerical_fault("GpModel::posterior: negative variance " +
                            std::to_string(var));
    }
    var = 0.0;
  }
  return {mean, std::sqrt(var)};
}

double GpModel::neg_log_marginal_likelihood() const {
  return neg_log_marginal_likelihood(params);
}

double GpModel::neg_log_marginal_likelihood(const RbfKernelParams& p) const {
  const int n = size();
  if (n == 0) {
    throw std::invalid_argument("neg_log_marginal_likelihood: empty dataset");
  }
  Eigen::MatrixXd M = build_kernel_matrix(p, X) +
                      p.theta_f * p.theta_f * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw numerical_fault("neg_log_marginal_likelihood: matrix not PD");
  }
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = y.dot(llt.solve(y));
  return 0.5 * quad + 0.5 * logdet +
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

namespace {

// Projected-gradient descent in log-parameter space with backtracking.
// Monotone by construction; bounds enforced by clamping.
struct LogBox {
  double lo0, hi0, lo1, hi1;
  Eigen::Vector2d clamp(Eigen::Vector2d z) const {
    z(0) = std::min(std::max(z(0), lo0), hi0);
    z(1) = std::min(std::max(z(1), lo1), hi1);
    return z;
  }
};

}  // namespace

GpModel::OptResult GpModel::optimize_hyperparameters() {
  if (empty()) {
    throw std::invalid_argument("optimize_hyperparameters: empty dataset");
  }
  const LogBox box{std::log(params.theta_min), std::log(params.theta_max),
                   std::log(params.l_min), std::log(params.l_max)};
  auto to_params = [&](const Eigen::Vector2d& z) {
    RbfKernelParams p = params;
    p.theta_f = std::exp(z(0));
    p.l_f = std::exp(z(1));
    return p;
  };
  auto objective = [&](const Eigen::Vector2d& z) {
    return neg_log_marginal_likelihood(to_params(z));
  };

  Eigen::Vector2d z = box.clamp(
      Eigen::Vector2d(std::log(params.theta_f), std::log(params.l_f)));
  double f = objective(z);

  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-6;
  constexpr double kFdStep = 1e-6;

  OptResult res;
  res.converged = false;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    Eigen::Vector2d grad;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d zp = z, zm = z;
      zp(j) += kFdStep;
      zm(j) -= kFdStep;
      grad(j) = (objective(box.clamp(zp)) - objective(box.clamp(zm))) /
                (2.0 * kFdStep);
    }
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::Vector2d z_new = box.clamp(z - step * grad);
      if ((z_new - z).norm() == 0.0) break;
      const double f_new = objective(z_new);
      if (f_new < f - 1e-12) {
        if (f - f_new < kTol) res.converged = true;
        z = z_new;
        f = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no descent direction left at this resolution
      break;
    }
    if (res.converged) break;
  }
  res.iterations = it;
  res.params = to_params(z);
  params = res.params;
  rebuild();
  return res;
}

double GpModel::information_gain() const {
  const int n = size();
  if (n == 0) {
    throw std::invalid_argument("information_gain: empty dataset");
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) +
                      K / (sigma_noise * sigma_noise);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw numerical_fault("information_gain: matrix not PD");
  }
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * logdet;
}

}  // namespace failop
