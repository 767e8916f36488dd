#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace failop {

/// RBF kernel hyperparameters with fixed box bounds.
struct RbfKernelParams {
  double theta_f = 1.0;  // signal variance
  double l_f = 1.0;      // length scale

  double theta_min = 1e-3;
  double theta_max = 1e3;
  double l_min = 1e-2;
  double l_max = 1e2;

  bool within_bounds() const {
    return theta_f >= theta_min && theta_f <= theta_max && l_f >= l_min &&
           l_f <= l_max;
  }
};

/// k(x1, x2) = theta_f * exp(-||x1-x2||^2 / l_f^2)
double rbf_eval(const RbfKernelParams& params, const Eigen::VectorXd& x1,
                const Eigen::VectorXd& x2);

Eigen::MatrixXd build_kernel_matrix(const RbfKernelParams& params,
                                    const std::vector<Eigen::VectorXd>& X);

struct GpPosterior {
  double mean = 0.0;
  double std = 0.0;
};

class numerical_fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact GP for one scalar disturbance channel. The inverse of the
/// regularized kernel matrix (K + sigma_noise^2 I) is stored alongside K and
/// kept consistent by the incremental update path.
struct GpModel {
  RbfKernelParams params;
  std::vector<Eigen::VectorXd> X;
  Eigen::VectorXd y;
  Eigen::MatrixXd K;      // kernel matrix, no noise term
  Eigen::MatrixXd K_inv;  // (K + sigma_noise^2 I)^{-1}
  double sigma_noise = 1e-6;

  GpModel() = default;
  GpModel(RbfKernelParams p, double noise) : params(p), sigma_noise(noise) {}

  int size() const { return static_cast<int>(X.size()); }
  bool empty() const { return X.empty(); }

  /// Recompute K and K_inv from the stored data, O(N^3).
  void rebuild();

  /// max-norm of K_inv*(K + sigma^2 I) - I; 0 for an empty model.
  double inverse_consistency_error() const;

  /// Round-off in the variance is clamped to zero down to -clamp_tol;
  /// anything more negative is a numerical-consistency fault.
  GpPosterior posterior(const Eigen::VectorXd& x_star,
                        double clamp_tol = 1e-10) const;

  double neg_log_marginal_likelihood() const;
  double neg_log_marginal_likelihood(const RbfKernelParams& p) const;

  struct OptResult {
    RbfKernelParams params;
    bool converged = true;
    int iterations = 0;
  };

  /// Bound-constrained minimization of the likelihood objective starting
  /// from the current hyperparameters. Accepts only monotone improvement;
  /// on success the model is rebuilt with the optimized parameters.
  OptResult optimize_hyperparameters();

  /// 0.5 * log det(I + sigma^{-2} K)
  double information_gain() const;
};

}  // namespace failop
