#pragma once

#include "failop/kernel_gp.hpp"

namespace failop {

/// Block split of the regularized kernel matrix and its inverse with the
/// departing point in the leading position. Omega/k0/k_rest are pure kernel
/// values; the noise term enters through the inverse blocks.
struct BlockDecomposition {
  double k0 = 0.0;
  Eigen::VectorXd k_rest;
  Eigen::MatrixXd Omega;
  double rho0 = 0.0;
  Eigen::VectorXd rho_rest;
  Eigen::MatrixXd S;
};

struct UpdateBudget {
  int capacity = 20;
};

enum class ReplacementStrategy {
  kRbfRelevance,         // least RBF similarity to the incoming point
  kCovarianceDiagonal,   // most redundant by inverse-matrix diagonal
};

class singular_update : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// score_i = theta * exp(-||x_i - x_new||^2 / (2 l^2))
Eigen::VectorXd relevance_scores(const std::vector<Eigen::VectorXd>& X,
                                 const Eigen::VectorXd& x_new,
                                 const RbfKernelParams& rel_params);

/// argmin; ties broken by lowest index.
int select_replacement(const Eigen::VectorXd& scores);

/// Symmetric permutation moving row/column idx of K, K_inv and the dataset
/// entry to position 0.
void permute_point_to_front(GpModel& model, int idx);

/// Block views of model.K / model.K_inv with the departing point at index 0.
BlockDecomposition decompose_front(const GpModel& model);

/// P = S - rho_rest rho_rest^T / rho0, the inverse of the retained
/// regularized block (Omega + sigma^2 I).
Eigen::MatrixXd downdate_inverse(const BlockDecomposition& blocks);

/// Inverse of [[Omega_sigma, k_new],[k_new^T, k0_new + sigma^2]] given
/// P = Omega_sigma^{-1}; the new point occupies the trailing position.
Eigen::MatrixXd update_inverse(const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& k_new_vec,
                               double k0_new, double sigma_noise);

struct UpdateOutcome {
  bool replaced = false;    // a point was evicted
  bool rebuilt = false;     // singular fast path, fell back to O(N^3) rebuild
  int evicted_index = -1;   // pre-permutation index of the evicted point
};

/// Grow the dataset while under budget, otherwise evict the least relevant
/// point and splice the new one in via the downdate/update pair. On a
/// singular fast path the dataset change is kept and the inverse is rebuilt
/// from scratch.
UpdateOutcome incremental_update(
    GpModel& model, const Eigen::VectorXd& x_new, double y_new,
    const UpdateBudget& budget,
    ReplacementStrategy strategy = ReplacementStrategy::kRbfRelevance,
    const RbfKernelParams* rel_params = nullptr);

}  // namespace failop
