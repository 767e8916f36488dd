#include "failop/incremental_gp.hpp"

#include <cmath>

namespace failop {

Eigen::VectorXd relevance_scores(const std::vector<Eigen::VectorXd>& X,
                                 const Eigen::VectorXd& x_new,
                                 const RbfKernelParams& rel_params) {
  if (X.empty()) {
    throw std::invalid_argument("relevance_scores: empty input set");
  }
  Eigen::VectorXd scores(static_cast<int>(X.size()));
  const double two_l2 = 2.0 * rel_params.l_f * rel_params.l_f;
  for (int i = 0; i < scores.size(); ++i) {
    scores(i) = rel_params.theta_f *
                std::exp(-(X[i] - x_new).squaredNorm() / two_l2);
  }
  return scores;
}

int select_replacement(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) {
    throw std::invalid_argument("select_replacement: empty scores");
  }
  int best = 0;
  for (int i = 1; i < scores.size(); ++i) {
    if (scores(i) < scores(best)) best = i;
  }
  return best;
}

void permute_point_to_front(GpModel& model, int idx) {
  const int n = model.size();
  if (idx < 0 || idx >= n) {
    throw std::out_of_range("permute_point_to_front: bad index");
  }
  if (idx == 0) return;

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  // cycle idx -> 0, shifting 0..idx-1 down by one; order elsewhere kept
  for (int i = 0; i < n; ++i) {
    perm.indices()(i) = (i < idx) ? i + 1 : (i == idx ? 0 : i);
  }
  model.K = perm * model.K * perm.transpose();
  model.K_inv = perm * model.K_inv * perm.transpose();

  Eigen::VectorXd x = model.X[idx];
  model.X.erase(model.X.begin() + idx);
  model.X.insert(model.X.begin(), x);
  Eigen::VectorXd y_new(n);
  y_new(0) = model.y(idx);
  y_new.segment(1, idx) = model.y.head(idx);
  y_new.tail(n - idx - 1) = model.y.tail(n - idx - 1);
  model.y = y_new;
}

BlockDecomposition decompose_front(const GpModel& model) {
  const int n = model.size();
  if (n < 2) {
    throw std::invalid_argument("decompose_front: need at least 2 points");
  }
  BlockDecomposition b;
  b.k0 = model.K(0, 0);
  b.k_rest = model.K.col(0).tail(n - 1);
  b.Omega = model.K.block(1, 1, n - 1, n - 1);
  b.rho0 = model.K_inv(0, 0);
  b.rho_rest = model.K_inv.col(0).tail(n - 1);
  b.S = model.K_inv.block(1, 1, n - 1, n - 1);
  return b;
}

Eigen::MatrixXd downdate_inverse(const BlockDecomposition& blocks) {
  if (std::abs(blocks.rho0) < 1e-12) {
    throw singular_update("downdate_inverse: rho0 near zero");
  }
  return blocks.S -
         (blocks.rho_rest * blocks.rho_rest.transpose()) / blocks.rho0;
}

Eigen::MatrixXd update_inverse(const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& k_new_vec,
                               double k0_new, double sigma_noise) {
  const int m = static_cast<int>(P.rows());
  const double s2 = sigma_noise * sigma_noise;
  if (m == 0) {
    Eigen::MatrixXd inv(1, 1);
    inv(0, 0) = 1.0 / (k0_new + s2);
    return inv;
  }
  const Eigen::VectorXd pk = P * k_new_vec;
  const double denom = k0_new + s2 - k_new_vec.dot(pk);
  if (denom <= 1e-12) {
    throw singular_update("update_inverse: near-duplicate point");
  }
  const double q = 1.0 / denom;
  Eigen::MatrixXd inv(m + 1, m + 1);
  inv.topLeftCorner(m, m) = P + pk * pk.transpose() * q;
  inv.topRightCorner(m, 1) = -pk * q;
  inv.bottomLeftCorner(1, m) = (-pk * q).transpose();
  inv(m, m) = q;
  return inv;
}

namespace {

int pick_eviction(const GpModel& model, const Eigen::VectorXd& x_new,
                  ReplacementStrategy strategy,
                  const RbfKernelParams* rel_params) {
  if (strategy == ReplacementStrategy::kCovarianceDiagonal) {
    // largest inverse-diagonal entry = most redundant under the current set
    int best = 0;
    for (int i = 1; i < model.size(); ++i) {
      if (model.K_inv(i, i) > model.K_inv(best, best)) best = i;
    }
    return best;
  }
  const RbfKernelParams& rp = rel_params ? *rel_params : model.params;
  return select_replacement(relevance_scores(model.X, x_new, rp));
}

// O(N^2) health probe of the maintained inverse: residual of
// K_inv (K + sigma^2 I) v - v for a fixed deterministic vector.
bool inverse_probe_ok(const GpModel& model) {
  const int n = model.size();
  if (n == 0) return true;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + i);
  const double s2 = model.sigma_noise * model.sigma_noise;
  Eigen::VectorXd r = model.K_inv * (model.K * v + s2 * v) - v;
  const double err = r.cwiseAbs().maxCoeff();
  // well tighter than the accuracy we promise downstream: the one-vector
  // residual can undershoot the full-matrix one by a couple of decades
  return std::isfinite(err) && err < 1e-8 * v.cwiseAbs().maxCoeff();
}

void append_point(GpModel& model, const Eigen::VectorXd& x_new, double y_new,
                  const Eigen::VectorXd& k_new_vec, double k0_new) {
  const int n = model.size();
  Eigen::MatrixXd K_new(n + 1, n + 1);
  K_new.topLeftCorner(n, n) = model.K;
  K_new.topRightCorner(n, 1) = k_new_vec;
  K_new.bottomLeftCorner(1, n) = k_new_vec.transpose();
  K_new(n, n) = k0_new;
  model.K = std::move(K_new);
  model.X.push_back(x_new);
  model.y.conservativeResize(n + 1);
  model.y(n) = y_new;
}

}  // namespace

UpdateOutcome incremental_update(GpModel& model, const Eigen::VectorXd& x_new,
                                 double y_new, const UpdateBudget& budget,
                                 ReplacementStrategy strategy,
                                 const RbfKernelParams* rel_params) {
  if (budget.capacity < 2) {
    throw std::invalid_argument("incremental_update: capacity must be >= 2");
  }
  UpdateOutcome out;
  const double k0_new = model.params.theta_f;

  if (model.size() < budget.capacity) {
    // grow path: current K_inv plays the role of P
    Eigen::VectorXd k_new_vec(model.size());
    for (int i = 0; i < model.size(); ++i) {
      k_new_vec(i) = rbf_eval(model.params, model.X[i], x_new);
    }
    try {
      Eigen::MatrixXd inv =
          update_inverse(model.K_inv, k_new_vec, k0_new, model.sigma_noise);
      append_point(model, x_new, y_new, k_new_vec, k0_new);
      model.K_inv = std::move(inv);
      if (!inverse_probe_ok(model)) {
        model.rebuild();
        out.rebuilt = true;
      }
    } catch (const singular_update&) {
      append_point(model, x_new, y_new, k_new_vec, k0_new);
      model.rebuild();
      out.rebuilt = true;
    }
    return out;
  }

  out.replaced = true;
  out.evicted_index = pick_eviction(model, x_new, strategy, rel_params);
  permute_point_to_front(model, out.evicted_index);

  const int n = model.size();
  BlockDecomposition blocks = decompose_front(model);

  // drop the front point from the dataset
  model.X.erase(model.X.begin());
  Eigen::VectorXd y_kept = model.y.tail(n - 1);
  model.y = y_kept;
  model.K = blocks.Omega;

  Eigen::VectorXd k_new_vec(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    k_new_vec(i) = rbf_eval(model.params, model.X[i], x_new);
  }

  try {
    Eigen::MatrixXd P = downdate_inverse(blocks);
    Eigen::MatrixXd inv =
        update_inverse(P, k_new_vec, k0_new, model.sigma_noise);
    append_point(model, x_new, y_new, k_new_vec, k0_new);
    model.K_inv = std::move(inv);
    if (!inverse_probe_ok(model)) {
      model.rebuild();
      out.rebuilt = true;
    }
  } catch (const singular_update&) {
    append_point(model, x_new, y_new, k_new_vec, k0_new);
    model.rebuild();
    out.rebuilt = true;
  }
  return out;
}

}  // namespace failop
