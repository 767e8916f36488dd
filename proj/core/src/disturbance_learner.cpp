#include "failop/disturbance_learner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace failop {

std::optional<ResidualObservation> observe(const Eigen::VectorXd& x_k,
                                           double u_k,
                                           const Eigen::VectorXd& x_next_measured,
                                           const NominalMap& nominal,
                                           long timestamp) {
  if (!x_next_measured.allFinite() || !x_k.allFinite() ||
      !std::isfinite(u_k)) {
    std::cerr << "observe: non-finite measurement at step " << timestamp
              << ", discarded\n";
    return std::nullopt;
  }
  ResidualObservation obs;
  obs.x = x_k;
  obs.w_tilde = x_next_measured - nominal(x_k, u_k);
  obs.timestamp = timestamp;
  return obs;
}

DisturbanceLearner::DisturbanceLearner(const LearnerConfig& config)
    : config_(config) {
  if (config_.confidence_c <= 0.0) {
    throw std::invalid_argument("DisturbanceLearner: c must be positive");
  }
  if (config_.budget.capacity < 2) {
    throw std::invalid_argument("DisturbanceLearner: budget must be >= 2");
  }
  channels_.assign(config_.num_channels,
                   GpModel(config_.init_params, config_.sigma_noise));
}

void DisturbanceLearner::ingest(const ResidualObservation& obs) {
  if (obs.w_tilde.size() != static_cast<int>(channels_.size())) {
    throw std::invalid_argument("ingest: residual dimension mismatch");
  }
  ++ingest_count_;
  const bool reoptimize = config_.reoptimize_period > 0 &&
                          ingest_count_ % config_.reoptimize_period == 0;
  for (size_t j = 0; j < channels_.size(); ++j) {
    // channel faults are isolated: one bad channel never blocks the others
    try {
      incremental_update(channels_[j], obs.x, obs.w_tilde(j), config_.budget);
      if (reoptimize) channels_[j].optimize_hyperparameters();
    } catch (const std::exception& e) {
      std::cerr << "ingest: channel " << j << " update failed: " << e.what()
                << "\n";
    }
  }
}

DisturbanceEstimate DisturbanceLearner::estimate(
    const Eigen::VectorXd& x) const {
  const int n = static_cast<int>(channels_.size());
  DisturbanceEstimate est;
  est.mu.resize(n);
  est.sigma.resize(n);
  for (int j = 0; j < n; ++j) {
    // the control loop tolerates more variance round-off than the strict
    // default; near-singular kernels at sigma_noise = 1e-6 make it necessary
    const double clamp_tol = 1e-6 * (1.0 + channels_[j].params.theta_f);
    const GpPosterior post = channels_[j].posterior(x, clamp_tol);
    est.mu(j) = post.mean;
    // observation noise bounds the certainty any finite dataset can deliver
    est.sigma(j) = std::max(post.std, config_.sigma_noise);
  }
  return est;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
DisturbanceLearner::confidence_interval(const DisturbanceEstimate& est,
                                        double c) {
  if (c <= 0.0) {
    throw std::invalid_argument("confidence_interval: c must be positive");
  }
  return {est.mu - c * est.sigma, est.mu + c * est.sigma};
}

void DisturbanceLearner::dump_dataset_csv(int j, std::ostream& os) const {
  const GpModel& gp = channels_.at(j);
  if (gp.empty()) return;
  const int d = static_cast<int>(gp.X[0].size());
  os << "index";
  for (int k = 0; k < d; ++k) os << ",x" << k;
  os << ",residual\n";
  for (int i = 0; i < gp.size(); ++i) {
    os << i;
    for (int k = 0; k < d; ++k) os << "," << gp.X[i](k);
    os << "," << gp.y(i) << "\n";
  }
}

}  // namespace failop
