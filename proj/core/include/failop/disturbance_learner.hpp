#pragma once

#include <functional>
#include <optional>
#include <ostream>

#include "failop/incremental_gp.hpp"

namespace failop {

struct ResidualObservation {
  Eigen::VectorXd x;        // joint state at step k
  Eigen::VectorXd w_tilde;  // per-channel residual
  long timestamp = 0;
};

struct DisturbanceEstimate {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

struct LearnerConfig {
  int num_channels = 4;
  UpdateBudget budget{20};
  double sigma_noise = 1e-6;
  double confidence_c = 3.0;
  int reoptimize_period = 50;
  RbfKernelParams init_params;
};

/// Nominal next value of the monitored channels given state and control.
using NominalMap =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double u)>;

/// Residual of the measured transition against the nominal model. Non-finite
/// measurements yield nullopt (discarded with a warning).
std::optional<ResidualObservation> observe(const Eigen::VectorXd& x_k,
                                           double u_k,
                                           const Eigen::VectorXd& x_next_measured,
                                           const NominalMap& nominal,
                                           long timestamp = 0);

/// One budgeted incremental GP per monitored channel.
class DisturbanceLearner {
 public:
  explicit DisturbanceLearner(const LearnerConfig& config);

  void ingest(const ResidualObservation& obs);
  DisturbanceEstimate estimate(const Eigen::VectorXd& x) const;

  static std::pair<Eigen::VectorXd, Eigen::VectorXd> confidence_interval(
      const DisturbanceEstimate& est, double c);

  const GpModel& channel(int j) const { return channels_.at(j); }
  GpModel& channel(int j) { return channels_.at(j); }
  const LearnerConfig& config() const { return config_; }
  long ingest_count() const { return ingest_count_; }

  /// CSV rows "step,x_0,...,x_{d-1},residual" for one channel's dataset.
  void dump_dataset_csv(int j, std::ostream& os) const;

 private:
  LearnerConfig config_;
  std::vector<GpModel> channels_;
  long ingest_count_ = 0;
};

}  // namespace failop
