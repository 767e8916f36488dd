#pragma once

#include <Eigen/Dense>
#include <array>
#include <random>
#include <utility>
#include <vector>

namespace failop {

struct EvState {
  double p = 0.0;  // m
  double v = 0.0;  // m/s
};

struct EvParams {
  double mass = 1650.0;       // kg
  double k_v = 0.25;          // N s^2/m^2
  double gravity = 9.81;      // m/s^2
  double u_frac = 0.3;

  double u_max() const { return u_frac * gravity * mass; }
  double u_min() const { return -u_max(); }
};

struct HvState {
  double s = 0.0;  // m
  double v = 0.0;  // m/s
};

struct HvParams {
  double gain_range = 30.0;    // alpha_i
  double gain_rel = 2000.0;    // beta_i
  double length = 2.91;        // m
  double d_min = 25.0;         // m
  double d_max = 100.0;        // m
  double v_max = 40.0;         // m/s

  double range_slope() const { return v_max / (d_max - d_min); }
};

/// Piecewise road-grade (linear interpolation) and rolling-resistance
/// (piecewise-constant) profiles over time.
struct RoadProfile {
  std::vector<std::pair<double, double>> grade_knots;    // (t, phi rad)
  std::vector<std::pair<double, double>> rolling_knots;  // (t, k_f)

  double grade(double t) const;
  double rolling(double t) const;

  static RoadProfile flat(double k_f = 0.06);
};

/// Piecewise-linear velocity command for the lead vehicle.
struct LeaderProfile {
  std::vector<std::pair<double, double>> knots;  // (t, v)

  double velocity(double t) const;

  static LeaderProfile constant(double v);
};

struct WorldState {
  EvState ev;
  std::array<HvState, 4> hvs;  // index 0 = HV1 (leader) ... 3 = HV4
  double t = 0.0;
  long step = 0;
};

/// Acceleration the nominal model omits: drag, rolling resistance, grade.
double ev_disturbance(double v, double phi, double k_f,
                      const EvParams& params);

EvState ev_step(const EvState& state, double u, const RoadProfile& road,
                double t, double ts, const EvParams& params,
                bool disturbances_enabled = true);

/// Target velocity as a function of headway; continuous at both breakpoints.
double hv_range_policy(double d, const HvParams& params);

double hv_control(const HvState& me, const HvState& front,
                  const HvParams& params);

struct StepOutcome {
  WorldState world;
  Eigen::Vector4d measured;  // noisy [p, v, s3, v3] of the next state
  bool crashed = false;
};

StepOutcome world_step(const WorldState& world, double u_ev,
                       const RoadProfile& road, const LeaderProfile& leader,
                       std::mt19937_64& rng, double sigma_noise, double ts,
                       const EvParams& ev_params, const HvParams& hv_params,
                       bool disturbances_enabled = true,
                       bool noise_enabled = true);

/// Barrier/learner joint state [p, v, s3, v3].
Eigen::Vector4d joint_state(const WorldState& world);

}  // namespace failop
