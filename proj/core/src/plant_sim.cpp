#include "failop/plant_sim.hpp"

#include <cmath>
#include <iostream>

namespace failop {

namespace {

double interp_linear(const std::vector<std::pair<double, double>>& knots,
                     double t) {
  if (knots.empty()) return 0.0;
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  for (size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].first) {
      const auto& [t0, v0] = knots[i - 1];
      const auto& [t1, v1] = knots[i];
      if (t1 == t0) return v1;
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return knots.back().second;
}

double interp_step(const std::vector<std::pair<double, double>>& knots,
                   double t) {
  if (knots.empty()) return 0.0;
  double val = knots.front().second;
  for (const auto& [tk, vk] : knots) {
    if (t >= tk) val = vk;
  }
  return val;
}

}  // namespace

double RoadProfile::grade(double t) const { return interp_linear(grade_knots, t); }

double RoadProfile::rolling(double t) const {
  return rolling_knots.empty() ? 0.06 : interp_step(rolling_knots, t);
}

RoadProfile RoadProfile::flat(double k_f) {
  RoadProfile r;
  r.grade_knots = {{0.0, 0.0}};
  r.rolling_knots = {{0.0, k_f}};
  return r;
}

double LeaderProfile::velocity(double t) const { return interp_linear(knots, t); }

LeaderProfile LeaderProfile::constant(double v) {
  return LeaderProfile{{{0.0, v}}};
}

double ev_disturbance(double v, double phi, double k_f,
                      const EvParams& params) {
  const double drag = params.k_v * v * v;
  const double rolling = k_f * params.gravity * params.mass * std::cos(phi);
  return -(drag + rolling) / params.mass - params.gravity * std::sin(phi);
}

EvState ev_step(const EvState& state, double u, const RoadProfile& road,
                double t, double ts, const EvParams& params,
                bool disturbances_enabled) {
  const double u_hi = params.u_max();
  if (u < -u_hi || u > u_hi) {
    std::cerr << "ev_step: control " << u << " outside [" << -u_hi << ", "
              << u_hi << "], clamping\n";
    u = std::min(std::max(u, -u_hi), u_hi);
  }
  const double w = disturbances_enabled
                       ? ev_disturbance(state.v, road.grade(t),
                                        road.rolling(t), params)
                       : 0.0;
  EvState next;
  next.p = state.p + ts * state.v;
  next.v = state.v + ts * (u / params.mass + w);
  return next;
}

double hv_range_policy(double d, const HvParams& params) {
  if (d <= params.d_min) return 0.0;
  if (d >= params.d_max) return params.v_max;
  return params.range_slope() * (d - params.d_min);
}

double hv_control(const HvState& me, const HvState& front,
                  const HvParams& params) {
  const double d = front.s - me.s - params.length;
  return params.gain_range * (hv_range_policy(d, params) - me.v) +
         params.gain_rel * (front.v - me.v);
}

Eigen::Vector4d joint_state(const WorldState& world) {
  return {world.ev.p, world.ev.v, world.hvs[2].s, world.hvs[2].v};
}

StepOutcome world_step(const WorldState& world, double u_ev,
                       const RoadProfile& road, const LeaderProfile& leader,
                       std::mt19937_64& rng, double sigma_noise, double ts,
                       const EvParams& ev_params, const HvParams& hv_params,
                       bool disturbances_enabled, bool noise_enabled) {
  StepOutcome out;
  WorldState& next = out.world;
  next.t = world.t + ts;
  next.step = world.step + 1;

  const double phi = road.grade(world.t);
  const double k_f = road.rolling(world.t);

  // HV1 tracks the commanded velocity profile kinematically.
  next.hvs[0].s = world.hvs[0].s + ts * world.hvs[0].v;
  next.hvs[0].v = leader.velocity(next.t);

  // HV2 and HV3 follow their front HV; HV4 follows the EV. The followers
  // share the EV's disturbance field on their acceleration channel.
  auto follower_step = [&](const HvState& me, const HvState& front) {
    const double u = hv_control(me, front, hv_params);
    const double w =
        disturbances_enabled ? ev_disturbance(me.v, phi, k_f, ev_params) : 0.0;
    HvState n;
    n.s = me.s + ts * me.v;
    n.v = me.v + ts * (u / ev_params.mass + w);
    return n;
  };
  next.hvs[1] = follower_step(world.hvs[1], world.hvs[0]);
  next.hvs[2] = follower_step(world.hvs[2], world.hvs[1]);
  next.hvs[3] = follower_step(world.hvs[3],
                              HvState{world.ev.p, world.ev.v});

  next.ev = ev_step(world.ev, u_ev, road, world.t, ts, ev_params,
                    disturbances_enabled);

  const double l = hv_params.length;
  const double gaps[4] = {next.hvs[0].s - next.hvs[1].s - l,
                          next.hvs[1].s - next.hvs[2].s - l,
                          next.hvs[2].s - next.ev.p - l,
                          next.ev.p - next.hvs[3].s - l};
  for (double g : gaps) {
    if (g <= 0.0) out.crashed = true;
  }

  out.measured = joint_state(next);
  if (noise_enabled && sigma_noise > 0.0) {
    std::normal_distribution<double> dist(0.0, sigma_noise);
    for (int i = 0; i < 4; ++i) out.measured(i) += dist(rng);
  }
  return out;
}

}  // namespace failop
