#include "failop/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace failop {

using nlohmann::json;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

json knots_to_json(const std::vector<std::pair<double, double>>& knots,
                   double scale = 1.0) {
  json arr = json::array();
  for (const auto& [t, v] : knots) arr.push_back({t, v * scale});
  return arr;
}

std::vector<std::pair<double, double>> knots_from_json(const json& arr,
                                                       const char* what,
                                                       double scale = 1.0) {
  std::vector<std::pair<double, double>> knots;
  if (!arr.is_array()) {
    throw scenario_error(std::string(what) + ": expected an array of [t, value]");
  }
  for (const auto& pair : arr) {
    if (!pair.is_array() || pair.size() != 2) {
      throw scenario_error(std::string(what) + ": expected [t, value] pairs");
    }
    knots.emplace_back(pair[0].get<double>(),
                       pair[1].get<double>() * scale);
  }
  for (size_t i = 1; i < knots.size(); ++i) {
    if (knots[i].first < knots[i - 1].first) {
      throw scenario_error(std::string(what) + ": knot times must be sorted");
    }
  }
  return knots;
}

void reject_unknown(const json& obj, const char* section,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw scenario_error(std::string("unknown key '") + it.key() +
                           "' in section '" + section + "'");
    }
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig cfg;
  cfg.road.grade_knots = {{0.0, 0.0},
                          {2.0, 2.0 * kDegToRad},
                          {7.0, 2.0 * kDegToRad},
                          {10.0, -1.0 * kDegToRad},
                          {15.0, -1.0 * kDegToRad}};
  cfg.road.rolling_knots = {{0.0, 0.06}, {5.0, 0.08}};
  // the lead HV holds 18 m/s, brakes hard around 3.5 s and recovers to 20
  cfg.leader.knots = {{0.0, 18.0}, {3.4, 18.0}, {4.2, 13.0},
                      {4.8, 13.0}, {6.0, 20.0}, {15.0, 20.0}};
  return cfg;
}

void validate_scenario(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& msg) { throw scenario_error(msg); };
  const auto& c = cfg.ctrl;
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    fail("controller.alpha must be in (0,1)");
  }
  if (!(c.c_v > 0.0 && c.c_v <= 1.0)) fail("controller.c_v must be in (0,1]");
  if (!(c.confidence_c > 0.0)) fail("controller.c must be positive");
  if (!(c.lambda_zeta > c.lambda_iota && c.lambda_iota > 0.0)) {
    fail("controller weights must satisfy lambda_zeta > lambda_iota > 0");
  }
  if (!(c.d1 < c.d2)) fail("controller.d1 must be below controller.d2");
  if (cfg.learner.budget.capacity < 2) fail("learner.budget must be >= 2");
  if (cfg.learner.sigma_noise < 0.0) fail("learner.sigma_noise must be >= 0");
  const auto& p = cfg.learner.init_params;
  if (!(p.theta_min > 0.0 && p.theta_min < p.theta_max)) {
    fail("learner theta bounds invalid");
  }
  if (!(p.l_min > 0.0 && p.l_min < p.l_max)) fail("learner l bounds invalid");
  if (!p.within_bounds()) fail("learner initial hyperparameters out of bounds");
  if (!(cfg.duration > 0.0)) fail("sim.duration must be positive");
  if (!(cfg.ts > 0.0)) fail("sim.ts must be positive");
  const double phi_lim = 10.0 * kDegToRad + 1e-12;
  for (const auto& [t, phi] : cfg.road.grade_knots) {
    if (std::abs(phi) > phi_lim) fail("road grade exceeds the 10 degree bound");
  }
  for (const auto& [t, v] : cfg.leader.knots) {
    if (v < 0.0 || v > cfg.hv_params.v_max) {
      fail("leader velocity outside [0, v_max]");
    }
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  ScenarioConfig cfg = ScenarioConfig::defaults();
  if (trimmed.empty()) {
    validate_scenario(cfg);
    return cfg;
  }

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw scenario_error(std::string("scenario parse error: ") + e.what());
  }
  if (!root.is_object()) throw scenario_error("scenario root must be an object");
  reject_unknown(root, "<root>",
                 {"initial", "road", "leader", "controller", "learner",
                  "vehicle", "sim"});

  try {
    if (root.contains("initial")) {
      const json& sec = root["initial"];
      reject_unknown(sec, "initial", {"ev", "hvs"});
      if (sec.contains("ev")) {
        cfg.ev0 = {sec["ev"].at(0).get<double>(),
                   sec["ev"].at(1).get<double>()};
      }
      if (sec.contains("hvs")) {
        const json& hvs = sec["hvs"];
        if (!hvs.is_array() || hvs.size() != 4) {
          throw scenario_error("initial.hvs must list exactly 4 vehicles");
        }
        for (int i = 0; i < 4; ++i) {
          cfg.hv0[i] = {hvs[i].at(0).get<double>(),
                        hvs[i].at(1).get<double>()};
        }
      }
    }
    if (root.contains("road")) {
      const json& sec = root["road"];
      reject_unknown(sec, "road", {"grade_deg", "rolling"});
      if (sec.contains("grade_deg")) {
        cfg.road.grade_knots =
            knots_from_json(sec["grade_deg"], "road.grade_deg", kDegToRad);
      }
      if (sec.contains("rolling")) {
        cfg.road.rolling_knots = knots_from_json(sec["rolling"], "road.rolling");
      }
    }
    if (root.contains("leader")) {
      const json& sec = root["leader"];
      reject_unknown(sec, "leader", {"velocity"});
      if (sec.contains("velocity")) {
        cfg.leader.knots = knots_from_json(sec["velocity"], "leader.velocity");
      }
    }
    if (root.contains("controller")) {
      const json& sec = root["controller"];
      reject_unknown(sec, "controller",
                     {"alpha", "c", "c_v", "lambda_zeta", "lambda_iota", "d1",
                      "d2", "v_d", "margin"});
      maybe(sec, "alpha", cfg.ctrl.alpha);
      maybe(sec, "c", cfg.ctrl.confidence_c);
      maybe(sec, "c_v", cfg.ctrl.c_v);
      maybe(sec, "lambda_zeta", cfg.ctrl.lambda_zeta);
      maybe(sec, "lambda_iota", cfg.ctrl.lambda_iota);
      maybe(sec, "d1", cfg.ctrl.d1);
      maybe(sec, "d2", cfg.ctrl.d2);
      maybe(sec, "v_d", cfg.ctrl.v_d);
      maybe(sec, "margin", cfg.ctrl.margin);
    }
    if (root.contains("learner")) {
      const json& sec = root["learner"];
      reject_unknown(sec, "learner",
                     {"budget", "sigma_noise", "reoptimize_period", "theta_0",
                      "l_0", "theta_min", "theta_max", "l_min", "l_max"});
      maybe(sec, "budget", cfg.learner.budget.capacity);
      maybe(sec, "sigma_noise", cfg.learner.sigma_noise);
      maybe(sec, "reoptimize_period", cfg.learner.reoptimize_period);
      maybe(sec, "theta_0", cfg.learner.init_params.theta_f);
      maybe(sec, "l_0", cfg.learner.init_params.l_f);
      maybe(sec, "theta_min", cfg.learner.init_params.theta_min);
      maybe(sec, "theta_max", cfg.learner.init_params.theta_max);
      maybe(sec, "l_min", cfg.learner.init_params.l_min);
      maybe(sec, "l_max", cfg.learner.init_params.l_max);
    }
    if (root.contains("vehicle")) {
      const json& sec = root["vehicle"];
      reject_unknown(sec, "vehicle",
                     {"mass", "k_v", "gravity", "u_frac", "hv_gain_range",
                      "hv_gain_rel", "hv_length", "d_min", "d_max",
                      "hv_v_max"});
      maybe(sec, "mass", cfg.ev_params.mass);
      maybe(sec, "k_v", cfg.ev_params.k_v);
      maybe(sec, "gravity", cfg.ev_params.gravity);
      maybe(sec, "u_frac", cfg.ev_params.u_frac);
      maybe(sec, "hv_gain_range", cfg.hv_params.gain_range);
      maybe(sec, "hv_gain_rel", cfg.hv_params.gain_rel);
      maybe(sec, "hv_length", cfg.hv_params.length);
      maybe(sec, "d_min", cfg.hv_params.d_min);
      maybe(sec, "d_max", cfg.hv_params.d_max);
      maybe(sec, "hv_v_max", cfg.hv_params.v_max);
    }
    if (root.contains("sim")) {
      const json& sec = root["sim"];
      reject_unknown(sec, "sim",
                     {"duration", "ts", "seed", "disturbances", "noise",
                      "learning"});
      maybe(sec, "duration", cfg.duration);
      maybe(sec, "ts", cfg.ts);
      maybe(sec, "seed", cfg.seed);
      maybe(sec, "disturbances", cfg.disturbances_enabled);
      maybe(sec, "noise", cfg.noise_enabled);
      maybe(sec, "learning", cfg.learning_enabled);
    }
  } catch (const json::exception& e) {
    throw scenario_error(std::string("scenario field error: ") + e.what());
  }

  validate_scenario(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scenario_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  json root;
  root["initial"]["ev"] = {cfg.ev0.p, cfg.ev0.v};
  root["initial"]["hvs"] = json::array();
  for (const auto& hv : cfg.hv0) root["initial"]["hvs"].push_back({hv.s, hv.v});
  root["road"]["grade_deg"] =
      knots_to_json(cfg.road.grade_knots, 1.0 / kDegToRad);
  root["road"]["rolling"] = knots_to_json(cfg.road.rolling_knots);
  root["leader"]["velocity"] = knots_to_json(cfg.leader.knots);
  root["controller"] = {{"alpha", cfg.ctrl.alpha},
                        {"c", cfg.ctrl.confidence_c},
                        {"c_v", cfg.ctrl.c_v},
                        {"lambda_zeta", cfg.ctrl.lambda_zeta},
                        {"lambda_iota", cfg.ctrl.lambda_iota},
                        {"d1", cfg.ctrl.d1},
                        {"d2", cfg.ctrl.d2},
                        {"v_d", cfg.ctrl.v_d},
                        {"margin", cfg.ctrl.margin}};
  root["learner"] = {{"budget", cfg.learner.budget.capacity},
                     {"sigma_noise", cfg.learner.sigma_noise},
                     {"reoptimize_period", cfg.learner.reoptimize_period},
                     {"theta_0", cfg.learner.init_params.theta_f},
                     {"l_0", cfg.learner.init_params.l_f},
                     {"theta_min", cfg.learner.init_params.theta_min},
                     {"theta_max", cfg.learner.init_params.theta_max},
                     {"l_min", cfg.learner.init_params.l_min},
                     {"l_max", cfg.learner.init_params.l_max}};
  root["vehicle"] = {{"mass", cfg.ev_params.mass},
                     {"k_v", cfg.ev_params.k_v},
                     {"gravity", cfg.ev_params.gravity},
                     {"u_frac", cfg.ev_params.u_frac},
                     {"hv_gain_range", cfg.hv_params.gain_range},
                     {"hv_gain_rel", cfg.hv_params.gain_rel},
                     {"hv_length", cfg.hv_params.length},
                     {"d_min", cfg.hv_params.d_min},
                     {"d_max", cfg.hv_params.d_max},
                     {"hv_v_max", cfg.hv_params.v_max}};
  root["sim"] = {{"duration", cfg.duration},
                 {"ts", cfg.ts},
                 {"seed", cfg.seed},
                 {"disturbances", cfg.disturbances_enabled},
                 {"noise", cfg.noise_enabled},
                 {"learning", cfg.learning_enabled}};
  return root.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw scenario_error("cannot write scenario file: " + path);
  out << serialize_scenario(cfg);
}

}  // namespace failop
