#pragma once

#include <string>

#include "failop/disturbance_learner.hpp"
#include "failop/plant_sim.hpp"

namespace failop {

class scenario_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ControllerConfig {
  double alpha = 0.05;
  double confidence_c = 3.0;
  double c_v = 0.8;
  double lambda_zeta = 1e30;
  double lambda_iota = 1e10;
  double d1 = 25.0;   // m, lower headway bound
  double d2 = 100.0;  // m, upper headway bound
  double v_d = 20.0;  // m/s
  double margin = 1e-6;
};

struct ScenarioConfig {
  EvState ev0{25.0, 18.0};
  std::array<HvState, 4> hv0{{{240.0, 18.0},
                              {180.0, 18.0},
                              {120.0, 18.0},
                              {0.0, 18.0}}};
  RoadProfile road;
  LeaderProfile leader;
  ControllerConfig ctrl;
  LearnerConfig learner;
  EvParams ev_params;
  HvParams hv_params;
  double duration = 15.0;  // s
  double ts = 0.02;        // s
  std::uint64_t seed = 0;
  bool disturbances_enabled = true;
  bool noise_enabled = true;
  bool learning_enabled = true;

  static ScenarioConfig defaults();
};

/// Throws scenario_error on parse or validation failure; an empty file
/// yields the default scenario.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text);

std::string serialize_scenario(const ScenarioConfig& cfg);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

void validate_scenario(const ScenarioConfig& cfg);  // throws scenario_error

}  // namespace failop
