#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "failop/qp_controller.hpp"
#include "failop/scenario.hpp"

namespace failop {

struct TraceRecord {
  long step = 0;
  double t = 0.0;
  double ev_p = 0.0, ev_v = 0.0;
  std::array<double, 4> hv_s{}, hv_v{};
  double u = 0.0, zeta = 0.0, iota = 0.0;
  double h1 = 0.0, h2 = 0.0, lyapunov = 0.0;
  std::array<double, 4> mu{}, sigma{};
  std::array<double, 4> w_true{};  // realized per-channel disturbance
  double eps1 = 0.0, eps2 = 0.0;
  double solve_time = 0.0, learn_time = 0.0, infer_time = 0.0;
  int solver_status = 0;  // SolveStatus as int
};

constexpr double kNeverRecovered = std::numeric_limits<double>::infinity();

struct EpisodeMetrics {
  double recovery_time_h1 = kNeverRecovered;
  double recovery_time_h2 = kNeverRecovered;
  double min_headway = 0.0;
  double max_headway = 0.0;
  double settling_time = kNeverRecovered;  // |v - v_d| <= 0.5 for >= 2 s
  double mean_solve = 0.0, p99_solve = 0.0;
  double mean_learn = 0.0, p99_learn = 0.0;
  double mean_infer = 0.0, p99_infer = 0.0;
  double p99_tick = 0.0;  // solve + learn + infer
  bool crashed = false;
  long degraded_ticks = 0;
};

struct EpisodeResult {
  std::vector<TraceRecord> trace;
  EpisodeMetrics metrics;
};

EpisodeResult run_episode(const ScenarioConfig& cfg);

void emit_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& os);
void emit_trace_jsonl(const std::vector<TraceRecord>& trace,
                      std::ostream& os);
std::vector<TraceRecord> load_trace_csv(std::istream& is);

/// Pure function of the trace. v_d mirrors the scenario target speed used
/// for the settling metric.
EpisodeMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                               double v_d = 20.0);

/// Time windows [start, end) during which the leader's commanded velocity
/// is changing, padded by `tail` seconds; headway envelope checks exclude
/// these leader-induced transients.
std::vector<std::pair<double, double>> leader_transient_windows(
    const std::vector<TraceRecord>& trace, double tail = 2.0);

struct PhaseStats {
  double mean = 0.0, p50 = 0.0, p99 = 0.0;
};

struct BenchReport {
  int repetitions = 0;
  PhaseStats solve, learn, infer, tick;
};

BenchReport bench(const ScenarioConfig& cfg, int repetitions);

std::string serialize_bench_report(const BenchReport& report);  // JSON lines
BenchReport parse_bench_report(const std::string& text);

}  // namespace failop
