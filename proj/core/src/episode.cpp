#include "failop/episode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace failop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<size_t>(std::max(
      0.0, std::ceil(p / 100.0 * static_cast<double>(v.size())) - 1.0));
  return v[std::min(idx, v.size() - 1)];
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EpisodeResult run_episode(const ScenarioConfig& cfg) {
  validate_scenario(cfg);
  const double ts = cfg.ts;
  const long steps = std::lround(cfg.duration / ts);
  const double mass = cfg.ev_params.mass;

  WorldState world;
  world.ev = cfg.ev0;
  world.hvs = cfg.hv0;

  std::mt19937_64 rng(cfg.seed);
  DisturbanceLearner learner(cfg.learner);

  const AffineBarrier lower{Eigen::Vector4d(-1, 0, 1, 0).eval(), -cfg.ctrl.d1,
                            cfg.ctrl.alpha};
  const AffineBarrier upper{Eigen::Vector4d(1, 0, -1, 0).eval(), cfg.ctrl.d2,
                            cfg.ctrl.alpha};
  const VelocityClf clf{cfg.ctrl.v_d, cfg.ctrl.c_v};
  // one-step effect of u on the monitored channels; position picks up the
  // within-step velocity change so the headway constraints can act on u
  const Eigen::Vector4d u_channel(ts * ts / mass, ts / mass, 0.0, 0.0);

  EpisodeResult result;
  result.trace.reserve(steps);
  double u_prev = 0.0;
  bool crashed = false;

  for (long k = 0; k < steps && !crashed; ++k) {
    TraceRecord rec;
    rec.step = k;
    rec.t = world.t;
    rec.ev_p = world.ev.p;
    rec.ev_v = world.ev.v;
    for (int i = 0; i < 4; ++i) {
      rec.hv_s[i] = world.hvs[i].s;
      rec.hv_v[i] = world.hvs[i].v;
    }

    const Eigen::Vector4d x = joint_state(world);

    const auto t_inf = Clock::now();
    DisturbanceEstimate est;
    if (cfg.learning_enabled) {
      est = learner.estimate(x);
    } else {
      est.mu = Eigen::Vector4d::Zero();
      est.sigma = Eigen::Vector4d::Zero();
    }
    rec.infer_time = seconds_since(t_inf);

    // nominal one-step map over the monitored channels [p, v, s3, v3];
    // the EV's resistance terms are withheld from the controller, the HV3
    // map uses the known car-following gains
    const HvState hv2 = world.hvs[1];
    const auto nominal = [&, hv2](const Eigen::VectorXd& xs,
                                  double u) -> Eigen::VectorXd {
      const double u3 =
          hv_control(HvState{xs(2), xs(3)}, hv2, cfg.hv_params);
      Eigen::Vector4d n;
      n << xs(0) + ts * xs(1) + ts * ts * u / mass, xs(1) + ts * u / mass,
          xs(2) + ts * xs(3), xs(3) + ts * u3 / mass;
      return n;
    };
    const Eigen::Vector4d nominal_next = nominal(x, 0.0);

    ControlProblem prob;
    prob.cbf_rows = {
        build_cbf_row(lower, x, nominal_next, u_channel, est,
                      cfg.ctrl.confidence_c, cfg.ctrl.margin),
        build_cbf_row(upper, x, nominal_next, u_channel, est,
                      cfg.ctrl.confidence_c, cfg.ctrl.margin)};
    prob.clf = build_clf_quadratic(clf, world.ev.v, nominal_next(1),
                                   ts / mass, est.mu(1), est.sigma(1),
                                   cfg.ctrl.confidence_c);
    prob.u_min = cfg.ev_params.u_min();
    prob.u_max = cfg.ev_params.u_max();
    prob.lambda_zeta = cfg.ctrl.lambda_zeta;
    prob.lambda_iota = cfg.ctrl.lambda_iota;

    const ControlSolution sol = solve(prob, u_prev);
    u_prev = sol.u_star;

    StepOutcome outcome = world_step(
        world, sol.u_star, cfg.road, cfg.leader, rng, cfg.learner.sigma_noise,
        ts, cfg.ev_params, cfg.hv_params, cfg.disturbances_enabled,
        cfg.noise_enabled);

    const auto t_learn = Clock::now();
    if (cfg.learning_enabled) {
      if (auto obs = observe(x, sol.u_star, outcome.measured, nominal, k)) {
        learner.ingest(*obs);
      }
    }
    rec.learn_time = seconds_since(t_learn);

    const double phi = cfg.road.grade(world.t);
    const double k_f = cfg.road.rolling(world.t);
    rec.w_true = {0.0, 0.0, 0.0, 0.0};
    if (cfg.disturbances_enabled) {
      rec.w_true[1] =
          ts * ev_disturbance(world.ev.v, phi, k_f, cfg.ev_params);
      rec.w_true[3] =
          ts * ev_disturbance(world.hvs[2].v, phi, k_f, cfg.ev_params);
    }

    rec.u = sol.u_star;
    rec.zeta = sol.zeta_star;
    rec.iota = sol.iota_star;
    rec.h1 = h_eval(lower, x);
    rec.h2 = h_eval(upper, x);
    rec.lyapunov = v_eval(clf, world.ev.v);
    for (int i = 0; i < 4; ++i) {
      rec.mu[i] = est.mu(i);
      rec.sigma[i] = est.sigma(i);
    }
    rec.eps1 = prob.cbf_rows[0].diagnostics.eps_term;
    rec.eps2 = prob.cbf_rows[1].diagnostics.eps_term;
    rec.solve_time = sol.solve_time;
    rec.solver_status = static_cast<int>(sol.status);
    result.trace.push_back(rec);

    crashed = outcome.crashed;
    world = outcome.world;
  }

  result.metrics = compute_metrics(result.trace, cfg.ctrl.v_d);
  return result;
}

namespace {

const char* kCsvHeader =
    "step,t,ev_p,ev_v,hv1_s,hv1_v,hv2_s,hv2_v,hv3_s,hv3_v,hv4_s,hv4_v,"
    "u,zeta,iota,h1,h2,V,mu_p,mu_v,mu_s3,mu_v3,sigma_p,sigma_v,sigma_s3,"
    "sigma_v3,w_true_p,w_true_v,w_true_s3,w_true_v3,eps1,eps2,"
    "solve_time,learn_time,infer_time,status";

void append_fields(std::string& line, const TraceRecord& r) {
  char buf[32];
  auto add = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    line += buf;
  };
  line += std::to_string(r.step);
  add(r.t);
  add(r.ev_p);
  add(r.ev_v);
  for (int i = 0; i < 4; ++i) {
    add(r.hv_s[i]);
    add(r.hv_v[i]);
  }
  add(r.u);
  add(r.zeta);
  add(r.iota);
  add(r.h1);
  add(r.h2);
  add(r.lyapunov);
  for (int i = 0; i < 4; ++i) add(r.mu[i]);
  for (int i = 0; i < 4; ++i) add(r.sigma[i]);
  for (int i = 0; i < 4; ++i) add(r.w_true[i]);
  add(r.eps1);
  add(r.eps2);
  add(r.solve_time);
  add(r.learn_time);
  add(r.infer_time);
  line += "," + std::to_string(r.solver_status);
}

}  // namespace

void emit_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& os) {
  os << kCsvHeader << "\n";
  std::string line;
  for (const auto& r : trace) {
    line.clear();
    append_fields(line, r);
    os << line << "\n";
  }
}

void emit_trace_jsonl(const std::vector<TraceRecord>& trace,
                      std::ostream& os) {
  for (const auto& r : trace) {
    nlohmann::json row = {
        {"step", r.step},       {"t", r.t},
        {"ev_p", r.ev_p},       {"ev_v", r.ev_v},
        {"hv_s", r.hv_s},       {"hv_v", r.hv_v},
        {"u", r.u},             {"zeta", r.zeta},
        {"iota", r.iota},       {"h1", r.h1},
        {"h2", r.h2},           {"V", r.lyapunov},
        {"mu", r.mu},           {"sigma", r.sigma},
        {"w_true", r.w_true},   {"eps1", r.eps1},
        {"eps2", r.eps2},       {"solve_time", r.solve_time},
        {"learn_time", r.learn_time},
        {"infer_time", r.infer_time},
        {"status", r.solver_status}};
    os << row.dump() << "\n";
  }
}

std::vector<TraceRecord> load_trace_csv(std::istream& is) {
  std::vector<TraceRecord> trace;
  std::string line;
  if (!std::getline(is, line)) return trace;
  // strip a possible trailing \r before comparing
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw std::runtime_error("load_trace_csv: unexpected header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 36) {
      throw std::runtime_error("load_trace_csv: bad field count");
    }
    TraceRecord r;
    size_t i = 0;
    auto next = [&]() { return std::stod(fields.at(i++)); };
    r.step = std::stol(fields.at(i++));
    r.t = next();
    r.ev_p = next();
    r.ev_v = next();
    for (int j = 0; j < 4; ++j) {
      r.hv_s[j] = next();
      r.hv_v[j] = next();
    }
    r.u = next();
    r.zeta = next();
    r.iota = next();
    r.h1 = next();
    r.h2 = next();
    r.lyapunov = next();
    for (int j = 0; j < 4; ++j) r.mu[j] = next();
    for (int j = 0; j < 4; ++j) r.sigma[j] = next();
    for (int j = 0; j < 4; ++j) r.w_true[j] = next();
    r.eps1 = next();
    r.eps2 = next();
    r.solve_time = next();
    r.learn_time = next();
    r.infer_time = next();
    r.solver_status = std::stoi(fields.at(i++));
    trace.push_back(r);
  }
  return trace;
}

std::vector<std::pair<double, double>> leader_transient_windows(
    const std::vector<TraceRecord>& trace, double tail) {
  std::vector<std::pair<double, double>> windows;
  for (size_t i = 1; i < trace.size(); ++i) {
    if (std::abs(trace[i].hv_v[0] - trace[i - 1].hv_v[0]) > 1e-12) {
      const double start = trace[i - 1].t;
      const double end = trace[i].t + tail;
      if (!windows.empty() && start <= windows.back().second) {
        windows.back().second = std::max(windows.back().second, end);
      } else {
        windows.emplace_back(start, end);
      }
    }
  }
  return windows;
}

EpisodeMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                               double v_d) {
  if (trace.empty()) {
    throw std::invalid_argument("compute_metrics: empty trace");
  }
  EpisodeMetrics m;
  const size_t n = trace.size();

  auto recovery = [&](auto h_of) {
    // earliest index from which h is nonnegative at entry and never drops
    // below -1e-6 afterwards
    double result = kNeverRecovered;
    bool suffix_ok = true;
    for (size_t i = n; i-- > 0;) {
      const double h = h_of(trace[i]);
      if (h < -1e-6) suffix_ok = false;
      if (suffix_ok && h >= 0.0) result = trace[i].t;
    }
    return result;
  };
  m.recovery_time_h1 = recovery([](const TraceRecord& r) { return r.h1; });
  m.recovery_time_h2 = recovery([](const TraceRecord& r) { return r.h2; });

  m.min_headway = std::numeric_limits<double>::infinity();
  m.max_headway = -std::numeric_limits<double>::infinity();
  for (const auto& r : trace) {
    const double gap = r.hv_s[2] - r.ev_p;
    m.min_headway = std::min(m.min_headway, gap);
    m.max_headway = std::max(m.max_headway, gap);
  }

  // first t from which |v - v_d| <= 0.5 holds continuously for >= 2 s
  const double hold = 2.0;
  for (size_t i = 0; i < n; ++i) {
    if (std::abs(trace[i].ev_v - v_d) > 0.5) continue;
    size_t j = i;
    while (j + 1 < n && std::abs(trace[j + 1].ev_v - v_d) <= 0.5) ++j;
    if (trace[j].t - trace[i].t >= hold) {
      m.settling_time = trace[i].t;
      break;
    }
    i = j;
  }

  std::vector<double> solve_t, learn_t, infer_t, tick_t;
  solve_t.reserve(n);
  for (const auto& r : trace) {
    solve_t.push_back(r.solve_time);
    learn_t.push_back(r.learn_time);
    infer_t.push_back(r.infer_time);
    tick_t.push_back(r.solve_time + r.learn_time + r.infer_time);
    if (r.solver_status == 2) ++m.degraded_ticks;
  }
  m.mean_solve = mean_of(solve_t);
  m.p99_solve = percentile(solve_t, 99.0);
  m.mean_learn = mean_of(learn_t);
  m.p99_learn = percentile(learn_t, 99.0);
  m.mean_infer = mean_of(infer_t);
  m.p99_infer = percentile(infer_t, 99.0);
  m.p99_tick = percentile(tick_t, 99.0);

  // crash shows up as a collapsed inter-vehicle gap on the final record
  const auto& last = trace.back();
  const double len = 2.91;
  const double gaps[4] = {last.hv_s[0] - last.hv_s[1] - len,
                          last.hv_s[1] - last.hv_s[2] - len,
                          last.hv_s[2] - last.ev_p - len,
                          last.ev_p - last.hv_s[3] - len};
  for (double g : gaps) {
    if (g <= 0.0) m.crashed = true;
  }
  return m;
}

BenchReport bench(const ScenarioConfig& cfg, int repetitions) {
  if (repetitions < 1) {
    throw std::invalid_argument("bench: repetitions must be >= 1");
  }
  std::vector<double> solve_t, learn_t, infer_t, tick_t;
  for (int rep = 0; rep < repetitions; ++rep) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(rep);
    EpisodeResult res = run_episode(run_cfg);
    for (const auto& r : res.trace) {
      solve_t.push_back(r.solve_time);
      learn_t.push_back(r.learn_time);
      infer_t.push_back(r.infer_time);
      tick_t.push_back(r.solve_time + r.learn_time + r.infer_time);
    }
  }
  auto stats = [](const std::vector<double>& v) {
    return PhaseStats{mean_of(v), percentile(v, 50.0), percentile(v, 99.0)};
  };
  BenchReport report;
  report.repetitions = repetitions;
  report.solve = stats(solve_t);
  report.learn = stats(learn_t);
  report.infer = stats(infer_t);
  report.tick = stats(tick_t);
  return report;
}

std::string serialize_bench_report(const BenchReport& report) {
  std::ostringstream os;
  os << nlohmann::json{{"repetitions", report.repetitions}}.dump() << "\n";
  auto line = [&](const char* phase, const PhaseStats& s) {
    os << nlohmann::json{{"phase", phase},
                         {"mean", s.mean},
                         {"p50", s.p50},
                         {"p99", s.p99}}
              .dump()
       << "\n";
  };
  line("solve", report.solve);
  line("learn", report.learn);
  line("infer", report.infer);
  line("tick", report.tick);
  return os.str();
}

BenchReport parse_bench_report(const std::string& text) {
  BenchReport report;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json row = nlohmann::json::parse(line);
    if (row.contains("repetitions")) {
      report.repetitions = row["repetitions"].get<int>();
      continue;
    }
    PhaseStats s{row.at("mean").get<double>(), row.at("p50").get<double>(),
                 row.at("p99").get<double>()};
    const std::string phase = row.at("phase").get<std::string>();
    if (phase == "solve") report.solve = s;
    else if (phase == "learn") report.learn = s;
    else if (phase == "infer") report.infer = s;
    else if (phase == "tick") report.tick = s;
  }
  return report;
}

}  // namespace failop
