#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "failop/episode.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCrash = 4;

failop::ScenarioConfig load_or_default(const std::string& path) {
  if (path.empty()) return failop::ScenarioConfig::defaults();
  return failop::load_scenario(path);
}

void apply_overrides(failop::ScenarioConfig& cfg,
                     const std::optional<std::uint64_t>& seed,
                     const std::optional<double>& duration) {
  if (seed) cfg.seed = *seed;
  if (duration) cfg.duration = *duration;
}

nlohmann::json metrics_to_json(const failop::EpisodeMetrics& m) {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return nullptr;
    return v;
  };
  return {{"recovery_time_h1", finite_or_null(m.recovery_time_h1)},
          {"recovery_time_h2", finite_or_null(m.recovery_time_h2)},
          {"min_headway", m.min_headway},
          {"max_headway", m.max_headway},
          {"settling_time", finite_or_null(m.settling_time)},
          {"mean_solve", m.mean_solve},
          {"p99_solve", m.p99_solve},
          {"mean_learn", m.mean_learn},
          {"p99_learn", m.p99_learn},
          {"mean_infer", m.mean_infer},
          {"p99_infer", m.p99_infer},
          {"p99_tick", m.p99_tick},
          {"crashed", m.crashed},
          {"degraded_ticks", m.degraded_ticks}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fail-operational connected cruise control simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, trace_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  int repetitions = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_path, "Scenario file (JSON)");
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--duration", duration, "Override the duration (s)");
  };

  CLI::App* run = app.add_subcommand("run", "Run one closed-loop episode");
  add_common(run);
  run->add_option("--out", out_path, "Trace output path (default stdout)");
  run->add_option("--format", format, "Trace format: csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Timing benchmark over repeated episodes");
  add_common(bench_cmd);
  bench_cmd->add_option("--reps", repetitions, "Number of repetitions")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", out_path, "Report output path");

  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "Compute metrics from a trace CSV");
  metrics_cmd->add_option("--trace", trace_path, "Trace CSV path")
      ->required();

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Validate a scenario file");
  validate_cmd->add_option("--scenario", scenario_path, "Scenario file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      failop::ScenarioConfig cfg = load_or_default(scenario_path);
      apply_overrides(cfg, seed, duration);
      failop::EpisodeResult res = failop::run_episode(cfg);

      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
          std::cerr << "cannot open output file: " << out_path << "\n";
          return kExitIo;
        }
        os = &file;
      }
      if (format == "csv") {
        failop::emit_trace_csv(res.trace, *os);
      } else {
        failop::emit_trace_jsonl(res.trace, *os);
      }
      if (os == &file) {
        file.close();
        if (!file) {
          std::cerr << "write failed: " << out_path << "\n";
          return kExitIo;
        }
      }
      std::cerr << metrics_to_json(res.metrics).dump(2) << "\n";
      return res.metrics.crashed ? kExitCrash : kExitOk;
    }

    if (bench_cmd->parsed()) {
      failop::ScenarioConfig cfg = load_or_default(scenario_path);
      apply_overrides(cfg, seed, duration);
      const failop::BenchReport report = failop::bench(cfg, repetitions);
      const std::string text = failop::serialize_bench_report(report);
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream file(out_path);
        if (!file) {
          std::cerr << "cannot open output file: " << out_path << "\n";
          return kExitIo;
        }
        file << text;
      }
      return kExitOk;
    }

    if (metrics_cmd->parsed()) {
      std::ifstream in(trace_path);
      if (!in) {
        std::cerr << "cannot open trace file: " << trace_path << "\n";
        return kExitIo;
      }
      const auto trace = failop::load_trace_csv(in);
      if (trace.empty()) {
        std::cerr << "trace is empty\n";
        return kExitIo;
      }
      std::cout << metrics_to_json(failop::compute_metrics(trace)).dump(2)
                << "\n";
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      failop::load_scenario(scenario_path);
      std::cout << "scenario OK\n";
      return kExitOk;
    }
  } catch (const failop::scenario_error& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
