// ates: scenario simulation, estimator comparison, PWA build and MPC
// sensitivity from the command line.

#include "ates/config.hpp"
#include "ates/csv.hpp"
#include "ates/experiments.hpp"
#include "ates/mpc.hpp"
#include "ates/pwa.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace ates;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON (default: built-in parameter set)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("--out-dir", c.out_dir, "Output directory");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? default_scenario() : load_config_file(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_truth(const TruthRun& run, const ScenarioConfig& cfg, const fs::path& dir) {
  auto truth = open_out(dir / "truth.csv");
  write_trajectory_csv(truth, run.states, run.u, run.t_r, cfg.dt, cfg.layout());
  auto meas = open_out(dir / "measurements.csv");
  write_measurements_csv(meas, run.measurements);
}

/// "a:step:b" or a comma separated list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string part;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  while (std::getline(ss, part, sep)) values.push_back(std::stod(part));
  if (sep == ':') {
    if (values.size() != 3) throw CLI::ValidationError("--rhat-grid", "expected start:step:end");
    return uniform_grid(values[0], values[2], values[1]);
  }
  return values;
}

int run_simulate(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const TruthRun run = generate_truth(cfg);
  write_truth(run, cfg, c.out_dir);
  std::cout << "simulated " << run.steps() << " steps (seed " << cfg.seed << ") -> " << c.out_dir
            << '\n';
  return 0;
}

int run_compare(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const TruthRun run = generate_truth(cfg);
  write_truth(run, cfg, c.out_dir);
  const ComparisonReport report = compare_estimators(run, cfg);
  for (const auto& trace : report.traces) {
    auto out = open_out(fs::path(c.out_dir) / ("estimates_" + std::string(to_string(trace.kind)) + ".csv"));
    write_estimates_csv(out, trace, cfg.layout().size());
  }
  auto out = open_out(fs::path(c.out_dir) / "report.csv");
  write_report_csv(out, report);

  const int from = cfg.mhe_horizon + 10;
  for (const auto& trace : report.traces)
    std::cout << to_string(trace.kind) << ": violations " << trace.violation_entries()
              << " (steps " << trace.violation_steps() << "), band " << trace.mean_band_width(from, cfg.steps)
              << " K, max |mean error| after 100 " << trace.max_abs_mean_error(100) << " K\n";
  return 0;
}

int run_estimate(const Common& c, const std::string& trajectory, const std::string& measurements,
                 const std::string& estimator) {
  const ScenarioConfig cfg = load(c);
  const StateLayout layout = cfg.layout();
  Trajectory traj = read_trajectory_csv(read_csv_file(trajectory), layout);

  TruthRun run;
  run.seed = cfg.seed;
  run.u = traj.u;
  run.t_r = traj.t_r;
  traj.states.resize(traj.u.size());
  run.states = traj.states;
  if (measurements.empty()) {
    const OutputModel output = OutputModel::borehole_sensors(layout);
    for (const auto& x : run.states) run.measurements.push_back(output.apply(x));
  } else {
    run.measurements = read_measurements_csv(read_csv_file(measurements));
    if (run.measurements.size() < run.states.size())
      throw std::runtime_error("estimate: fewer measurements than states");
    run.measurements.resize(run.states.size());
  }

  const EstimatorKind kind = estimator_from_string(estimator);
  const EstimatorTrace trace = run_estimator(kind, run, cfg);
  auto out = open_out(fs::path(c.out_dir) / ("estimates_" + estimator + ".csv"));
  write_estimates_csv(out, trace, layout.size());
  std::cout << estimator << ": " << trace.rows.size() << " steps, violations "
            << trace.violation_entries() << '\n';
  return 0;
}

int run_build_pwa(const Common& c, std::optional<int> partitions, int samples) {
  ScenarioConfig cfg = load(c);
  if (partitions) cfg.partitions = *partitions;
  const SurrogateModel nominal(cfg);
  const PwaModel pwa(nominal, cfg.u_max, cfg.partitions);

  auto bundle = open_out(fs::path(c.out_dir) / "pwa_bundle.txt");
  write_pwa_bundle(bundle, pwa);

  AccuracyOptions opts;
  opts.n_samples = samples;
  opts.seed = cfg.seed;
  const AccuracyReport report =
      accuracy_study(pwa, nominal, accuracy_state_pool(cfg), cfg, opts);
  auto acc = open_out(fs::path(c.out_dir) / "pwa_accuracy.csv");
  write_accuracy_csv(acc, report);
  auto part = open_out(fs::path(c.out_dir) / "pwa_partition_accuracy.csv");
  write_partition_accuracy_csv(part, report, pwa.partitions());

  std::cout << "s = " << cfg.partitions << ": max |error| " << report.overall.max_abs
            << " K, std " << report.overall.std << " K over " << report.overall.count
            << " entries\n";
  return 0;
}

int run_sensitivity(const Common& c, const std::string& grid, int reps) {
  const ScenarioConfig cfg = load(c);
  SensitivityOptions opts;
  opts.rhat_grid = grid.empty() ? uniform_grid(cfg.aquifer.borehole_radius, cfg.aquifer.domain_radius, 0.2) : parse_grid(grid);
  opts.repetitions = reps;
  opts.seed = cfg.seed;

  OcpSettings settings;
  settings.q_weight = cfg.mpc_q_weight;
  settings.r_weight = cfg.mpc_r_weight;
  settings.node_budget = cfg.mpc_node_budget;

  const SurrogateModel nominal(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto rows = sensitivity_experiment(charged_state(cfg), nominal, cfg,
                                           default_demand(cfg.mpc_horizon), settings, opts);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto out = open_out(fs::path(c.out_dir) / "sensitivity.csv");
  write_sensitivity_csv(out, rows);
  std::cout << rows.size() << " solve pairs in " << secs << " s; penetration radius "
            << penetration_radius(cfg.mpc_horizon, cfg.dt, cfg.u_max, cfg.aquifer.filter_length,
                                  cfg.aquifer.borehole_radius)
            << " m\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATES moving horizon estimation and MPC experiments"};
  app.require_subcommand(1);

  Common simulate_opts, compare_opts, estimate_opts, pwa_opts, sens_opts;

  auto* simulate = app.add_subcommand("simulate", "Generate a truth run (truth.csv, measurements.csv)");
  add_common(simulate, simulate_opts);

  auto* compare = app.add_subcommand("compare", "Run MHE, UKF and LTV-KF on one truth run");
  add_common(compare, compare_opts);

  auto* estimate = app.add_subcommand("estimate", "Run one estimator on a trajectory CSV");
  add_common(estimate, estimate_opts);
  std::string trajectory, measurements, estimator = "mhe";
  estimate->add_option("--trajectory", trajectory, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--measurements", measurements, "Measurement CSV (default: noise-free outputs)")
      ->check(CLI::ExistingFile);
  estimate->add_option("--estimator", estimator, "mhe, ukf or ltvkf")
      ->check(CLI::IsMember({"mhe", "ukf", "ltvkf"}));

  auto* build_pwa = app.add_subcommand("build-pwa", "Build the PWA model and its accuracy study");
  add_common(build_pwa, pwa_opts);
  std::optional<int> partitions;
  int samples = 5000;
  build_pwa->add_option("--partitions", partitions, "Number of input partitions s");
  build_pwa->add_option("--samples", samples, "Accuracy samples")->check(CLI::PositiveNumber);

  auto* sens = app.add_subcommand("mpc-sensitivity", "OCP solution change under far-field perturbations");
  add_common(sens, sens_opts);
  std::string grid;
  int reps = 20;
  sens->add_option("--rhat-grid", grid, "start:step:end or a comma separated list (m)");
  sens->add_option("--reps", reps, "Repetitions per grid point")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(simulate_opts);
    if (*compare) return run_compare(compare_opts);
    if (*estimate) return run_estimate(estimate_opts, trajectory, measurements, estimator);
    if (*build_pwa) return run_build_pwa(pwa_opts, partitions, samples);
    if (*sens) return run_sensitivity(sens_opts, grid, reps);
  } catch (const ConfigError& e) {
    std::cerr << "config error (" << e.field() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
