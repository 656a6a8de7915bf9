#include "ates/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <memory>
#include <stdexcept>
#include <string>

namespace ates {

std::vector<double> block_inputs(int steps, double u_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(4, 12);
  std::uniform_real_distribution<double> magnitude(0.3, 1.0);
  static constexpr int kCycle[] = {1, 0, -1, 0};

  std::vector<double> u;
  u.reserve(steps);
  int phase = 0;
  while (static_cast<int>(u.size()) < steps) {
    const int sign = kCycle[phase];
    const int len = length(rng);
    for (int i = 0; i < len && static_cast<int>(u.size()) < steps; ++i)
      u.push_back(sign == 0 ? 0.0 : sign * magnitude(rng) * u_max);
    phase = (phase + 1) % 4;
  }
  return u;
}

TruthRun generate_truth(const ScenarioConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("steps: must be >= 1");
  if (cfg.noise.measurement_std < 0.0 || cfg.noise.process_bound < 0.0)
    throw std::invalid_argument("noise: scales must be nonnegative");

  TruthRun run;
  run.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  const SurrogateModel truth = SurrogateModel::perturbed(cfg, rng);
  run.field = truth.conductivity();
  run.u = block_inputs(cfg.steps, cfg.u_max, rng);
  run.t_r.reserve(cfg.steps);
  for (double u : run.u) run.t_r.push_back(cfg.return_temperature(u));

  const StateConstraints bounds = state_bounds(cfg);
  const OutputModel output = OutputModel::borehole_sensors(cfg.layout());
  std::uniform_real_distribution<double> process(-cfg.noise.process_bound, cfg.noise.process_bound);
  std::normal_distribution<double> measurement(0.0, 1.0);

  Vector x = cfg.layout().uniform(cfg.aquifer.ambient_temperature);
  for (int k = 0; k < cfg.steps; ++k) {
    Vector y = output.apply(x);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += cfg.noise.measurement_std * measurement(rng);
    run.states.push_back(x);
    run.measurements.push_back(std::move(y));

    Vector next = truth.step(x, run.u[k], run.t_r[k]);
    for (Eigen::Index i = 0; i < next.size(); ++i) next[i] += process(rng);
    x = bounds.clamp(next);
  }
  return run;
}

std::vector<Vector> accuracy_state_pool(const ScenarioConfig& cfg, int steps, int burn_in,
                                        std::uint64_t seed) {
  const SurrogateModel nominal(cfg);
  const StateConstraints bounds = state_bounds(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> flow(0.0, cfg.u_max);

  Vector x = cfg.layout().uniform(cfg.aquifer.ambient_temperature);
  std::vector<Vector> pool;
  for (int k = 0; k < steps; ++k) {
    const double magnitude = flow(rng);
    const int phase = (k / 50) % 3;
    const double u = phase == 0 ? -magnitude : (phase == 1 ? 0.0 : magnitude);
    x = bounds.clamp(nominal.step(x, u, cfg.return_temperature(u)));
    if (k >= burn_in) pool.push_back(x);
  }
  return pool;
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Mhe: return "mhe";
    case EstimatorKind::Ukf: return "ukf";
    case EstimatorKind::LtvKf: return "ltvkf";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(std::string_view name) {
  if (name == "mhe") return EstimatorKind::Mhe;
  if (name == "ukf") return EstimatorKind::Ukf;
  if (name == "ltvkf") return EstimatorKind::LtvKf;
  throw std::invalid_argument("estimator: unknown name " + std::string(name));
}

int EstimatorTrace::violation_steps() const {
  return static_cast<int>(
      std::count_if(rows.begin(), rows.end(), [](const EstimateRow& r) { return r.violations > 0; }));
}

int EstimatorTrace::violation_entries() const {
  int total = 0;
  for (const auto& r : rows) total += r.violations;
  return total;
}

double EstimatorTrace::mean_band_width(int from, int to) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.k < from || r.k >= to || !r.estimate) continue;
    sum += r.err_q975 - r.err_q025;
    ++count;
  }
  return count > 0 ? sum / count : std::nan("");
}

double EstimatorTrace::max_abs_mean_error(int from) const {
  double worst = 0.0;
  for (const auto& r : rows)
    if (r.k >= from && r.estimate) worst = std::max(worst, std::abs(r.err_mean));
  return worst;
}

double EstimatorTrace::rms_error(int k, const TruthRun& run) const {
  const EstimateRow& row = rows.at(k);
  if (!row.estimate) return std::nan("");
  const Vector e = *row.estimate - run.states.at(k);
  return std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
}

const EstimatorTrace& ComparisonReport::trace(EstimatorKind kind) const {
  for (const auto& t : traces)
    if (t.kind == kind) return t;
  throw std::out_of_range("report: no trace for " + std::string(to_string(kind)));
}

void score_estimate(EstimateRow& row, const Vector& estimate, const Vector& truth,
                    const StateConstraints& bounds) {
  const Vector e = estimate - truth;
  const ErrorStats st = error_stats(std::vector<double>(e.data(), e.data() + e.size()));
  row.estimate = estimate;
  row.err_mean = st.mean;
  row.err_max = st.max_abs;
  row.err_q025 = st.q025;
  row.err_q975 = st.q975;
  row.violations = bounds.violations(estimate, 1e-9);
}

EstimatorTrace run_estimator(EstimatorKind kind, const TruthRun& run, const ScenarioConfig& cfg) {
  auto nominal = std::make_shared<const SurrogateModel>(cfg);
  const StateConstraints bounds = state_bounds(cfg);
  const StateLayout layout = cfg.layout();
  const OutputModel output = OutputModel::borehole_sensors(layout);

  EstimatorTrace trace;
  trace.kind = kind;
  trace.rows.reserve(run.steps());

  if (kind == EstimatorKind::Mhe) {
    MovingHorizonEstimator mhe(MheSettings::from_config(cfg),
                               ModeSource::exact(nominal, cfg.u_max));
    for (int k = 0; k < run.steps(); ++k) {
      const MheResult res = mhe.update(run.record(k));
      EstimateRow row;
      row.k = k;
      row.status = std::string(to_string(res.status));
      if (res.estimate) {
        score_estimate(row, *res.estimate, run.states[k], bounds);
        row.qp_iterations = res.diagnostics.qp_iterations;
        row.qp_residual = res.diagnostics.qp_residual;
      }
      trace.rows.push_back(std::move(row));
    }
    return trace;
  }

  const GaussianBelief initial =
      GaussianBelief::isotropic(layout.uniform(cfg.initial_guess), 0.4);
  const NoiseSpec noise = NoiseSpec::from_settings(cfg.noise);
  std::unique_ptr<KalmanFilterBase> filter;
  if (kind == EstimatorKind::Ukf)
    filter = std::make_unique<UnscentedKalmanFilter>(
        nominal, initial, noise, output,
        UnscentedParams{cfg.ukf_alpha, cfg.ukf_beta, cfg.ukf_kappa});
  else
    filter = std::make_unique<LtvKalmanFilter>(nominal, cfg.u_max, initial, noise, output);

  for (int k = 0; k < run.steps(); ++k) {
    const FilterStatus status = filter->update(run.record(k));
    EstimateRow row;
    row.k = k;
    row.status = std::string(to_string(status));
    score_estimate(row, filter->belief().mean, run.states[k], bounds);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

ComparisonReport compare_estimators(const TruthRun& run, const ScenarioConfig& cfg) {
  std::vector<std::future<EstimatorTrace>> tasks;
  for (EstimatorKind kind : {EstimatorKind::Mhe, EstimatorKind::Ukf, EstimatorKind::LtvKf})
    tasks.push_back(std::async(std::launch::async, [&run, &cfg, kind] {
      return run_estimator(kind, run, cfg);
    }));
  ComparisonReport report;
  for (auto& t : tasks) report.traces.push_back(t.get());
  return report;
}

}  // namespace ates
