// Acceptance checks. One line per criterion:
//   ates_acceptance            run every criterion
//   ates_acceptance <name>...  run the named ones
// Exit status is nonzero if any selected criterion fails.

#include "ates/config.hpp"
#include "ates/experiments.hpp"
#include "ates/mhe.hpp"
#include "ates/mpc.hpp"
#include "ates/pwa.hpp"
#include "ates/qp.hpp"
#include "ates/surrogate.hpp"

#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ates;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vector random_admissible(const StateConstraints& b, std::mt19937_64& rng) {
  Vector x(b.lower.size());
  for (int i = 0; i < x.size(); ++i)
    x[i] = std::uniform_real_distribution<double>(b.lower[i], b.upper[i])(rng);
  return x;
}

Outcome penetration() {
  const double r = penetration_radius(12, 3600.0, 0.0277, 38.0, 0.4);
  return {std::abs(r - 3.19) <= 0.01, "r = " + fmt(r) + " m (target 3.19 +- 0.01)"};
}

Outcome pwa_exactness() {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const PwaModel pwa(nominal, cfg.u_max, cfg.partitions);
  const StateConstraints b = state_bounds(cfg);
  std::mt19937_64 rng(cfg.seed);
  double worst = 0.0;
  for (const Partition& p : pwa.partitions()) {
    const double t_r = cfg.return_temperature(p.center);
    for (int rep = 0; rep < 100; ++rep) {
      const Vector x = random_admissible(b, rng);
      worst = std::max(worst, (pwa_step(x, p.center, t_r, pwa) - step_surrogate(x, p.center, t_r, nominal))
                                  .lpNorm<Eigen::Infinity>());
    }
  }
  return {worst < 1e-9, "max deviation " + fmt(worst) + " K over " +
                            std::to_string(100 * pwa.partitions().size()) + " samples (< 1e-9)"};
}

Outcome pwa_accuracy() {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const PwaModel pwa(nominal, cfg.u_max, 51);
  AccuracyOptions opts;
  opts.n_samples = 5000;
  opts.seed = cfg.seed;
  const AccuracyReport rep = accuracy_study(pwa, nominal, accuracy_state_pool(cfg), cfg, opts);
  const double m = rep.overall.max_abs;
  const double s = rep.overall.std;
  const bool pass = m >= 0.05 && m <= 0.5 && s >= 0.005 && s <= 0.05;
  return {pass, "max |error| " + fmt(m) + " K in [0.05, 0.5], std " + fmt(s) +
                    " K in [0.005, 0.05]"};
}

Outcome qp_solver() {
  std::mt19937_64 rng(20240501);
  double worst_z = 0.0, worst_res = 0.0;
  int not_optimal = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + rep % 8;
    const QuadraticProgram qp = oracle::random_box_qp(d, rep % 2 == 1, rng);
    const auto ref = oracle::enumerate_active_sets(qp);
    const QpSolution sol = solve_qp(qp);
    if (!ref || sol.status != QpStatus::Optimal) {
      ++not_optimal;
      continue;
    }
    worst_z = std::max(worst_z, (sol.z - ref->z).lpNorm<Eigen::Infinity>());
    worst_res = std::max(worst_res, sol.residuals.max());
  }
  const bool pass = not_optimal == 0 && worst_z <= 1e-6 && worst_res <= 1e-8;
  return {pass, "max |z - z_enum| " + fmt(worst_z) + " (<= 1e-6), max KKT residual " +
                    fmt(worst_res) + " (<= 1e-8), " + std::to_string(not_optimal) +
                    " unsolved of 50"};
}

// Heating, idle and cooling in an 8/4/8 cycle: every region of the stored
// profile is swept past the borehole sensors within one window.
std::vector<double> cycle_inputs(int count, double u_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.3, 1.0);
  std::vector<double> u;
  for (int k = 0; k < count; ++k) {
    const int phase = k % 20;
    const double sign = phase < 8 ? 1.0 : (phase < 12 ? 0.0 : -1.0);
    u.push_back(sign * mag(rng) * u_max);
  }
  return u;
}

Outcome mhe_exact_recovery() {
  const ScenarioConfig cfg = default_scenario();
  const auto nominal = std::make_shared<const SurrogateModel>(cfg);
  const auto pwa = std::make_shared<const PwaModel>(*nominal, cfg.u_max, cfg.partitions);
  const ModeSource source = ModeSource::lookup(pwa);
  const StateConstraints bounds = state_bounds(cfg);
  const OutputModel out = OutputModel::borehole_sensors(cfg.layout());

  double worst_err = 0.0, worst_obj = 0.0;
  int missing = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    MheSettings settings = MheSettings::from_config(cfg);
    settings.weights.S.setZero();
    settings.initial_anchor = random_admissible(bounds, rng);
    MovingHorizonEstimator mhe(settings, source);

    const std::vector<double> u = cycle_inputs(cfg.mhe_horizon + 1, cfg.u_max, rng);
    Vector x = charged_state(cfg);
    MheResult last;
    for (int k = 0; k <= cfg.mhe_horizon; ++k) {
      const double t_r = cfg.return_temperature(u[k]);
      last = mhe.update({k, out.apply(x), u[k], t_r});
      if (k < cfg.mhe_horizon) x = pwa->step(x, u[k], t_r);
    }
    if (!last.estimate || last.status != EstimateStatus::Ok) {
      ++missing;
      continue;
    }
    worst_err = std::max(worst_err, (*last.estimate - x).lpNorm<Eigen::Infinity>());
    worst_obj = std::max(worst_obj, last.diagnostics.objective);
  }
  return {missing == 0 && worst_err <= 1e-6 && worst_obj <= 1e-10,
          "5 random anchors, M = " + std::to_string(cfg.mhe_horizon) + ", s = " +
              std::to_string(cfg.partitions) + ": max |x_hat - x|_inf " + fmt(worst_err) +
              " K (<= 1e-6), max objective " + fmt(worst_obj) + " (<= 1e-10), " +
              std::to_string(missing) + " failed solves"};
}

const ComparisonReport& comparison() {
  static const ComparisonReport report = [] {
    const ScenarioConfig cfg = default_scenario();
    return compare_estimators(generate_truth(cfg), cfg);
  }();
  return report;
}

Outcome constraint_satisfaction() {
  const auto& r = comparison();
  const int mhe = r.trace(EstimatorKind::Mhe).violation_entries();
  const int ukf = r.trace(EstimatorKind::Ukf).violation_entries();
  const int kf = r.trace(EstimatorKind::LtvKf).violation_entries();
  return {mhe == 0 && ukf >= 1 && kf >= 1, "violations: MHE " + std::to_string(mhe) +
                                               " (== 0), UKF " + std::to_string(ukf) +
                                               " (>= 1), LTV-KF " + std::to_string(kf) + " (>= 1)"};
}

Outcome estimator_accuracy() {
  const ScenarioConfig cfg = default_scenario();
  const auto& r = comparison();
  const auto& mhe = r.trace(EstimatorKind::Mhe);
  const auto& ukf = r.trace(EstimatorKind::Ukf);
  const auto& kf = r.trace(EstimatorKind::LtvKf);
  double worst_mean = 0.0;
  for (const auto* t : {&mhe, &ukf, &kf}) worst_mean = std::max(worst_mean, t->max_abs_mean_error(100));
  const double bm = mhe.mean_band_width(50, cfg.steps);
  const double bu = ukf.mean_band_width(50, cfg.steps);
  const double bk = kf.mean_band_width(50, cfg.steps);
  const bool pass = worst_mean <= 1.0 && bm < bu && bm < bk;
  return {pass, "max |mean error| after step 100 " + fmt(worst_mean) +
                    " K (<= 1); mean 95% band MHE " + fmt(bm) + " K vs UKF " + fmt(bu) +
                    " K, LTV-KF " + fmt(bk) + " K (MHE strictly narrower)"};
}

Outcome sensitivity() {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  SensitivityOptions opts;
  opts.rhat_grid = uniform_grid(cfg.aquifer.borehole_radius, cfg.aquifer.domain_radius, 0.2);
  opts.repetitions = 20;
  opts.seed = cfg.seed;
  OcpSettings settings;
  settings.q_weight = cfg.mpc_q_weight;
  settings.r_weight = cfg.mpc_r_weight;
  settings.node_budget = cfg.mpc_node_budget;
  const auto rows = sensitivity_experiment(charged_state(cfg), nominal, cfg,
                                           default_demand(cfg.mpc_horizon), settings, opts);
  const double smallest = opts.rhat_grid.front();
  double far_worst = 0.0, near_best = 0.0, far_worst_rhat = 0.0;
  bool all_optimal = true;
  for (const auto& row : rows) {
    all_optimal = all_optimal && row.optimal;
    if (row.rhat > 3.2 + 1e-9 && row.inf_norm_diff > far_worst) {
      far_worst = row.inf_norm_diff;
      far_worst_rhat = row.rhat;
    }
    if (row.rhat == smallest) near_best = std::max(near_best, row.inf_norm_diff);
  }
  const bool pass = all_optimal && far_worst <= 1e-6 && near_best > 1e-3;
  return {pass, "max diff for rhat > 3.2 m " + fmt(far_worst) + " m^3/s at rhat " +
                    fmt(far_worst_rhat) + " (<= 1e-6); max diff at rhat " + fmt(smallest) +
                    " " + fmt(near_best) + " (> 1e-3); all optimal " +
                    (all_optimal ? "yes" : "no")};
}

Outcome surrogate_physics() {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel model(cfg);
  const StateConstraints b = state_bounds(cfg);
  const double t_amb = cfg.aquifer.ambient_temperature;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> flow(-cfg.u_max, cfg.u_max);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Vector x = random_admissible(b, rng);
    const double u = rep % 10 == 0 ? 0.0 : flow(rng);
    const double t_r = cfg.return_temperature(u);
    const Vector next = model.step(x, u, t_r);
    const double lo = std::min({x.minCoeff(), t_r, t_amb});
    const double hi = std::max({x.maxCoeff(), t_r, t_amb});
    worst = std::max({worst, lo - next.minCoeff(), next.maxCoeff() - hi});
  }
  const Vector amb = cfg.layout().uniform(t_amb);
  const double drift = (model.step(amb, 0.0, t_amb) - amb).lpNorm<Eigen::Infinity>();
  return {worst <= 1e-10 && drift <= 1e-10,
          "max excursion beyond input range " + fmt(std::max(worst, 0.0)) +
              " K over 1000 samples; ambient fixed-point drift " + fmt(drift) + " K (<= 1e-10)"};
}

struct Criterion {
  const char* name;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"penetration", "Penetration-depth formula", penetration},
      {"pwa-exactness", "PWA exactness", pwa_exactness},
      {"pwa-accuracy", "PWA accuracy", pwa_accuracy},
      {"qp", "QP solver vs active-set enumeration", qp_solver},
      {"mhe-recovery", "MHE exact recovery", mhe_exact_recovery},
      {"mhe-constraints", "MHE constraint satisfaction", constraint_satisfaction},
      {"estimator-accuracy", "Estimator accuracy", estimator_accuracy},
      {"sensitivity", "MPC sensitivity study", sensitivity},
      {"surrogate-physics", "Surrogate physics", surrogate_physics},
  };

  std::vector<std::string> selected(argv + 1, argv + argc);
  for (const auto& s : selected) {
    const bool known = std::any_of(criteria.begin(), criteria.end(),
                                   [&](const Criterion& c) { return s == c.name; });
    if (!known) {
      std::cerr << "unknown criterion: " << s << '\n';
      return 2;
    }
  }

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.name) == selected.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.title << ": " << o.detail << " [" << fmt(secs)
              << " s]" << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
