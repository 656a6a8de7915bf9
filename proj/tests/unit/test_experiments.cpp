#include "ates/config.hpp"
#include "ates/csv.hpp"
#include "ates/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ates;

namespace {

ScenarioConfig short_scenario(int steps) {
  ScenarioConfig cfg = default_scenario();
  cfg.steps = steps;
  return cfg;
}

}  // namespace

TEST(Truth, SameSeedSameRun) {
  const ScenarioConfig cfg = short_scenario(30);
  const TruthRun a = generate_truth(cfg);
  const TruthRun b = generate_truth(cfg);
  ASSERT_EQ(a.steps(), 30);
  EXPECT_EQ(a.u, b.u);
  for (int k = 0; k < a.steps(); ++k) {
    EXPECT_EQ(a.states[k], b.states[k]);
    EXPECT_EQ(a.measurements[k], b.measurements[k]);
  }
  ScenarioConfig other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(generate_truth(other).u, a.u);
}

TEST(Truth, ZeroNoiseMeasuresTheStateExactly) {
  ScenarioConfig cfg = short_scenario(25);
  cfg.noise.measurement_std = 0.0;
  cfg.noise.process_bound = 0.0;
  const TruthRun run = generate_truth(cfg);
  const OutputModel out = OutputModel::borehole_sensors(cfg.layout());
  const SurrogateModel truth(cfg, run.field);
  for (int k = 0; k < run.steps(); ++k) {
    EXPECT_EQ(run.measurements[k], out.apply(run.states[k]));
    if (k + 1 < run.steps())
      EXPECT_LE((run.states[k + 1] - truth.step(run.states[k], run.u[k], run.t_r[k]))
                    .lpNorm<Eigen::Infinity>(),
                1e-12);
  }
}

TEST(Truth, FieldInputsAndStatesWithinRanges) {
  const ScenarioConfig cfg = short_scenario(80);
  const TruthRun run = generate_truth(cfg);
  EXPECT_GE(run.field.warm.minCoeff(), 3.0);
  EXPECT_LE(run.field.warm.maxCoeff(), 5.0);
  EXPECT_GE(run.field.cold.minCoeff(), 3.0);
  EXPECT_LE(run.field.cold.maxCoeff(), 5.0);
  const StateConstraints b = state_bounds(cfg);
  bool heating = false, cooling = false, idle = false;
  for (int k = 0; k < run.steps(); ++k) {
    EXPECT_TRUE(b.contains(run.states[k])) << k;
    EXPECT_LE(std::abs(run.u[k]), cfg.u_max);
    EXPECT_DOUBLE_EQ(run.t_r[k], cfg.return_temperature(run.u[k]));
    heating |= run.u[k] > 0.0;
    cooling |= run.u[k] < 0.0;
    idle |= run.u[k] == 0.0;
  }
  EXPECT_TRUE(heating && cooling && idle);
}

TEST(Truth, RejectsNegativeNoise) {
  ScenarioConfig cfg = short_scenario(5);
  cfg.noise.measurement_std = -1.0;
  EXPECT_THROW(generate_truth(cfg), std::invalid_argument);
}

TEST(Estimators, NamesRoundTrip) {
  for (auto k : {EstimatorKind::Mhe, EstimatorKind::Ukf, EstimatorKind::LtvKf})
    EXPECT_EQ(estimator_from_string(to_string(k)), k);
  EXPECT_THROW(estimator_from_string("ekf"), std::invalid_argument);
}

TEST(Comparison, MheInactiveBeforeHorizonAndBandsContainMeans) {
  const ScenarioConfig cfg = short_scenario(50);
  const TruthRun run = generate_truth(cfg);
  const ComparisonReport report = compare_estimators(run, cfg);
  ASSERT_EQ(report.traces.size(), 3u);
  const EstimatorTrace& mhe = report.trace(EstimatorKind::Mhe);
  for (int k = 0; k < cfg.mhe_horizon; ++k) {
    EXPECT_EQ(mhe.rows[k].status, "inactive");
    EXPECT_FALSE(mhe.rows[k].estimate.has_value());
  }
  EXPECT_TRUE(mhe.rows[cfg.mhe_horizon].estimate.has_value());
  for (const auto& trace : report.traces) {
    ASSERT_EQ(static_cast<int>(trace.rows.size()), run.steps());
    for (const auto& r : trace.rows) {
      if (!r.estimate) continue;
      EXPECT_LE(r.err_q025, r.err_mean + 1e-12);
      EXPECT_GE(r.err_q975, r.err_mean - 1e-12);
      EXPECT_LE(std::max(std::abs(r.err_q025), std::abs(r.err_q975)), r.err_max + 1e-12);
    }
  }
  // Same stream for every estimator: UKF and LTV-KF rows align with the MHE rows.
  EXPECT_EQ(report.trace(EstimatorKind::Ukf).rows.back().k, mhe.rows.back().k);
}

TEST(Comparison, MheErrorShrinksDuringBurnIn) {
  const ScenarioConfig cfg = short_scenario(81);
  const TruthRun run = generate_truth(cfg);
  const EstimatorTrace mhe = run_estimator(EstimatorKind::Mhe, run, cfg);
  EXPECT_LT(mhe.rms_error(80, run), mhe.rms_error(40, run));
}

TEST(Scoring, CountsViolationsAndStatistics) {
  const ScenarioConfig cfg = default_scenario();
  const StateConstraints b = state_bounds(cfg);
  const Vector truth = cfg.layout().uniform(cfg.aquifer.ambient_temperature);
  Vector est = truth;
  est[1] -= 0.5;  // warm entry below ambient
  EstimateRow row;
  score_estimate(row, est, truth, b);
  EXPECT_EQ(row.violations, 1);
  EXPECT_DOUBLE_EQ(row.err_max, 0.5);
  EXPECT_NEAR(row.err_mean, -0.5 / 33.0, 1e-15);
}

TEST(Csv, SeventeenSignificantDigitsRoundTrip) {
  for (double v : {0.1, 284.85, 1.0 / 3.0, -2.5e-17, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Csv, TrajectoryRoundTripAndHeader) {
  const ScenarioConfig cfg = short_scenario(6);
  const TruthRun run = generate_truth(cfg);
  std::stringstream ss;
  write_trajectory_csv(ss, run.states, run.u, run.t_r, cfg.dt, cfg.layout());
  const CsvTable table = read_csv(ss);
  ASSERT_EQ(table.header.size(), 5u + 32u);
  EXPECT_EQ(table.header[0], "k");
  EXPECT_EQ(table.header[1], "t_seconds");
  EXPECT_EQ(table.header[4], "T_b");
  EXPECT_EQ(table.header[5], "Tw_0");
  EXPECT_EQ(table.header[20], "Tw_15");
  EXPECT_EQ(table.header[21], "Tc_0");
  EXPECT_EQ(table.header.back(), "Tc_15");
  EXPECT_DOUBLE_EQ(table.number(2, "t_seconds"), 7200.0);

  const Trajectory back = read_trajectory_csv(table, cfg.layout());
  EXPECT_EQ(back.u, run.u);
  EXPECT_EQ(back.t_r, run.t_r);
  for (int k = 0; k < run.steps(); ++k) EXPECT_EQ(back.states[k], run.states[k]);
}

TEST(Csv, MeasurementsRoundTrip) {
  const TruthRun run = generate_truth(short_scenario(4));
  std::stringstream ss;
  write_measurements_csv(ss, run.measurements);
  const auto back = read_measurements_csv(read_csv(ss));
  ASSERT_EQ(back.size(), run.measurements.size());
  for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(back[k], run.measurements[k]);
}

TEST(Csv, ReportBytesAreReproducible) {
  const ScenarioConfig cfg = short_scenario(45);
  auto render = [&] {
    const TruthRun run = generate_truth(cfg);
    std::stringstream ss;
    write_report_csv(ss, compare_estimators(run, cfg));
    return ss.str();
  };
  const std::string a = render();
  EXPECT_EQ(a, render());
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "k,estimator,status,err_mean,err_q025,err_q975,err_max_abs,violations");
}

TEST(Csv, EstimateSchema) {
  const ScenarioConfig cfg = short_scenario(3);
  const TruthRun run = generate_truth(cfg);
  const EstimatorTrace trace = run_estimator(EstimatorKind::Ukf, run, cfg);
  std::stringstream ss;
  write_estimates_csv(ss, trace, 33);
  const CsvTable t = read_csv(ss);
  ASSERT_EQ(t.header.size(), 3u + 33u + 4u);
  EXPECT_EQ(t.header[1], "estimator");
  EXPECT_EQ(t.header[3], "xhat_0");
  EXPECT_EQ(t.header[35], "xhat_32");
  EXPECT_EQ(t.header.back(), "qp_residual");
  EXPECT_EQ(t.rows[0][1], "ukf");
}

TEST(Csv, ErrorsNameTheProblem) {
  std::stringstream empty;
  EXPECT_THROW(read_csv(empty), std::runtime_error);
  std::stringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), std::runtime_error);
  std::stringstream ok("a,b\n1,2\n");
  const CsvTable t = read_csv(ok);
  try {
    t.column("c");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("c"), std::string::npos);
  }
}

TEST(Csv, SensitivitySchema) {
  std::stringstream ss;
  write_sensitivity_csv(ss, {{0.4, 0, 1.5e-3, true}, {3.4, 1, 0.0, true}});
  EXPECT_EQ(ss.str(), "rhat_m,rep,inf_norm_diff\n0.40000000000000002,0,0.0015\n"
                      "3.3999999999999999,1,0\n");
}
