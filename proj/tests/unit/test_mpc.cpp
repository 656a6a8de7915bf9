#include "ates/config.hpp"
#include "ates/mpc.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace ates;

TEST(Penetration, ClosedFormRadius) {
  const double r = penetration_radius(12, 3600.0, 0.0277, 38.0, 0.4);
  EXPECT_NEAR(r, std::sqrt(12 * 3600.0 * 0.0277 / (38.0 * std::numbers::pi) + 0.16), 1e-14);
  EXPECT_NEAR(r, 3.19, 0.01);
  EXPECT_DOUBLE_EQ(penetration_radius(12, 3600.0, 0.0, 38.0, 0.4), 0.4);
}

TEST(Power, HeatDeliveredByTheExchanger) {
  EXPECT_DOUBLE_EQ(power(0.01, 290.0, 276.15, 4.18e6), 4.18e6 * 0.01 * (290.0 - 276.15));
  EXPECT_DOUBLE_EQ(power(0.0, 290.0, 276.15, 4.18e6), 0.0);
}

TEST(Grid, IncludesBothEnds) {
  const auto g = uniform_grid(0.4, 4.0, 0.2);
  ASSERT_EQ(g.size(), 19u);
  EXPECT_DOUBLE_EQ(g.front(), 0.4);
  EXPECT_NEAR(g.back(), 4.0, 1e-12);
  EXPECT_THROW(uniform_grid(0.4, 4.0, 0.0), std::invalid_argument);
}

TEST(ChargedState, InsideBoundsAndMonotone) {
  const ScenarioConfig cfg = default_scenario();
  const Vector x = charged_state(cfg);
  EXPECT_TRUE(state_bounds(cfg).contains(x));
  const StateLayout layout = cfg.layout();
  for (int c = 1; c < layout.cells(); ++c) {
    EXPECT_LT(x[layout.warm_cell(c)], x[layout.warm_cell(c - 1)]);
    EXPECT_GT(x[layout.cold_cell(c)], x[layout.cold_cell(c - 1)]);
  }
}

TEST(Perturb, OnlyCellsBeyondRadiusChange) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const Vector x0 = charged_state(cfg);
  std::mt19937_64 rng(1);
  const Vector draw = uniform_draw(state_bounds(cfg), rng);
  EXPECT_TRUE(state_bounds(cfg).contains(draw));
  const Vector xh = perturb_beyond(x0, draw, 2.0, nominal.mesh(), nominal.layout());
  const StateLayout& layout = nominal.layout();
  for (int c = 0; c < layout.cells(); ++c) {
    const bool outside = nominal.mesh().centers()[c] > 2.0;
    for (int idx : {layout.warm_cell(c), layout.cold_cell(c)})
      EXPECT_EQ(xh[idx], outside ? draw[idx] : x0[idx]) << c;
  }
  EXPECT_EQ(xh[0], x0[0]);
  EXPECT_EQ(perturb_beyond(x0, draw, 4.0, nominal.mesh(), layout), x0);
}

TEST(CoarseModel, ExactAtReferencePoint) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const Vector x = charged_state(cfg);
  const CoarseModel model = build_coarse_model(nominal, x, cfg);
  ASSERT_EQ(model.modes.size(), 3u);
  EXPECT_EQ(model.modes[0].mode, Mode::Inactivity);
  EXPECT_EQ(model.modes[1].mode, Mode::Heating);
  EXPECT_EQ(model.modes[2].mode, Mode::Cooling);
  for (const MpcMode& m : model.modes) {
    const Vector exact = nominal.step(x, m.u_ref, m.t_r);
    EXPECT_LE((m.predict(x, m.u_ref) - exact).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_DOUBLE_EQ(m.tb_ref, exact[0]);
  }
  // First-order accurate in u around the reference.
  const MpcMode& heat = model.modes[1];
  const double du = 1e-3 * cfg.u_max;
  const Vector exact = nominal.step(x, heat.u_ref + du, heat.t_r);
  EXPECT_LE((heat.predict(x, heat.u_ref + du) - exact).lpNorm<Eigen::Infinity>(), 1e-5);
}

namespace {

OcpSpec small_spec(ScenarioConfig cfg, const SurrogateModel& nominal, int horizon) {
  cfg.mpc_horizon = horizon;
  std::vector<double> demand(horizon);
  for (int k = 0; k < horizon; ++k) demand[k] = k % 2 == 0 ? 8e4 : -3e4;
  return make_ocp_spec(nominal, charged_state(cfg), cfg, demand);
}

}  // namespace

TEST(Ocp, BranchAndBoundMatchesEnumeration) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  for (int horizon : {2, 3, 4}) {
    const OcpSpec spec = small_spec(cfg, nominal, horizon);
    const Vector x0 = charged_state(cfg);
    const OcpSolution bb = solve_ocp(x0, spec);
    const OcpSolution all = enumerate_ocp(x0, spec);
    EXPECT_TRUE(bb.optimal);
    // The gap is applied to the objective scaled by the largest demand.
    double ps = spec.c_w * spec.u_max;
    for (double d : spec.demand) ps = std::max(ps, std::abs(d));
    const double tol = (spec.settings.abs_gap + spec.settings.rel_gap * all.objective / (ps * ps)) * ps * ps;
    EXPECT_GE(bb.objective, all.objective - 1e-9 * ps * ps) << horizon;
    EXPECT_LE(bb.objective, all.objective + tol) << horizon;
    EXPECT_LE(bb.nodes, all.nodes + 1) << horizon;
  }
}

TEST(Ocp, InputsRespectModeRanges) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const OcpSpec spec = small_spec(cfg, nominal, 4);
  const OcpSolution sol = solve_ocp(charged_state(cfg), spec);
  ASSERT_EQ(sol.u.size(), 4u);
  for (std::size_t k = 0; k < sol.u.size(); ++k) {
    const MpcMode& m = spec.model.modes[sol.modes[k]];
    EXPECT_GE(sol.u[k], m.u_lower - 1e-9);
    EXPECT_LE(sol.u[k], m.u_upper + 1e-9);
  }
}

TEST(Ocp, NodeBoundIsMonotoneAlongAPrefix) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  const OcpSpec spec = small_spec(cfg, nominal, 4);
  const Vector x0 = charged_state(cfg);
  const NodeResult a = solve_mode_sequence(x0, spec, {1});
  const NodeResult b = solve_mode_sequence(x0, spec, {1, 2});
  const NodeResult c = solve_mode_sequence(x0, spec, {1, 2, 1});
  ASSERT_TRUE(a.feasible && b.feasible && c.feasible);
  EXPECT_LE(a.bound, b.bound + 1e-12);
  EXPECT_LE(b.bound, c.bound + 1e-12);
}

TEST(Ocp, RejectsInvalidInputs) {
  const ScenarioConfig cfg = default_scenario();
  const SurrogateModel nominal(cfg);
  OcpSpec spec = small_spec(cfg, nominal, 3);
  Vector outside = charged_state(cfg);
  outside[1] = 300.0;
  EXPECT_THROW(solve_ocp(outside, spec), std::invalid_argument);
  spec.demand.pop_back();
  EXPECT_THROW(spec.validate(cfg.layout().size()), std::invalid_argument);
}

TEST(Sensitivity, NoChangeWithoutPerturbedCells) {
  ScenarioConfig cfg = default_scenario();
  cfg.mpc_horizon = 4;
  const SurrogateModel nominal(cfg);
  SensitivityOptions opts;
  opts.rhat_grid = {4.0};
  opts.repetitions = 2;
  const auto rows = sensitivity_experiment(charged_state(cfg), nominal, cfg,
                                           default_demand(4), OcpSettings{}, opts);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.inf_norm_diff, 0.0);

  opts.rhat_grid = {5.0};
  EXPECT_THROW(sensitivity_experiment(charged_state(cfg), nominal, cfg, default_demand(4),
                                      OcpSettings{}, opts),
               std::invalid_argument);
}
