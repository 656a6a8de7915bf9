#include "ates/config.hpp"
#include "ates/domain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ates;

TEST(Mesh, UniformCellsBetweenBoreholeAndFarField) {
  const RadialMesh mesh = build_mesh(0.4, 4.0, 15, 38.0);
  ASSERT_EQ(mesh.size(), 15);
  EXPECT_NEAR(mesh.centers()[0], 0.52, 1e-12);
  EXPECT_NEAR(mesh.centers()[14], 3.88, 1e-12);
  EXPECT_DOUBLE_EQ(mesh.inner_radius(), 0.4);
  EXPECT_DOUBLE_EQ(mesh.outer_radius(), 4.0);
  const double annulus = std::numbers::pi * (4.0 * 4.0 - 0.4 * 0.4) * 38.0;
  EXPECT_NEAR(mesh.total_volume(), annulus, 1e-9 * annulus);
}

TEST(Mesh, RejectsDegenerateGeometry) {
  EXPECT_THROW(build_mesh(4.0, 0.4, 15, 38.0), std::invalid_argument);
  EXPECT_THROW(build_mesh(0.4, 4.0, 0, 38.0), std::invalid_argument);
}

TEST(Layout, ThirtyThreeStatesInOrder) {
  const StateLayout layout(15);
  EXPECT_EQ(layout.size(), 33);
  EXPECT_EQ(layout.building_outlet(), 0);
  EXPECT_EQ(layout.warm_borehole(), 1);
  EXPECT_EQ(layout.warm_cell(14), 16);
  EXPECT_EQ(layout.cold_borehole(), 17);
  EXPECT_EQ(layout.cold_cell(14), 32);
}

TEST(Layout, PackUnpackRoundTrip) {
  const StateLayout layout(15);
  Vector x(layout.size());
  for (int i = 0; i < x.size(); ++i) x[i] = 270.0 + i;
  EXPECT_EQ(layout.pack(layout.unpack(x)), x);
}

TEST(Bounds, WarmColdAndOutletRanges) {
  const ScenarioConfig cfg = default_scenario();
  const StateLayout layout = cfg.layout();
  const StateConstraints b = state_bounds(cfg);
  EXPECT_DOUBLE_EQ(b.lower[layout.warm(3)], 284.85);
  EXPECT_DOUBLE_EQ(b.upper[layout.warm(3)], 293.15);
  EXPECT_DOUBLE_EQ(b.lower[layout.cold(3)], 273.15);
  EXPECT_DOUBLE_EQ(b.upper[layout.cold(3)], 284.85);
  EXPECT_DOUBLE_EQ(b.lower[0], 273.15);
  EXPECT_DOUBLE_EQ(b.upper[0], 293.15);
  EXPECT_TRUE((b.lower.array() <= b.upper.array()).all());
}

TEST(Bounds, ClampAndCountViolations) {
  const ScenarioConfig cfg = default_scenario();
  const StateConstraints b = state_bounds(cfg);
  Vector x = cfg.layout().uniform(cfg.aquifer.ambient_temperature);
  EXPECT_TRUE(b.contains(x));
  x[1] = 300.0;
  x[20] = 260.0;
  EXPECT_EQ(b.violations(x), 2);
  const Vector c = b.clamp(x);
  EXPECT_TRUE(b.contains(c));
  EXPECT_DOUBLE_EQ(c[1], 293.15);
  EXPECT_DOUBLE_EQ(c[20], 273.15);
}

TEST(Config, DefaultsMatchParameterTable) {
  const ScenarioConfig cfg = default_scenario();
  EXPECT_DOUBLE_EQ(cfg.aquifer.porosity, 0.3);
  EXPECT_DOUBLE_EQ(cfg.aquifer.heat_capacity, 4.4625e6);
  EXPECT_DOUBLE_EQ(cfg.aquifer.conductivity, 3.5);
  EXPECT_DOUBLE_EQ(cfg.aquifer.filter_length, 38.0);
  EXPECT_DOUBLE_EQ(cfg.u_max, 0.0277);
  EXPECT_DOUBLE_EQ(cfg.dt, 3600.0);
  EXPECT_EQ(cfg.mhe_horizon, 40);
  EXPECT_EQ(cfg.mpc_horizon, 12);
  EXPECT_EQ(cfg.partitions, 51);
  EXPECT_DOUBLE_EQ(cfg.q_weight, 10.0);
  EXPECT_DOUBLE_EQ(cfg.r_weight, 0.01);
  EXPECT_DOUBLE_EQ(cfg.s_weight, 0.001);
}

TEST(Config, DumpLoadRoundTrip) {
  ScenarioConfig cfg = default_scenario();
  cfg.seed = 7;
  cfg.steps = 123;
  const ScenarioConfig back = load_config(dump_config(cfg));
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.steps, 123);
  EXPECT_DOUBLE_EQ(back.aquifer.ambient_temperature, cfg.aquifer.ambient_temperature);
  EXPECT_EQ(dump_config(back), dump_config(cfg));
}

namespace {
std::string expect_config_error(const std::string& text) {
  try {
    load_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  ADD_FAILURE() << "no ConfigError for " << text;
  return {};
}

std::string doc_with(const std::string& key, const std::string& value) {
  std::string doc = dump_config(default_scenario());
  const std::string needle = "\"" + key + "\":";
  const auto pos = doc.find(needle);
  EXPECT_NE(pos, std::string::npos) << key;
  const auto end = doc.find_first_of(",}", pos);
  return doc.substr(0, pos + needle.size()) + value + doc.substr(end);
}
}  // namespace

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(expect_config_error(doc_with("porosity", "1.5")), "porosity");
  EXPECT_EQ(expect_config_error(doc_with("n_cells", "0")), "n_cells");
  EXPECT_EQ(expect_config_error(doc_with("u_max", "\"fast\"")), "u_max");
  EXPECT_EQ(expect_config_error("[1, 2]"), "document");
  EXPECT_EQ(expect_config_error("{not json"), "document");
}

TEST(Config, MissingAndUnknownKeys) {
  std::string doc = dump_config(default_scenario());
  const auto pos = doc.find("\"dt\":");
  const auto end = doc.find(',', pos);
  EXPECT_EQ(expect_config_error(doc.substr(0, pos) + doc.substr(end + 1)), "dt");
  EXPECT_EQ(expect_config_error("{\"bogus\": 1," + doc.substr(1)), "bogus");
}
