#include "ates/domain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ates {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument(field + ": " + what);
}

}  // namespace

void AquiferParams::validate() const {
  require(porosity > 0.0 && porosity < 1.0, "porosity", "must lie in (0, 1)");
  require(heat_capacity > 0.0, "c_a", "must be positive");
  require(water_heat_capacity > 0.0, "c_w", "must be positive");
  require(conductivity > 0.0, "lambda_nominal", "must be positive");
  require(filter_length > 0.0, "filter_length", "must be positive");
  require(borehole_radius > 0.0, "r0", "must be positive");
  require(borehole_radius < domain_radius, "mesh",
          "borehole radius must be smaller than the domain radius");
  require(std::isfinite(ambient_temperature) && ambient_temperature > 0.0,
          "t_amb", "must be a positive temperature");
}

void HxParams::validate() const {
  require(building_flow > 0.0, "q_b", "must be positive");
  require(conductance > 0.0, "ua", "must be positive");
}

RadialMesh RadialMesh::uniform(double r0, double r_inf, int n_cells,
                               double filter_length) {
  if (n_cells < 1) throw std::invalid_argument("mesh: cell count must be >= 1");
  if (!(r0 > 0.0) || !(r0 < r_inf))
    throw std::invalid_argument("mesh: requires 0 < r0 < r_inf");
  if (!(filter_length > 0.0))
    throw std::invalid_argument("mesh: filter length must be positive");

  RadialMesh mesh;
  mesh.filter_length_ = filter_length;
  const double dr = (r_inf - r0) / n_cells;
  mesh.faces_.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) mesh.faces_[i] = r0 + i * dr;
  mesh.faces_.back() = r_inf;

  mesh.centers_.resize(n_cells);
  mesh.volumes_.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    const double a = mesh.faces_[i];
    const double b = mesh.faces_[i + 1];
    mesh.centers_[i] = 0.5 * (a + b);
    // (b^2 - a^2) factored to keep thin annuli accurate
    mesh.volumes_[i] = std::numbers::pi * (b - a) * (b + a) * filter_length;
  }
  return mesh;
}

double RadialMesh::total_volume() const {
  double sum = 0.0;
  for (double v : volumes_) sum += v;
  return sum;
}

RadialMesh build_mesh(double r0, double r_inf, int n_cells,
                      double filter_length) {
  return RadialMesh::uniform(r0, r_inf, n_cells, filter_length);
}

StateLayout::StateLayout(int n_cells) : n_cells_(n_cells) {
  if (n_cells < 1) throw std::invalid_argument("n_cells: must be >= 1");
}

StateLayout::Unpacked StateLayout::unpack(const Vector& x) const {
  if (x.size() != size())
    throw std::invalid_argument("state: length does not match layout");
  Unpacked parts;
  parts.building_outlet = x[building_outlet()];
  parts.warm = x.segment(warm(0), profile_size());
  parts.cold = x.segment(cold(0), profile_size());
  return parts;
}

Vector StateLayout::pack(const Unpacked& parts) const {
  if (parts.warm.size() != profile_size() || parts.cold.size() != profile_size())
    throw std::invalid_argument("state: profile length does not match layout");
  Vector x(size());
  x[building_outlet()] = parts.building_outlet;
  x.segment(warm(0), profile_size()) = parts.warm;
  x.segment(cold(0), profile_size()) = parts.cold;
  return x;
}

Vector StateLayout::uniform(double temperature) const {
  return Vector::Constant(size(), temperature);
}

bool StateConstraints::contains(const Vector& x, double tol) const {
  return violations(x, tol) == 0;
}

int StateConstraints::violations(const Vector& x, double tol) const {
  int count = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol || !std::isfinite(x[i]))
      ++count;
  }
  return count;
}

Vector StateConstraints::clamp(const Vector& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

RadialMesh ScenarioConfig::mesh() const {
  return RadialMesh::uniform(aquifer.borehole_radius, aquifer.domain_radius,
                             n_cells, aquifer.filter_length);
}

void ScenarioConfig::validate() const {
  aquifer.validate();
  hx.validate();
  require(n_cells >= 1, "n_cells", "must be >= 1");
  require(conductivity_min > 0.0, "lambda_min", "must be positive");
  require(conductivity_min <= conductivity_max, "lambda_max",
          "must not be smaller than lambda_min");
  require(dt > 0.0, "dt", "must be positive");
  require(u_max > 0.0, "u_max", "must be positive");
  require(t_r_heat > 0.0, "t_r_heat", "must be a positive temperature");
  require(t_r_cool > 0.0, "t_r_cool", "must be a positive temperature");
  require(noise.measurement_std >= 0.0, "meas_noise_std", "must be >= 0");
  require(noise.process_bound >= 0.0, "process_noise_bound", "must be >= 0");
  require(mhe_horizon >= 1, "mhe_horizon", "M must be >= 1");
  require(mpc_horizon >= 1, "mpc_horizon", "N must be >= 1");
  require(partitions > 3, "partitions", "s must be greater than three");
  require(partitions % 2 == 1, "partitions", "s must be odd");
  require(q_weight > 0.0, "q_weight", "must be positive");
  require(r_weight > 0.0, "r_weight", "must be positive");
  require(s_weight >= 0.0, "s_weight", "must be non-negative");
  require(steps >= 1, "steps", "must be >= 1");
  require(mpc_q_weight > 0.0, "mpc_q_weight", "must be positive");
  require(mpc_r_weight > 0.0, "mpc_r_weight", "must be positive");
  require(mpc_node_budget >= 1, "mpc_node_budget", "must be >= 1");
  const double t_amb = aquifer.ambient_temperature;
  require(t_amb >= kFreezingPoint && t_amb <= kWarmUpperBound, "t_amb",
          "must lie between the freezing point and the warm upper bound");
}

StateConstraints state_bounds(const ScenarioConfig& cfg) {
  const StateLayout layout = cfg.layout();
  const double t_amb = cfg.aquifer.ambient_temperature;
  StateConstraints bounds;
  bounds.lower = Vector::Constant(layout.size(), kFreezingPoint);
  bounds.upper = Vector::Constant(layout.size(), kWarmUpperBound);
  for (int i = 0; i < layout.profile_size(); ++i) {
    bounds.lower[layout.warm(i)] = t_amb;
    bounds.upper[layout.cold(i)] = t_amb;
  }
  return bounds;
}

}  // namespace ates
