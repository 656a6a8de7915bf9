#pragma once

#include "ates/domain.hpp"

#include <random>
#include <string_view>
#include <vector>

namespace ates {

enum class Mode { Cooling, Inactivity, Heating };

Mode mode_of(double u);
std::string_view to_string(Mode mode);

/// Radial groundwater velocity v = u / (2 pi r l phi). Throws on r <= 0.
double darcy_velocity(double u, double r, double l, double porosity);

/// ATES-side temperature change coefficient of the cocurrent exchanger,
/// alpha_a = (1 - exp(-NTU (1 + C_r))) / (1 + C_r) with NTU = UA / (c_w |u|)
/// and C_r = |u| / q_b. Throws for u == 0.
double hx_alpha(double u, const HxParams& hx, double water_heat_capacity);

/// Per-cell conduction coefficients of both storages.
struct ConductivityField {
  Vector warm;
  Vector cold;

  static ConductivityField uniform(int n_cells, double lambda);
  /// Independent U[lo, hi] draw per cell, warm storage first.
  static ConductivityField sample(int n_cells, double lo, double hi,
                                  std::mt19937_64& rng);
};

/// Exact affine form of one step at a fixed flow:
/// x+ = A x + ambient + t_r * return_gain.
struct AffineStep {
  Matrix A;
  Vector ambient;
  Vector return_gain;

  Vector offset(double t_r) const { return ambient + t_r * return_gain; }
  Vector apply(const Vector& x, double t_r) const { return A * x + offset(t_r); }
};

/// Backward-Euler finite-volume model of both storages plus the exchanger.
///
/// Advection is first-order upwind, diffusion uses harmonic-mean face
/// conductivities. Only the extraction side copies its first cell into the
/// borehole node; the injection side's node takes the exchanger outlet.
class SurrogateModel {
 public:
  enum class FarBoundary { Ambient, Reflective };

  /// Nominal, homogeneous conductivity.
  explicit SurrogateModel(const ScenarioConfig& cfg);
  SurrogateModel(const ScenarioConfig& cfg, ConductivityField field);

  /// Truth model with a conductivity field drawn from [lambda_min, lambda_max].
  static SurrogateModel perturbed(const ScenarioConfig& cfg, std::mt19937_64& rng);

  const StateLayout& layout() const { return layout_; }
  const RadialMesh& mesh() const { return mesh_; }
  const AquiferParams& aquifer() const { return aquifer_; }
  const HxParams& hx() const { return hx_; }
  const ConductivityField& conductivity() const { return field_; }
  double dt() const { return dt_; }
  double ambient() const { return aquifer_.ambient_temperature; }

  /// Reflective is only meant for conservation checks.
  void set_far_boundary(FarBoundary boundary) { far_ = boundary; }
  FarBoundary far_boundary() const { return far_; }

  Vector step(const Vector& x, double u, double t_r) const;

  /// A, ambient and return_gain such that step(x, u, t_r) equals
  /// affine(u).apply(x, t_r) for every x and t_r.
  AffineStep affine(double u) const;

  /// Stored heat sum c_a V_c T_c over the finite-volume cells of one storage.
  double cell_energy(const Vector& x, bool warm) const;

 private:
  Vector step_impl(const Vector& x, double u, double t_r, double t_amb) const;
  void step_storage(const Vector& old_cells, const Vector& lambda, int role,
                    double flow_rate, double t_inj, double t_amb,
                    Vector& new_cells) const;

  StateLayout layout_;
  RadialMesh mesh_;
  AquiferParams aquifer_;
  HxParams hx_;
  ConductivityField field_;
  double dt_;
  FarBoundary far_ = FarBoundary::Ambient;
};

Vector step_surrogate(const Vector& x, double u, double t_r,
                      const SurrogateModel& model);

struct InputSample {
  double u = 0.0;
  double t_r = 0.0;
};

/// Trajectory x_0 .. x_K for K inputs.
std::vector<Vector> simulate(const Vector& x0, const std::vector<InputSample>& inputs,
                             const SurrogateModel& model);

}  // namespace ates
