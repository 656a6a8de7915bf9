#pragma once

#include "ates/domain.hpp"
#include "ates/qp.hpp"
#include "ates/surrogate.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ates {

/// Heat delivered to the building side: c_w u (T_b - T_r), in W.
double power(double u, double t_b, double t_r, double c_w);

/// Radius a particle starting at the borehole reaches after N steps of
/// pure advection at flow u: sqrt(N dt u / (l pi) + r0^2).
double penetration_radius(int horizon, double dt, double u, double filter_length, double r0);

/// One mode of the coarse MPC model, affine in state and input around a
/// reference profile: x+ = A x + B u + f, valid for u in [u_lower, u_upper].
struct MpcMode {
  Mode mode = Mode::Inactivity;
  double u_lower = 0.0;
  double u_upper = 0.0;
  double u_ref = 0.0;
  double t_r = 0.0;
  Matrix A;
  Vector B;
  Vector f;
  /// Building outlet temperature after one step from the reference at u_ref.
  double tb_ref = 0.0;

  Vector predict(const Vector& x, double u) const { return A * x + B * u + f; }
};

/// Inactivity, heating and cooling in that order; the order is the
/// tie-break order of the branch-and-bound.
struct CoarseModel {
  std::vector<MpcMode> modes;
};

/// Linearizes the surrogate around (x_ref, +-u_max/2); B by central
/// differences of the step in u. Inactivity fixes u = 0.
CoarseModel build_coarse_model(const SurrogateModel& nominal, const Vector& x_ref,
                               const ScenarioConfig& cfg);

struct OcpSettings {
  double q_weight = 1.0;
  double r_weight = 1e-4;
  int node_budget = 50000;
  /// Nodes whose bound is within abs_gap + rel_gap * |incumbent| of the
  /// incumbent (on the scaled objective) are pruned.
  double abs_gap = 1e-6;
  double rel_gap = 1e-9;
  QpSettings qp;
};

struct OcpSpec {
  int horizon = 12;
  std::vector<double> demand;  ///< W, one per step
  double c_w = 4.18e6;
  double u_max = 0.0277;
  CoarseModel model;
  StateConstraints bounds;
  OcpSettings settings;

  void validate(int n) const;
};

OcpSpec make_ocp_spec(const SurrogateModel& nominal, const Vector& x_ref,
                      const ScenarioConfig& cfg, std::vector<double> demand,
                      OcpSettings settings = {});

struct OcpSolution {
  std::vector<double> u;
  std::vector<int> modes;  ///< indices into CoarseModel::modes
  double objective = 0.0;
  int nodes = 0;
  bool optimal = false;
};

/// Node of the search: the tracking cost sum_k Q (D_k - P_k)^2 + R u_k^2
/// over the first modes.size() steps for a fixed mode prefix. P_k uses the
/// mode's linearized power with T_b at step k+1. Dropping the remaining
/// nonnegative terms makes it a lower bound for every completion.
struct NodeResult {
  double bound = 0.0;  ///< scaled objective
  std::vector<double> u;
  bool feasible = false;
  bool reliable = true;
};
NodeResult solve_mode_sequence(const Vector& x0, const OcpSpec& spec,
                               const std::vector<int>& modes);

/// Best-first branch-and-bound over per-step mode assignments, seeded by a
/// greedy dive. Throws std::invalid_argument if x0 is outside the bounds and
/// std::runtime_error if no mode sequence is feasible.
OcpSolution solve_ocp(const Vector& x0, const OcpSpec& spec);

/// Exhaustive enumeration of all mode sequences. Only for small horizons.
OcpSolution enumerate_ocp(const Vector& x0, const OcpSpec& spec);

/// Default heating demand in W. From charged_state() it needs a mean flow
/// of about 15 kg/s.
std::vector<double> default_demand(int horizon);

/// Warm profile decaying from 291.15 K towards ambient, cold profile rising
/// from 277.15 K towards ambient, T_b at ambient.
Vector charged_state(const ScenarioConfig& cfg);

/// Copy of x0 with every cell whose center lies beyond rhat replaced by
/// the matching entry of `draw`.
Vector perturb_beyond(const Vector& x0, const Vector& draw, double rhat,
                      const RadialMesh& mesh, const StateLayout& layout);

/// Uniform draw within the bounds for every entry.
Vector uniform_draw(const StateConstraints& bounds, std::mt19937_64& rng);

struct SensitivityRow {
  double rhat = 0.0;
  int rep = 0;
  double inf_norm_diff = 0.0;
  bool optimal = true;
};

struct SensitivityOptions {
  std::vector<double> rhat_grid;
  int repetitions = 20;
  std::uint64_t seed = 42;
};

/// Throws std::invalid_argument for grid points outside [r0, r_inf].
std::vector<SensitivityRow> sensitivity_experiment(const Vector& x0,
                                                   const SurrogateModel& nominal,
                                                   const ScenarioConfig& cfg,
                                                   const std::vector<double>& demand,
                                                   const OcpSettings& settings,
                                                   const SensitivityOptions& options);

/// r0, r0 + step, ..., up to and including r_inf.
std::vector<double> uniform_grid(double r0, double r_inf, double step);

}  // namespace ates
