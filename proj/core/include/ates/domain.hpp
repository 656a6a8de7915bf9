#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ates {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kFreezingPoint = 273.15;
inline constexpr double kWarmUpperBound = 293.15;

/// Subsurface and well parameters of one aquifer storage.
///
/// The same parameters describe the warm and the cold storage; the
/// conduction coefficient here is the nominal (homogeneous) value. Spatially
/// perturbed fields live with the surrogate model.
struct AquiferParams {
  double porosity = 0.3;
  double heat_capacity = 4.4625e6;        ///< c_a  [J m^-3 K^-1]
  double water_heat_capacity = 4.18e6;    ///< c_w  [J m^-3 K^-1]
  double conductivity = 3.5;              ///< lambda [W m^-1 K^-1]
  double filter_length = 38.0;            ///< l    [m]
  double borehole_radius = 0.4;           ///< r_0  [m]
  double domain_radius = 4.0;             ///< r_inf [m]
  double ambient_temperature = 284.85;    ///< T_amb [K]

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Building-side heat exchanger parameters.
struct HxParams {
  double building_flow = 0.1;   ///< q_b [m^3 s^-1]
  double conductance = 2.0e5;   ///< UA  [W K^-1]

  void validate() const;
};

/// Finite-volume cells of one storage between the borehole and the far field.
class RadialMesh {
 public:
  RadialMesh() = default;

  /// Uniform spacing in r. Throws std::invalid_argument on n_cells < 1 or
  /// r0 >= r_inf.
  static RadialMesh uniform(double r0, double r_inf, int n_cells,
                            double filter_length);

  int size() const { return static_cast<int>(centers_.size()); }
  double inner_radius() const { return faces_.front(); }
  double outer_radius() const { return faces_.back(); }
  double filter_length() const { return filter_length_; }

  std::span<const double> faces() const { return faces_; }
  std::span<const double> centers() const { return centers_; }
  std::span<const double> volumes() const { return volumes_; }

  double total_volume() const;

 private:
  std::vector<double> faces_;
  std::vector<double> centers_;
  std::vector<double> volumes_;
  double filter_length_ = 0.0;
};

RadialMesh build_mesh(double r0, double r_inf, int n_cells,
                      double filter_length);

/// Index map of the concatenated state [T_b, warm profile, cold profile].
///
/// Each storage profile has one explicit borehole node at r_0 (profile
/// index 0) followed by the finite-volume cells (profile index 1..n_cells).
class StateLayout {
 public:
  explicit StateLayout(int n_cells = 15);

  int cells() const { return n_cells_; }
  int profile_size() const { return n_cells_ + 1; }
  int size() const { return 1 + 2 * profile_size(); }

  static constexpr int building_outlet() { return 0; }
  int warm(int i) const { return 1 + i; }
  int cold(int i) const { return 1 + profile_size() + i; }
  int warm_borehole() const { return warm(0); }
  int cold_borehole() const { return cold(0); }
  /// Index of finite-volume cell `c` (0-based) of the given storage.
  int warm_cell(int c) const { return warm(c + 1); }
  int cold_cell(int c) const { return cold(c + 1); }

  struct Unpacked {
    double building_outlet = 0.0;
    Vector warm;
    Vector cold;
  };

  Unpacked unpack(const Vector& x) const;
  Vector pack(const Unpacked& parts) const;

  /// Uniform state at the given temperature.
  Vector uniform(double temperature) const;

 private:
  int n_cells_;
};

/// Entry-wise box on the state.
struct StateConstraints {
  Vector lower;
  Vector upper;

  bool contains(const Vector& x, double tol = 0.0) const;
  /// Number of entries outside the box by more than tol.
  int violations(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
};

struct NoiseSettings {
  double measurement_std = 0.0333;   ///< K
  double process_bound = 0.1;        ///< K, box half-width of the process noise
};

/// Everything needed to set up one scenario. Produced by load_config.
struct ScenarioConfig {
  AquiferParams aquifer;
  HxParams hx;
  int n_cells = 15;
  double conductivity_min = 3.0;
  double conductivity_max = 5.0;
  double dt = 3600.0;
  double u_max = 0.0277;
  double t_r_heat = 276.15;
  double t_r_cool = 291.15;
  NoiseSettings noise;
  int mhe_horizon = 40;
  int mpc_horizon = 12;
  int partitions = 51;
  double q_weight = 10.0;
  double r_weight = 0.01;
  double s_weight = 0.001;
  std::uint64_t seed = 42;

  // Optional keys.
  double initial_guess = 284.85;
  int steps = 200;
  double mpc_q_weight = 1.0;
  double mpc_r_weight = 1e-4;
  int mpc_node_budget = 50000;
  double ukf_alpha = 1.0;
  double ukf_beta = 2.0;
  double ukf_kappa = 0.0;

  StateLayout layout() const { return StateLayout(n_cells); }
  RadialMesh mesh() const;

  /// Building return temperature for a flow: cooling uses t_r_cool,
  /// heating and inactivity use t_r_heat.
  double return_temperature(double u) const {
    return u < 0.0 ? t_r_cool : t_r_heat;
  }

  void validate() const;
};

StateConstraints state_bounds(const ScenarioConfig& cfg);

}  // namespace ates
