#pragma once

#include "ates/domain.hpp"
#include "ates/surrogate.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ates {

/// Input interval [lower, upper); the last partition of a tiling is closed.
struct Partition {
  double lower = 0.0;
  double upper = 0.0;
  double center = 0.0;

  bool contains(double u, bool closed_above = false) const {
    return u >= lower && (u < upper || (closed_above && u == upper));
  }
};

/// s equal-width partitions of [-u_max, u_max]. s must be odd and > 3 so the
/// middle partition is centered at zero.
std::vector<Partition> build_partitions(double u_max, int s);

/// Index of the partition holding u (ties go to the higher index). Throws
/// std::out_of_range outside the tiling.
int locate_partition(const std::vector<Partition>& parts, double u);

/// One affine piece x+ = A x + f(T_r), exact at u_ref.
struct AffineMode {
  double u_ref = 0.0;
  Partition region;
  Matrix A;
  Vector ambient;
  Vector return_gain;
  std::optional<Vector> B;

  Vector offset(double t_r) const { return ambient + t_r * return_gain; }
  Vector apply(const Vector& x, double t_r) const { return A * x + offset(t_r); }
};

AffineMode linearize_at(double u, const SurrogateModel& model);

/// y = C x + D u + e. With borehole sensors C selects
/// (T_b, T_w(r0), T_c(r0)) and D, e vanish.
struct OutputModel {
  Matrix C;
  Vector D;
  Vector e;

  static OutputModel borehole_sensors(const StateLayout& layout);
  int outputs() const { return static_cast<int>(C.rows()); }
  Vector apply(const Vector& x, double u = 0.0) const { return C * x + D * u + e; }
};

/// Piecewise-affine approximation over an equal-width input tiling.
///
/// The partition that straddles u = 0 is refined by sign into a negative
/// piece, the single point u = 0 and a positive piece, so the three
/// operating modes never share an affine map.
class PwaModel {
 public:
  PwaModel(const SurrogateModel& nominal, double u_max, int s);

  double u_max() const { return u_max_; }
  const std::vector<Partition>& partitions() const { return partitions_; }
  const std::vector<AffineMode>& modes() const { return modes_; }

  /// Index into modes(). Throws std::out_of_range for |u| > u_max.
  int mode_index(double u) const;
  const AffineMode& mode_for(double u) const { return modes_[mode_index(u)]; }

  Vector step(const Vector& x, double u, double t_r) const {
    return mode_for(u).apply(x, t_r);
  }

 private:
  double u_max_;
  int middle_;
  std::vector<Partition> partitions_;
  std::vector<AffineMode> modes_;
};

Vector pwa_step(const Vector& x, double u, double t_r, const PwaModel& model);

/// Error statistics over the entries of pwa_step - step_surrogate.
struct ErrorStats {
  int count = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double max_abs = 0.0;
};

ErrorStats error_stats(std::vector<double> values);

struct AccuracySample {
  double u = 0.0;
  ErrorStats over_states;
};

struct AccuracyReport {
  std::vector<AccuracySample> samples;     ///< sorted by u
  std::vector<ErrorStats> per_partition;   ///< aligned with PwaModel::partitions()
  ErrorStats overall;
};

struct AccuracyOptions {
  int n_samples = 5000;
  std::uint64_t seed = 1;
  /// Draw u only from the partition centers.
  bool centers_only = false;
};

/// One-step comparison on states drawn from `state_pool` and u ~ U[-u_max,
/// u_max]. The return temperature follows the sign of u.
AccuracyReport accuracy_study(const PwaModel& pwa, const SurrogateModel& nominal,
                              const std::vector<Vector>& state_pool,
                              const ScenarioConfig& cfg,
                              const AccuracyOptions& options);

}  // namespace ates
