#pragma once

#include "ates/domain.hpp"
#include "ates/pwa.hpp"
#include "ates/qp.hpp"
#include "ates/surrogate.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace ates {

struct MeasurementRecord {
  int k = 0;
  Vector y;
  double u = 0.0;
  double t_r = 0.0;
};

/// Last M+1 records with contiguous step indices.
class MeasurementWindow {
 public:
  explicit MeasurementWindow(int horizon);

  int horizon() const { return horizon_; }
  int capacity() const { return horizon_ + 1; }
  int size() const { return static_cast<int>(records_.size()); }
  bool full() const { return size() == capacity(); }

  /// Throws std::invalid_argument if rec.k does not follow the newest record.
  void push(MeasurementRecord rec);
  const MeasurementRecord& operator[](int i) const { return records_[i]; }
  const MeasurementRecord& back() const { return records_.back(); }
  void clear() { records_.clear(); }

 private:
  int horizon_;
  std::deque<MeasurementRecord> records_;
};

/// Q weighs process noise, R measurement residuals, S the arrival term.
/// Q and R must be positive definite, S positive semidefinite.
struct MheWeights {
  Matrix Q;
  Matrix R;
  Matrix S;

  static MheWeights scaled(int n, int p, double q, double r, double s);
  void validate(int n, int p) const;
};

/// Supplies the affine dynamics for a recorded input: either the exact
/// linearization at that input or a lookup in a finite PWA model.
class ModeSource {
 public:
  static ModeSource exact(std::shared_ptr<const SurrogateModel> nominal, double u_max);
  static ModeSource lookup(std::shared_ptr<const PwaModel> pwa);

  bool is_exact() const { return pwa_ == nullptr; }
  double u_max() const { return u_max_; }

  /// Throws std::out_of_range for |u| > u_max.
  const AffineMode& mode(double u) const;

 private:
  ModeSource() = default;

  std::shared_ptr<const SurrogateModel> nominal_;
  std::shared_ptr<const PwaModel> pwa_;
  double u_max_ = 0.0;
  mutable std::map<double, AffineMode> cache_;
};

/// One mode per transition k°-M .. k°-1 of a full window.
std::vector<AffineMode> identify_modes(const MeasurementWindow& window,
                                       const ModeSource& source);

/// The assembled estimation problem.
///
/// Decision vector layout: [x_0, nu_0 .. nu_{M-1}, x_1 .. x_M], all states in
/// deviation from `shift`. The trailing states are tied to the first block by
/// the dynamics equalities, so the free variables are exactly x_0 and the
/// noise sequence.
struct MheProblem {
  QuadraticProgram qp;
  int n = 0;
  int horizon = 0;
  double shift = 0.0;

  int x_offset(int k) const { return k == 0 ? 0 : n * (horizon + k); }
  int nu_offset(int k) const { return n * (1 + k); }

  std::vector<Vector> states(const Vector& z) const;
  std::vector<Vector> noise(const Vector& z) const;
};

MheProblem assemble_mhe_qp(const MeasurementWindow& window,
                           const std::vector<AffineMode>& modes,
                           const MheWeights& weights, const Vector& anchor,
                           const StateConstraints& bounds, double v_max,
                           const OutputModel& output);

/// Minimizer of the window cost without any bounds, computed by a block QR
/// (square-root information) recursion over the horizon. Directions the data
/// does not determine keep the values of `reference` (x_0 .. x_M; empty
/// means the mean of `anchor` everywhere). Returns x_0 .. x_M.
std::vector<Vector> smooth_unconstrained(const MeasurementWindow& window,
                                         const std::vector<AffineMode>& modes,
                                         const MheWeights& weights, const Vector& anchor,
                                         const OutputModel& output,
                                         const std::vector<Vector>& reference = {});

/// Window cost sum |nu|_Q^2 + sum |y - h(x)|_R^2 + |x_0 - anchor|_S^2
/// evaluated on an explicit trajectory.
double mhe_cost(const MeasurementWindow& window, const std::vector<Vector>& states,
                const std::vector<Vector>& noise, const MheWeights& weights,
                const Vector& anchor, const OutputModel& output);

enum class EstimateStatus { Inactive, Ok, Failed };
std::string_view to_string(EstimateStatus status);

struct MheDiagnostics {
  QpStatus qp_status = QpStatus::IterLimit;
  int qp_iterations = 0;
  double qp_residual = 0.0;
  double objective = 0.0;
  /// |x_M - rolled-forward x_0|_inf through the optimal noise sequence.
  double rollforward_mismatch = 0.0;
  /// The bound-free smoother solution was feasible and replaced the
  /// interior-point iterate.
  bool smoothed = false;
};

struct MheResult {
  EstimateStatus status = EstimateStatus::Inactive;
  std::optional<Vector> estimate;
  std::vector<Vector> trajectory;
  std::vector<Vector> noise;
  MheDiagnostics diagnostics;
};

struct MheSettings {
  int horizon = 40;
  MheWeights weights;
  double v_max = 0.1;
  StateConstraints bounds;
  OutputModel output;
  Vector initial_anchor;
  /// Tight: weakly observable far-field directions are only resolved
  /// once the KKT residual is well below the measurement scale.
  QpSettings qp = [] {
    QpSettings q;
    q.tol = 1e-12;
    return q;
  }();

  static MheSettings from_config(const ScenarioConfig& cfg);
};

class MovingHorizonEstimator {
 public:
  MovingHorizonEstimator(MheSettings settings, ModeSource modes);

  /// Inactive until M+1 records are held; afterwards one QP per call.
  MheResult update(MeasurementRecord rec);

  const Vector& anchor() const { return anchor_; }
  void set_anchor(Vector anchor) { anchor_ = std::move(anchor); }
  const MeasurementWindow& window() const { return window_; }
  const MheSettings& settings() const { return settings_; }

 private:
  MheSettings settings_;
  ModeSource modes_;
  MeasurementWindow window_;
  Vector anchor_;
};

}  // namespace ates
