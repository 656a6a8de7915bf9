#pragma once

#include "ates/baselines.hpp"
#include "ates/domain.hpp"
#include "ates/mhe.hpp"
#include "ates/pwa.hpp"
#include "ates/surrogate.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ates {

/// Synthetic plant run: states x_0 .. x_{T-1}, the input applied at each
/// step and the noisy measurement of each state.
struct TruthRun {
  std::uint64_t seed = 0;
  ConductivityField field;
  std::vector<double> u;
  std::vector<double> t_r;
  std::vector<Vector> states;
  std::vector<Vector> measurements;

  int steps() const { return static_cast<int>(states.size()); }
  MeasurementRecord record(int k) const { return {k, measurements[k], u[k], t_r[k]}; }
};

/// Blocks of heating, inactivity, cooling and inactivity with 4..12 steps
/// each; every active step draws its flow magnitude from [0.3, 1] u_max.
std::vector<double> block_inputs(int steps, double u_max, std::mt19937_64& rng);

/// Truth run from a storage at ambient temperature with a perturbed
/// conductivity field, uniform process noise in the configured box (state
/// clipped to the constraints afterwards) and Gaussian measurement noise.
/// Zero noise settings are allowed.
TruthRun generate_truth(const ScenarioConfig& cfg);

/// States visited by the nominal model under long heating / idle / cooling
/// blocks with random flows, after a burn-in. Used by the accuracy study.
std::vector<Vector> accuracy_state_pool(const ScenarioConfig& cfg, int steps = 3000,
                                        int burn_in = 100, std::uint64_t seed = 7);

enum class EstimatorKind { Mhe, Ukf, LtvKf };
std::string_view to_string(EstimatorKind kind);
/// Throws std::invalid_argument for unknown names.
EstimatorKind estimator_from_string(std::string_view name);

struct EstimateRow {
  int k = 0;
  std::string status;
  std::optional<Vector> estimate;
  double err_mean = 0.0;
  double err_max = 0.0;   ///< max |error|
  double err_q025 = 0.0;
  double err_q975 = 0.0;
  int violations = 0;     ///< entries outside the state constraints
  int qp_iterations = 0;
  double qp_residual = 0.0;
};

struct EstimatorTrace {
  EstimatorKind kind = EstimatorKind::Mhe;
  std::vector<EstimateRow> rows;

  int violation_steps() const;
  int violation_entries() const;
  /// Mean of q975 - q025 over steps in [from, to) that carry an estimate.
  double mean_band_width(int from, int to) const;
  /// Largest |mean error| over steps >= from that carry an estimate.
  double max_abs_mean_error(int from) const;
  /// Root mean square error over all states at step k.
  double rms_error(int k, const TruthRun& run) const;
};

struct ComparisonReport {
  std::vector<EstimatorTrace> traces;

  const EstimatorTrace& trace(EstimatorKind kind) const;
};

/// Feeds the whole record stream to one estimator built from the nominal
/// model. A diverged filter keeps reporting its last belief.
EstimatorTrace run_estimator(EstimatorKind kind, const TruthRun& run, const ScenarioConfig& cfg);

/// MHE, UKF and LTV-KF on the same run, each in its own task.
ComparisonReport compare_estimators(const TruthRun& run, const ScenarioConfig& cfg);

/// Fills the error columns of a row from an estimate and the true state.
void score_estimate(EstimateRow& row, const Vector& estimate, const Vector& truth,
                    const StateConstraints& bounds);

}  // namespace ates
