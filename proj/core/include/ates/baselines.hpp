#pragma once

#include "ates/domain.hpp"
#include "ates/mhe.hpp"
#include "ates/pwa.hpp"
#include "ates/surrogate.hpp"

#include <memory>
#include <optional>
#include <string_view>

namespace ates {

struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  static GaussianBelief isotropic(const Vector& mean, double std);
};

/// Symmetrize and clip negative eigenvalues to zero. Throws
/// std::domain_error on non-finite entries.
Matrix clip_psd(const Matrix& P);

struct NoiseSpec {
  double measurement_std = 0.0333;
  double process_std = 0.1 / 3.0;

  /// Process std from a box half-width that holds 99.73 % (three sigma).
  static NoiseSpec from_settings(const NoiseSettings& noise);
  void validate() const;
};

struct UnscentedParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = 0.0;
};

/// Kalman measurement update with the Joseph-form covariance. On a failed
/// factorization the innovation covariance is inflated by 1e-9 on the
/// diagonal and retried once. Returns false on divergence.
bool kalman_correct(GaussianBelief& belief, const Vector& y, double u,
                    const OutputModel& output, double measurement_std);

enum class FilterStatus { Ok, Diverged };
std::string_view to_string(FilterStatus status);

/// Common driver: each record first predicts with the previous record's
/// input (nothing on the first record), then corrects with the new
/// measurement. After divergence the filter stops and keeps the last finite
/// belief.
class KalmanFilterBase {
 public:
  virtual ~KalmanFilterBase() = default;

  FilterStatus update(const MeasurementRecord& rec);
  const GaussianBelief& belief() const { return belief_; }
  FilterStatus status() const { return status_; }

 protected:
  KalmanFilterBase(GaussianBelief initial, NoiseSpec noise, OutputModel output);

  /// Returns false on divergence.
  virtual bool predict(double u, double t_r) = 0;

  GaussianBelief belief_;
  NoiseSpec noise_;
  OutputModel output_;

 private:
  FilterStatus status_ = FilterStatus::Ok;
  std::optional<std::pair<double, double>> pending_;
};

/// Additive-noise unscented Kalman filter on the surrogate step.
class UnscentedKalmanFilter : public KalmanFilterBase {
 public:
  UnscentedKalmanFilter(std::shared_ptr<const SurrogateModel> model, GaussianBelief initial,
                        NoiseSpec noise, OutputModel output, UnscentedParams params = {});

 private:
  bool predict(double u, double t_r) override;

  std::shared_ptr<const SurrogateModel> model_;
  UnscentedParams params_;
};

/// Kalman filter on the exact linearization at each recorded input.
class LtvKalmanFilter : public KalmanFilterBase {
 public:
  LtvKalmanFilter(std::shared_ptr<const SurrogateModel> model, double u_max,
                  GaussianBelief initial, NoiseSpec noise, OutputModel output);

 private:
  bool predict(double u, double t_r) override;

  ModeSource modes_;
};

}  // namespace ates
