#include "ates/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace ates {

GaussianBelief GaussianBelief::isotropic(const Vector& mean, double std) {
  const auto n = mean.size();
  return {mean, Matrix::Identity(n, n) * (std * std)};
}

Matrix clip_psd(const Matrix& P) {
  if (!P.allFinite()) throw std::domain_error("covariance has non-finite entries");
  const Matrix sym = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw std::domain_error("covariance eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  Matrix out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

NoiseSpec NoiseSpec::from_settings(const NoiseSettings& noise) {
  return {noise.measurement_std, noise.process_bound / 3.0};
}

void NoiseSpec::validate() const {
  if (!(measurement_std > 0.0)) throw std::invalid_argument("noise: measurement std must be positive");
  if (!(process_std > 0.0)) throw std::invalid_argument("noise: process std must be positive");
}

bool kalman_correct(GaussianBelief& belief, const Vector& y, double u,
                    const OutputModel& output, double measurement_std) {
  const Matrix& C = output.C;
  const auto p = C.rows();
  const Matrix Rm = Matrix::Identity(p, p) * (measurement_std * measurement_std);
  const Matrix PCt = belief.covariance * C.transpose();
  Matrix S = C * PCt + Rm;

  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    S.diagonal().array() += 1e-9;
    llt.compute(S);
    if (llt.info() != Eigen::Success) return false;
  }
  const Matrix K = llt.solve(PCt.transpose()).transpose();
  belief.mean += K * (y - output.apply(belief.mean, u));

  const auto n = belief.mean.size();
  const Matrix IKC = Matrix::Identity(n, n) - K * C;
  belief.covariance = IKC * belief.covariance * IKC.transpose() + K * Rm * K.transpose();
  try {
    belief.covariance = clip_psd(belief.covariance);
  } catch (const std::domain_error&) {
    return false;
  }
  return belief.mean.allFinite();
}

std::string_view to_string(FilterStatus status) {
  return status == FilterStatus::Ok ? "ok" : "diverged";
}

KalmanFilterBase::KalmanFilterBase(GaussianBelief initial, NoiseSpec noise, OutputModel output)
    : belief_(std::move(initial)), noise_(noise), output_(std::move(output)) {
  noise_.validate();
  const auto n = belief_.mean.size();
  if (belief_.covariance.rows() != n || belief_.covariance.cols() != n)
    throw std::invalid_argument("belief: covariance dimension mismatch");
  if (output_.C.cols() != n) throw std::invalid_argument("belief: output model dimension mismatch");
  belief_.covariance = clip_psd(belief_.covariance);
}

FilterStatus KalmanFilterBase::update(const MeasurementRecord& rec) {
  if (status_ == FilterStatus::Diverged) return status_;
  const GaussianBelief previous = belief_;
  bool ok = true;
  if (pending_) ok = predict(pending_->first, pending_->second);
  ok = ok && kalman_correct(belief_, rec.y, rec.u, output_, noise_.measurement_std);
  pending_ = std::make_pair(rec.u, rec.t_r);
  if (!ok) {
    status_ = FilterStatus::Diverged;
    belief_ = previous;
  }
  return status_;
}

UnscentedKalmanFilter::UnscentedKalmanFilter(std::shared_ptr<const SurrogateModel> model,
                                             GaussianBelief initial, NoiseSpec noise,
                                             OutputModel output, UnscentedParams params)
    : KalmanFilterBase(std::move(initial), noise, std::move(output)),
      model_(std::move(model)),
      params_(params) {
  const double n = static_cast<double>(belief_.mean.size());
  if (!(params_.alpha > 0.0) || !(params_.alpha * params_.alpha * (n + params_.kappa) > 0.0))
    throw std::invalid_argument("ukf: sigma-point scaling must be positive");
}

bool UnscentedKalmanFilter::predict(double u, double t_r) {
  const auto n = belief_.mean.size();
  const double nd = static_cast<double>(n);
  const double a2 = params_.alpha * params_.alpha;
  const double lambda = a2 * (nd + params_.kappa) - nd;
  const double scale = nd + lambda;

  Matrix P = scale * belief_.covariance;
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success) {
    P.diagonal().array() += 1e-9;
    llt.compute(P);
    if (llt.info() != Eigen::Success) return false;
  }
  const Matrix L = llt.matrixL();

  const double wm0 = lambda / scale;
  const double wc0 = wm0 + (1.0 - a2 + params_.beta);
  const double wi = 0.5 / scale;

  std::vector<Vector> sigma;
  sigma.reserve(2 * n + 1);
  sigma.push_back(model_->step(belief_.mean, u, t_r));
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma.push_back(model_->step(belief_.mean + L.col(i), u, t_r));
    sigma.push_back(model_->step(belief_.mean - L.col(i), u, t_r));
  }

  Vector mean = wm0 * sigma[0];
  for (std::size_t i = 1; i < sigma.size(); ++i) mean += wi * sigma[i];
  Matrix cov = Matrix::Identity(n, n) * (noise_.process_std * noise_.process_std);
  Vector d = sigma[0] - mean;
  cov.noalias() += wc0 * d * d.transpose();
  for (std::size_t i = 1; i < sigma.size(); ++i) {
    d = sigma[i] - mean;
    cov.noalias() += wi * d * d.transpose();
  }
  belief_.mean = std::move(mean);
  try {
    belief_.covariance = clip_psd(cov);
  } catch (const std::domain_error&) {
    return false;
  }
  return belief_.mean.allFinite();
}

LtvKalmanFilter::LtvKalmanFilter(std::shared_ptr<const SurrogateModel> model, double u_max,
                                 GaussianBelief initial, NoiseSpec noise, OutputModel output)
    : KalmanFilterBase(std::move(initial), noise, std::move(output)),
      modes_(ModeSource::exact(std::move(model), u_max)) {}

bool LtvKalmanFilter::predict(double u, double t_r) {
  const AffineMode& mode = modes_.mode(u);
  belief_.mean = mode.apply(belief_.mean, t_r);
  Matrix cov = mode.A * belief_.covariance * mode.A.transpose();
  cov.diagonal().array() += noise_.process_std * noise_.process_std;
  try {
    belief_.covariance = clip_psd(cov);
  } catch (const std::domain_error&) {
    return false;
  }
  return belief_.mean.allFinite();
}

}  // namespace ates
