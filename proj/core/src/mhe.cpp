#include "ates/mhe.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/QR>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ates {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_block(Triplets& trip, int row, int col, const Matrix& block) {
  for (int j = 0; j < block.cols(); ++j)
    for (int i = 0; i < block.rows(); ++i)
      if (block(i, j) != 0.0) trip.emplace_back(row + i, col + j, block(i, j));
}

void add_identity(Triplets& trip, int row, int col, int n, double value) {
  for (int i = 0; i < n; ++i) trip.emplace_back(row + i, col + i, value);
}

bool positive_definite(const Matrix& M) {
  if (M.rows() != M.cols() || !M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::LLT<Matrix> llt(M);
  return llt.info() == Eigen::Success;
}

bool positive_semidefinite(const Matrix& M) {
  if (M.rows() != M.cols() || !M.isApprox(M.transpose(), 1e-12)) {
    if (M.norm() != 0.0) return false;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, M.norm());
}

/// Rows L with L'L = W for a symmetric PSD weight.
Matrix weight_root(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

MeasurementWindow::MeasurementWindow(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw std::invalid_argument("window: horizon must be >= 1");
}

void MeasurementWindow::push(MeasurementRecord rec) {
  if (!records_.empty() && rec.k != records_.back().k + 1)
    throw std::invalid_argument("window: record " + std::to_string(rec.k) +
                                " does not follow " + std::to_string(records_.back().k));
  records_.push_back(std::move(rec));
  if (size() > capacity()) records_.pop_front();
}

MheWeights MheWeights::scaled(int n, int p, double q, double r, double s) {
  return {q * Matrix::Identity(n, n), r * Matrix::Identity(p, p),
          s * Matrix::Identity(n, n)};
}

void MheWeights::validate(int n, int p) const {
  if (Q.rows() != n || R.rows() != p || S.rows() != n)
    throw std::invalid_argument("mhe weights: dimension mismatch");
  if (!positive_definite(Q)) throw std::invalid_argument("mhe weights: Q must be SPD");
  if (!positive_definite(R)) throw std::invalid_argument("mhe weights: R must be SPD");
  if (!positive_semidefinite(S)) throw std::invalid_argument("mhe weights: S must be PSD");
}

ModeSource ModeSource::exact(std::shared_ptr<const SurrogateModel> nominal, double u_max) {
  if (!nominal) throw std::invalid_argument("mode source: null model");
  ModeSource src;
  src.nominal_ = std::move(nominal);
  src.u_max_ = u_max;
  return src;
}

ModeSource ModeSource::lookup(std::shared_ptr<const PwaModel> pwa) {
  if (!pwa) throw std::invalid_argument("mode source: null model");
  ModeSource src;
  src.u_max_ = pwa->u_max();
  src.pwa_ = std::move(pwa);
  return src;
}

const AffineMode& ModeSource::mode(double u) const {
  if (!(std::abs(u) <= u_max_))
    throw std::out_of_range("mode source: input " + std::to_string(u) +
                            " outside the input bounds");
  if (pwa_) return pwa_->mode_for(u);
  auto it = cache_.find(u);
  if (it != cache_.end()) return it->second;
  // References handed out earlier stay valid until the cache is flushed here.
  if (cache_.size() >= 4096) cache_.clear();
  return cache_.emplace(u, linearize_at(u, *nominal_)).first->second;
}

std::vector<AffineMode> identify_modes(const MeasurementWindow& window,
                                       const ModeSource& source) {
  if (!window.full()) throw std::invalid_argument("identify_modes: window not full");
  std::vector<AffineMode> modes;
  modes.reserve(window.horizon());
  for (int k = 0; k < window.horizon(); ++k) modes.push_back(source.mode(window[k].u));
  return modes;
}

std::vector<Vector> MheProblem::states(const Vector& z) const {
  std::vector<Vector> xs;
  xs.reserve(horizon + 1);
  for (int k = 0; k <= horizon; ++k)
    xs.push_back(z.segment(x_offset(k), n).array() + shift);
  return xs;
}

std::vector<Vector> MheProblem::noise(const Vector& z) const {
  std::vector<Vector> nus;
  nus.reserve(horizon);
  for (int k = 0; k < horizon; ++k) nus.push_back(z.segment(nu_offset(k), n));
  return nus;
}

MheProblem assemble_mhe_qp(const MeasurementWindow& window,
                           const std::vector<AffineMode>& modes,
                           const MheWeights& weights, const Vector& anchor,
                           const StateConstraints& bounds, double v_max,
                           const OutputModel& output) {
  const int M = window.horizon();
  if (!window.full()) throw std::invalid_argument("assemble_mhe_qp: window not full");
  if (static_cast<int>(modes.size()) != M)
    throw std::invalid_argument("assemble_mhe_qp: need one mode per transition");
  const int n = static_cast<int>(anchor.size());
  const int p = output.outputs();
  if (output.C.cols() != n || bounds.lower.size() != n || bounds.upper.size() != n)
    throw std::invalid_argument("assemble_mhe_qp: dimension mismatch");
  for (const auto& m : modes)
    if (m.A.rows() != n || m.A.cols() != n)
      throw std::invalid_argument("assemble_mhe_qp: mode dimension mismatch");
  for (int k = 0; k <= M; ++k)
    if (window[k].y.size() != p)
      throw std::invalid_argument("assemble_mhe_qp: measurement dimension mismatch");
  if (!(v_max > 0.0)) throw std::invalid_argument("assemble_mhe_qp: v_max must be positive");
  weights.validate(n, p);

  MheProblem prob;
  prob.n = n;
  prob.horizon = M;
  prob.shift = anchor.mean();
  const double c = prob.shift;
  const Vector ones = Vector::Ones(n);
  const int dim = n * (2 * M + 1);

  QuadraticProgram& qp = prob.qp;
  qp.g = Vector::Zero(dim);
  qp.lb.resize(dim);
  qp.ub.resize(dim);
  qp.b_eq.resize(n * M);

  Triplets h_trip;
  const Matrix CtRC = output.C.transpose() * weights.R * output.C;
  for (int k = 0; k <= M; ++k) {
    const int off = prob.x_offset(k);
    const Vector y_dev = window[k].y - output.C * (c * ones) - output.D * window[k].u - output.e;
    add_block(h_trip, off, off, 2.0 * CtRC);
    qp.g.segment(off, n) -= 2.0 * output.C.transpose() * (weights.R * y_dev);
    qp.constant += y_dev.dot(weights.R * y_dev);
    qp.lb.segment(off, n) = bounds.lower.array() - c;
    qp.ub.segment(off, n) = bounds.upper.array() - c;
  }
  {
    const Vector a_dev = anchor.array() - c;
    add_block(h_trip, 0, 0, 2.0 * weights.S);
    qp.g.head(n) -= 2.0 * weights.S * a_dev;
    qp.constant += a_dev.dot(weights.S * a_dev);
  }
  for (int k = 0; k < M; ++k) {
    const int off = prob.nu_offset(k);
    add_block(h_trip, off, off, 2.0 * weights.Q);
    qp.lb.segment(off, n).setConstant(-v_max);
    qp.ub.segment(off, n).setConstant(v_max);
  }
  qp.H.resize(dim, dim);
  qp.H.setFromTriplets(h_trip.begin(), h_trip.end());

  Triplets a_trip;
  for (int k = 0; k < M; ++k) {
    const int row = n * k;
    const AffineMode& mode = modes[k];
    add_identity(a_trip, row, prob.x_offset(k + 1), n, 1.0);
    add_block(a_trip, row, prob.x_offset(k), -mode.A);
    add_identity(a_trip, row, prob.nu_offset(k), n, -1.0);
    qp.b_eq.segment(row, n) = mode.offset(window[k].t_r) + mode.A * (c * ones) - c * ones;
  }
  qp.A_eq.resize(n * M, dim);
  qp.A_eq.setFromTriplets(a_trip.begin(), a_trip.end());
  return prob;
}

std::vector<Vector> smooth_unconstrained(const MeasurementWindow& window,
                                         const std::vector<AffineMode>& modes,
                                         const MheWeights& weights, const Vector& anchor,
                                         const OutputModel& output,
                                         const std::vector<Vector>& reference) {
  const int M = window.horizon();
  const int n = static_cast<int>(anchor.size());
  const int p = output.outputs();
  if (!window.full() || static_cast<int>(modes.size()) != M)
    throw std::invalid_argument("smooth_unconstrained: need a full window and M modes");
  if (!reference.empty() && static_cast<int>(reference.size()) != M + 1)
    throw std::invalid_argument("smooth_unconstrained: reference needs M+1 states");

  // Work with corrections d_k = x_k - ref_k.
  std::vector<Vector> ref = reference;
  if (ref.empty()) ref.assign(M + 1, Vector::Constant(n, anchor.mean()));

  const Matrix Ls = weight_root(weights.S);
  const Matrix Lr = weight_root(weights.R);
  const Matrix Lq = weight_root(weights.Q);
  const Matrix LrC = Lr * output.C;
  auto y_dev = [&](int k) {
    return Vector(window[k].y - output.apply(ref[k], window[k].u));
  };

  // Information about the current correction as |P d - q|^2.
  Matrix P = Ls;
  Vector q = Ls * (anchor - ref[0]);
  std::vector<Matrix> T11(M), T12(M);
  std::vector<Vector> c1(M);

  for (int k = 0; k < M; ++k) {
    const AffineMode& mode = modes[k];
    const int top = static_cast<int>(P.rows()) + p;
    Matrix block = Matrix::Zero(top + n, 2 * n + 1);
    block.topLeftCorner(P.rows(), n) = P;
    block.block(0, 2 * n, P.rows(), 1) = q;
    block.block(P.rows(), 0, p, n) = LrC;
    block.block(P.rows(), 2 * n, p, 1) = Lr * y_dev(k);
    block.block(top, 0, n, n) = -Lq * mode.A;
    block.block(top, n, n, n) = Lq;
    const Vector f_dev = mode.apply(ref[k], window[k].t_r) - ref[k + 1];
    block.block(top, 2 * n, n, 1) = Lq * f_dev;

    Eigen::HouseholderQR<Matrix> qr(block);
    const Matrix R = qr.matrixQR().topRows(2 * n + 1).triangularView<Eigen::Upper>();
    T11[k] = R.block(0, 0, n, n);
    T12[k] = R.block(0, n, n, n);
    c1[k] = R.block(0, 2 * n, n, 1);
    P = R.block(n, n, n, n);
    q = R.block(n, 2 * n, n, 1);
  }

  Matrix last(P.rows() + p, n + 1);
  last.topLeftCorner(P.rows(), n) = P;
  last.block(0, n, P.rows(), 1) = q;
  last.block(P.rows(), 0, p, n) = LrC;
  last.block(P.rows(), n, p, 1) = Lr * y_dev(M);
  Eigen::HouseholderQR<Matrix> qr(last);
  const Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  std::vector<Vector> d(M + 1);
  d[M] = Eigen::CompleteOrthogonalDecomposition<Matrix>(R.leftCols(n)).solve(R.col(n));
  for (int k = M - 1; k >= 0; --k)
    d[k] = Eigen::CompleteOrthogonalDecomposition<Matrix>(T11[k]).solve(c1[k] - T12[k] * d[k + 1]);
  for (int k = 0; k <= M; ++k) d[k] += ref[k];
  return d;
}

double mhe_cost(const MeasurementWindow& window, const std::vector<Vector>& states,
                const std::vector<Vector>& noise, const MheWeights& weights,
                const Vector& anchor, const OutputModel& output) {
  double cost = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Vector w = window[static_cast<int>(k)].y -
                     output.apply(states[k], window[static_cast<int>(k)].u);
    cost += w.dot(weights.R * w);
  }
  for (const auto& nu : noise) cost += nu.dot(weights.Q * nu);
  const Vector d = states.front() - anchor;
  cost += d.dot(weights.S * d);
  return cost;
}

std::string_view to_string(EstimateStatus status) {
  switch (status) {
    case EstimateStatus::Inactive: return "inactive";
    case EstimateStatus::Ok: return "ok";
    case EstimateStatus::Failed: return "failed";
  }
  return "unknown";
}

MheSettings MheSettings::from_config(const ScenarioConfig& cfg) {
  const StateLayout layout = cfg.layout();
  MheSettings s;
  s.horizon = cfg.mhe_horizon;
  s.weights = MheWeights::scaled(layout.size(), 3, cfg.q_weight, cfg.r_weight, cfg.s_weight);
  s.v_max = cfg.noise.process_bound;
  s.bounds = state_bounds(cfg);
  s.output = OutputModel::borehole_sensors(layout);
  s.initial_anchor = layout.uniform(cfg.initial_guess);
  return s;
}

MovingHorizonEstimator::MovingHorizonEstimator(MheSettings settings, ModeSource modes)
    : settings_(std::move(settings)),
      modes_(std::move(modes)),
      window_(settings_.horizon),
      anchor_(settings_.initial_anchor) {
  const int n = static_cast<int>(anchor_.size());
  settings_.weights.validate(n, settings_.output.outputs());
}

namespace {

std::vector<Vector> roll_forward(const Vector& x0, const std::vector<AffineMode>& modes,
                                 const MeasurementWindow& window,
                                 const std::vector<Vector>& noise) {
  std::vector<Vector> xs{x0};
  for (std::size_t k = 0; k < modes.size(); ++k)
    xs.push_back(modes[k].apply(xs[k], window[static_cast<int>(k)].t_r) + noise[k]);
  return xs;
}

// SVD of the weighted map from x_0 to the window's outputs and arrival term.
Eigen::JacobiSVD<Matrix> observability_svd(const std::vector<AffineMode>& modes,
                                           const MheWeights& weights,
                                           const OutputModel& output) {
  const int n = static_cast<int>(weights.Q.rows());
  const int p = output.outputs();
  const int M = static_cast<int>(modes.size());
  const Matrix Lr = weight_root(weights.R);
  Matrix O(n + (M + 1) * p, n);
  O.topRows(n) = weight_root(weights.S);
  Matrix phi = Matrix::Identity(n, n);
  for (int k = 0; k <= M; ++k) {
    O.block(n + k * p, 0, p, n) = Lr * output.C * phi;
    if (k < M) phi = modes[k].A * phi;
  }
  return Eigen::JacobiSVD<Matrix>(O, Eigen::ComputeFullV);
}

}  // namespace

MheResult MovingHorizonEstimator::update(MeasurementRecord rec) {
  window_.push(std::move(rec));
  MheResult result;
  if (!window_.full()) return result;

  const std::vector<AffineMode> modes = identify_modes(window_, modes_);
  const MheProblem prob = assemble_mhe_qp(window_, modes, settings_.weights, anchor_,
                                          settings_.bounds, settings_.v_max, settings_.output);
  const QpSolution sol = solve_qp(prob.qp, settings_.qp);

  result.trajectory = prob.states(sol.z);
  result.noise = prob.noise(sol.z);
  auto& diag = result.diagnostics;
  diag.qp_status = sol.status;
  diag.qp_iterations = sol.iterations;
  diag.qp_residual = sol.residuals.max();
  diag.objective = mhe_cost(window_, result.trajectory, result.noise, settings_.weights,
                            anchor_, settings_.output);
  Vector rolled = result.trajectory.front();
  for (int k = 0; k < prob.horizon; ++k)
    rolled = modes[k].apply(rolled, window_[k].t_r) + result.noise[k];
  diag.rollforward_mismatch = (rolled - result.trajectory.back()).lpNorm<Eigen::Infinity>();

  // The bound-free minimizer is the QP optimum whenever it is feasible, and
  // the square-root recursion resolves weakly observable directions far more
  // accurately than the normal-equation KKT system. Directions of x_0 that
  // the window barely sees are arbitrary in that minimizer, so a second
  // candidate keeps them at the interior-point values.
  const double tol = settings_.qp.tol;
  auto try_accept = [&](const Vector& x0, const std::vector<Vector>& nus) {
    for (const auto& nu : nus)
      if (nu.lpNorm<Eigen::Infinity>() > settings_.v_max + tol) return false;
    std::vector<Vector> xs = roll_forward(x0, modes, window_, nus);
    for (const auto& x : xs)
      if (!settings_.bounds.contains(x, tol)) return false;
    const double cost = mhe_cost(window_, xs, nus, settings_.weights, anchor_, settings_.output);
    if (cost > diag.objective + 1e-12 * (1.0 + diag.objective)) return false;
    result.trajectory = std::move(xs);
    result.noise = nus;
    diag.objective = cost;
    diag.smoothed = true;
    diag.rollforward_mismatch = 0.0;
    return true;
  };
  {
    const std::vector<Vector> xs = smooth_unconstrained(
        window_, modes, settings_.weights, anchor_, settings_.output, result.trajectory);
    std::vector<Vector> nus(prob.horizon);
    for (int k = 0; k < prob.horizon; ++k)
      nus[k] = xs[k + 1] - modes[k].apply(xs[k], window_[k].t_r);
    if (!try_accept(xs.front(), nus)) {
      // Drop the fewest weak directions that restore feasibility.
      const auto svd = observability_svd(modes, settings_.weights, settings_.output);
      const Vector& sv = svd.singularValues();
      const Vector delta = svd.matrixV().transpose() * (xs.front() - result.trajectory.front());
      int keep = static_cast<int>(sv.size());
      for (double rel = 1e-14; rel <= 1e-6; rel *= 10.0) {
        int k = 0;
        while (k < sv.size() && sv[k] > rel * sv[0]) ++k;
        if (k == keep) continue;
        keep = k;
        const Vector x0 = result.trajectory.front() + svd.matrixV().leftCols(keep) * delta.head(keep);
        if (try_accept(x0, nus)) break;
      }
    }
  }

  // Interior-point iterates may sit a rounding error outside the box.
  result.estimate = settings_.bounds.clamp(result.trajectory.back());
  if (sol.status == QpStatus::Optimal) {
    result.status = EstimateStatus::Ok;
    anchor_ = settings_.bounds.clamp(result.trajectory[1]);
  } else {
    result.status = EstimateStatus::Failed;
  }
  return result;
}

}  // namespace ates
