#include "ates/qp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ates {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDenseLimit = 400;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Factorization of [H + D + dp I, A'; A, -dd I] with refinement against the
/// unregularized operator.
class KktSolver {
 public:
  KktSolver(const SparseMatrix& H, const SparseMatrix& A) : H_(H), A_(A) {
    d_ = static_cast<int>(H.rows());
    m_ = static_cast<int>(A.rows());
    dense_ = d_ + m_ <= kDenseLimit;
  }

  bool factor(const Vector& barrier, double dp, double dd) {
    barrier_ = barrier;
    const int size = d_ + m_;
    if (dense_) {
      Matrix K = Matrix::Zero(size, size);
      K.topLeftCorner(d_, d_) = Matrix(H_);
      K.topLeftCorner(d_, d_).diagonal() += barrier + Vector::Constant(d_, dp);
      if (m_ > 0) {
        const Matrix A = Matrix(A_);
        K.bottomLeftCorner(m_, d_) = A;
        K.topRightCorner(d_, m_) = A.transpose();
        K.bottomRightCorner(m_, m_).diagonal().setConstant(-dd);
      }
      dense_ldlt_.compute(K);
      if (dense_ldlt_.info() != Eigen::Success) return false;
      const Vector diag = dense_ldlt_.vectorD();
      return (diag.array().abs() > 0.0).all() && diag.allFinite();
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(H_.nonZeros() + A_.nonZeros() + size);
    for (int k = 0; k < H_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(H_, k); it; ++it)
        if (it.row() != it.col()) trip.emplace_back(it.row(), it.col(), it.value());
    Vector hdiag = H_.diagonal();
    for (int i = 0; i < d_; ++i) trip.emplace_back(i, i, hdiag[i] + barrier[i] + dp);
    for (int k = 0; k < A_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
        trip.emplace_back(d_ + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), d_ + it.row(), it.value());
      }
    for (int i = 0; i < m_; ++i) trip.emplace_back(d_ + i, d_ + i, -dd);
    SparseMatrix K(size, size);
    K.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      sparse_ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    sparse_ldlt_.factorize(K);
    if (sparse_ldlt_.info() != Eigen::Success) return false;
    const Vector diag = sparse_ldlt_.vectorD();
    return (diag.array().abs() > 0.0).all() && diag.allFinite();
  }

  Vector solve(const Vector& rhs) const {
    Vector x = raw_solve(rhs);
    for (int pass = 0; pass < 3; ++pass) {
      const Vector r = rhs - apply(x);
      if (inf_norm(r) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
      x += raw_solve(r);
    }
    return x;
  }

 private:
  Vector raw_solve(const Vector& rhs) const {
    if (dense_) return dense_ldlt_.solve(rhs);
    return sparse_ldlt_.solve(rhs);
  }

  Vector apply(const Vector& x) const {
    Vector out(d_ + m_);
    const auto xz = x.head(d_);
    out.head(d_) = H_ * xz + barrier_.cwiseProduct(xz);
    if (m_ > 0) {
      const auto xy = x.tail(m_);
      out.head(d_) += A_.transpose() * xy;
      out.tail(m_) = A_ * xz;
    }
    return out;
  }

  const SparseMatrix& H_;
  const SparseMatrix& A_;
  int d_ = 0;
  int m_ = 0;
  bool dense_ = true;
  bool analyzed_ = false;
  Vector barrier_;
  Eigen::LDLT<Matrix> dense_ldlt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> sparse_ldlt_;
};

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

QpSolution polish(const QuadraticProgram& qp, const QpSolution& base);

}  // namespace

QuadraticProgram QuadraticProgram::unconstrained(const SparseMatrix& H, const Vector& g) {
  QuadraticProgram qp;
  qp.H = H;
  qp.g = g;
  qp.A_eq.resize(0, g.size());
  qp.b_eq.resize(0);
  qp.lb = Vector::Constant(g.size(), -kInf);
  qp.ub = Vector::Constant(g.size(), kInf);
  return qp;
}

void QuadraticProgram::validate() const {
  const int d = dim();
  if (H.rows() != d || H.cols() != d)
    throw std::invalid_argument("qp: H must be d x d");
  if (A_eq.cols() != d || A_eq.rows() != b_eq.size())
    throw std::invalid_argument("qp: equality system has inconsistent dimensions");
  if (lb.size() != d || ub.size() != d)
    throw std::invalid_argument("qp: bound vectors must have length d");
  const SparseMatrix asym = SparseMatrix(H.transpose()) - H;
  for (int k = 0; k < asym.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(asym, k); it; ++it)
      if (std::abs(it.value()) > 1e-12)
        throw std::invalid_argument("qp: H is not symmetric");
  for (int i = 0; i < d; ++i) {
    if (std::isnan(lb[i]) || std::isnan(ub[i]) || lb[i] > ub[i])
      throw std::invalid_argument("qp: lb must not exceed ub");
  }
  if (!g.allFinite() || !b_eq.allFinite())
    throw std::invalid_argument("qp: non-finite data");
}

double QuadraticProgram::objective(const Vector& z) const {
  return 0.5 * z.dot(H * z) + g.dot(z) + constant;
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterLimit: return "iter_limit";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, complementarity, dual_sign});
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Vector& z,
                           const Vector& y_eq, const Vector& mu_lower,
                           const Vector& mu_upper) {
  const int d = qp.dim();
  if (z.size() != d || mu_lower.size() != d || mu_upper.size() != d ||
      y_eq.size() != qp.equalities())
    throw std::invalid_argument("kkt_residuals: dimension mismatch");

  KktResiduals res;
  Vector stat = qp.H * z + qp.g - mu_lower + mu_upper;
  if (qp.equalities() > 0) stat += qp.A_eq.transpose() * y_eq;
  res.stationarity = inf_norm(stat);

  double primal = qp.equalities() > 0 ? inf_norm(qp.A_eq * z - qp.b_eq) : 0.0;
  double comp = 0.0;
  double sign = 0.0;
  for (int i = 0; i < d; ++i) {
    primal = std::max({primal, qp.lb[i] - z[i], z[i] - qp.ub[i]});
    if (std::isfinite(qp.lb[i]))
      comp = std::max(comp, std::abs(mu_lower[i] * (z[i] - qp.lb[i])));
    else
      comp = std::max(comp, std::abs(mu_lower[i]));
    if (std::isfinite(qp.ub[i]))
      comp = std::max(comp, std::abs(mu_upper[i] * (qp.ub[i] - z[i])));
    else
      comp = std::max(comp, std::abs(mu_upper[i]));
    sign = std::max({sign, -mu_lower[i], -mu_upper[i]});
  }
  res.primal = std::max(primal, 0.0);
  res.complementarity = comp;
  res.dual_sign = std::max(sign, 0.0);
  return res;
}

void dump_qp(const QuadraticProgram& qp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_qp: cannot open " + path);
  out << std::setprecision(17);
  auto sparse = [&](const char* name, const SparseMatrix& M) {
    out << "%%matrix " << name << ' ' << M.rows() << ' ' << M.cols() << ' '
        << M.nonZeros() << '\n';
    for (int k = 0; k < M.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(M, k); it; ++it)
        out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
  };
  auto dense = [&](const char* name, const Vector& v) {
    out << "%%vector " << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  };
  sparse("H", qp.H);
  dense("g", qp.g);
  out << "%%scalar constant " << qp.constant << '\n';
  sparse("A_eq", qp.A_eq);
  dense("b_eq", qp.b_eq);
  dense("lb", qp.lb);
  dense("ub", qp.ub);
}

QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iter) {
  QpSettings settings;
  settings.tol = tol;
  settings.max_iter = max_iter;
  return solve_qp(qp, settings);
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings) {
  qp.validate();
  if (!settings.dump_path.empty()) dump_qp(qp, settings.dump_path);

  const int d = qp.dim();
  const int m = qp.equalities();
  std::vector<int> lo_idx;
  std::vector<int> up_idx;
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(qp.lb[i])) lo_idx.push_back(i);
    if (std::isfinite(qp.ub[i])) up_idx.push_back(i);
  }
  const int nl = static_cast<int>(lo_idx.size());
  const int nu = static_cast<int>(up_idx.size());
  const int nc = nl + nu;

  // Starting point: box midpoints where both bounds exist, one unit inside
  // one-sided bounds, zero otherwise.
  Vector z(d);
  for (int i = 0; i < d; ++i) {
    const bool has_lo = std::isfinite(qp.lb[i]);
    const bool has_up = std::isfinite(qp.ub[i]);
    if (has_lo && has_up) z[i] = 0.5 * (qp.lb[i] + qp.ub[i]);
    else if (has_lo) z[i] = std::max(0.0, qp.lb[i] + 1.0);
    else if (has_up) z[i] = std::min(0.0, qp.ub[i] - 1.0);
    else z[i] = 0.0;
  }
  Vector y = Vector::Zero(m);
  Vector sl(nl), ml(nl), su(nu), mu(nu);
  for (int j = 0; j < nl; ++j) {
    sl[j] = std::max(z[lo_idx[j]] - qp.lb[lo_idx[j]], 1.0);
    ml[j] = 1.0;
  }
  for (int j = 0; j < nu; ++j) {
    su[j] = std::max(qp.ub[up_idx[j]] - z[up_idx[j]], 1.0);
    mu[j] = 1.0;
  }

  auto full_multipliers = [&](Vector& mlo, Vector& mup) {
    mlo = Vector::Zero(d);
    mup = Vector::Zero(d);
    for (int j = 0; j < nl; ++j) mlo[lo_idx[j]] = ml[j];
    for (int j = 0; j < nu; ++j) mup[up_idx[j]] = mu[j];
  };

  QpSolution best;
  double best_score = kInf;
  auto record = [&](QpStatus status, int iter) {
    QpSolution sol;
    sol.z = z;
    sol.y_eq = y;
    full_multipliers(sol.mu_lower, sol.mu_upper);
    sol.residuals = kkt_residuals(qp, z, y, sol.mu_lower, sol.mu_upper);
    sol.objective = qp.objective(z);
    sol.status = status;
    sol.iterations = iter;
    return sol;
  };

  KktSolver kkt(qp.H, qp.A_eq);
  const SparseMatrix At = qp.A_eq.transpose();
  double reg = 1e-10;
  std::vector<double> primal_history;

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    Vector r_d = qp.H * z + qp.g;
    if (m > 0) r_d += At * y;
    for (int j = 0; j < nl; ++j) r_d[lo_idx[j]] -= ml[j];
    for (int j = 0; j < nu; ++j) r_d[up_idx[j]] += mu[j];
    const Vector r_p = m > 0 ? Vector(qp.A_eq * z - qp.b_eq) : Vector(0);
    Vector r_l(nl), r_u(nu);
    for (int j = 0; j < nl; ++j) r_l[j] = z[lo_idx[j]] - sl[j] - qp.lb[lo_idx[j]];
    for (int j = 0; j < nu; ++j) r_u[j] = z[up_idx[j]] + su[j] - qp.ub[up_idx[j]];
    const double gap = nc > 0 ? (sl.dot(ml) + su.dot(mu)) / nc : 0.0;

    QpSolution current = record(QpStatus::Optimal, iter);
    const double score = current.residuals.max();
    if (score <= settings.tol) return settings.polish ? polish(qp, current) : current;
    if (score < best_score) {
      best_score = score;
      best = current;
    }

    const double p_inf = std::max({inf_norm(r_p), inf_norm(r_l), inf_norm(r_u)});
    primal_history.push_back(p_inf);
    const double dual_size =
        std::max({inf_norm(y), inf_norm(ml), inf_norm(mu)});
    const bool blown_up = dual_size > 1e12 * (1.0 + inf_norm(qp.g));
    const bool stalled =
        iter >= 60 && p_inf > 1e-6 &&
        p_inf > 0.5 * primal_history[primal_history.size() - 41] && gap < 1e-6;
    if (blown_up || stalled) {
      QpSolution sol = record(QpStatus::Infeasible, iter);
      return sol;
    }

    Vector barrier = Vector::Zero(d);
    for (int j = 0; j < nl; ++j) barrier[lo_idx[j]] += ml[j] / sl[j];
    for (int j = 0; j < nu; ++j) barrier[up_idx[j]] += mu[j] / su[j];
    bool factored = false;
    for (int attempt = 0; attempt < 8 && !factored; ++attempt) {
      factored = kkt.factor(barrier, reg, reg);
      if (!factored) reg *= 100.0;
    }
    if (!factored) break;

    auto direction = [&](const Vector& rc_l, const Vector& rc_u, Vector& dz, Vector& dy,
                         Vector& dsl, Vector& dml, Vector& dsu, Vector& dmu) {
      Vector rhs(d + m);
      Vector top = -r_d;
      for (int j = 0; j < nl; ++j)
        top[lo_idx[j]] += (-rc_l[j] - ml[j] * r_l[j]) / sl[j];
      for (int j = 0; j < nu; ++j)
        top[up_idx[j]] -= (-rc_u[j] + mu[j] * r_u[j]) / su[j];
      rhs.head(d) = top;
      if (m > 0) rhs.tail(m) = -r_p;
      const Vector sol = kkt.solve(rhs);
      dz = sol.head(d);
      dy = sol.tail(m);
      dsl.resize(nl);
      dml.resize(nl);
      dsu.resize(nu);
      dmu.resize(nu);
      for (int j = 0; j < nl; ++j) {
        dsl[j] = dz[lo_idx[j]] + r_l[j];
        dml[j] = (-rc_l[j] - ml[j] * dsl[j]) / sl[j];
      }
      for (int j = 0; j < nu; ++j) {
        dsu[j] = -r_u[j] - dz[up_idx[j]];
        dmu[j] = (-rc_u[j] - mu[j] * dsu[j]) / su[j];
      }
    };

    Vector dz, dy, dsl, dml, dsu, dmu;
    Vector rc_l = sl.cwiseProduct(ml);
    Vector rc_u = su.cwiseProduct(mu);
    direction(rc_l, rc_u, dz, dy, dsl, dml, dsu, dmu);

    if (nc > 0) {
      const double a_p = std::min(max_step(sl, dsl), max_step(su, dsu));
      const double a_d = std::min(max_step(ml, dml), max_step(mu, dmu));
      const double a_aff = std::min(a_p, a_d);
      const double gap_aff =
          ((sl + a_aff * dsl).dot(ml + a_aff * dml) + (su + a_aff * dsu).dot(mu + a_aff * dmu)) /
          nc;
      const double sigma = gap > 0.0 ? std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3) : 0.0;
      rc_l += dsl.cwiseProduct(dml) - Vector::Constant(nl, sigma * gap);
      rc_u += dsu.cwiseProduct(dmu) - Vector::Constant(nu, sigma * gap);
      direction(rc_l, rc_u, dz, dy, dsl, dml, dsu, dmu);
    }

    double alpha = 1.0;
    if (nc > 0) {
      alpha = std::min({max_step(sl, dsl), max_step(su, dsu), max_step(ml, dml),
                        max_step(mu, dmu)});
      alpha = std::min(1.0, 0.995 * alpha);
    }
    z += alpha * dz;
    y += alpha * dy;
    sl += alpha * dsl;
    ml += alpha * dml;
    su += alpha * dsu;
    mu += alpha * dmu;
  }

  if (best.z.size() == 0) best = record(QpStatus::IterLimit, settings.max_iter);
  best.status = QpStatus::IterLimit;
  return best;
}

namespace {

QpSolution polish(const QuadraticProgram& qp, const QpSolution& base) {
  const int d = qp.dim();
  const int m = qp.equalities();
  // +1 lower active, -1 upper active, 0 free
  std::vector<int> side(d, 0);
  std::vector<int> active;
  for (int i = 0; i < d; ++i) {
    const double lo_gap = base.z[i] - qp.lb[i];
    const double up_gap = qp.ub[i] - base.z[i];
    if (std::isfinite(qp.lb[i]) && base.mu_lower[i] > lo_gap) side[i] = 1;
    else if (std::isfinite(qp.ub[i]) && base.mu_upper[i] > up_gap) side[i] = -1;
    if (side[i] != 0) active.push_back(i);
  }
  const int na = static_cast<int>(active.size());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(qp.A_eq.nonZeros() + na);
  for (int k = 0; k < qp.A_eq.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(qp.A_eq, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  Vector rhs_eq(m + na);
  if (m > 0) rhs_eq.head(m) = qp.b_eq;
  for (int j = 0; j < na; ++j) {
    const int i = active[j];
    trip.emplace_back(m + j, i, 1.0);
    rhs_eq[m + j] = side[i] == 1 ? qp.lb[i] : qp.ub[i];
  }
  SparseMatrix A_aug(m + na, d);
  A_aug.setFromTriplets(trip.begin(), trip.end());

  KktSolver kkt(qp.H, A_aug);
  double reg = 1e-12;
  bool factored = false;
  for (int attempt = 0; attempt < 6 && !factored; ++attempt) {
    factored = kkt.factor(Vector::Zero(d), reg, reg);
    if (!factored) reg *= 100.0;
  }
  if (!factored) return base;

  Vector rhs(d + m + na);
  rhs.head(d) = -qp.g;
  rhs.tail(m + na) = rhs_eq;
  const Vector sol = kkt.solve(rhs);
  if (!sol.allFinite()) return base;

  QpSolution out = base;
  out.z = sol.head(d);
  out.y_eq = sol.segment(d, m);
  out.mu_lower.setZero();
  out.mu_upper.setZero();
  for (int j = 0; j < na; ++j) {
    const int i = active[j];
    const double w = sol[d + m + j];
    if (side[i] == 1) out.mu_lower[i] = -w;
    else out.mu_upper[i] = w;
  }
  out.residuals = kkt_residuals(qp, out.z, out.y_eq, out.mu_lower, out.mu_upper);
  if (out.residuals.max() > base.residuals.max()) return base;
  out.objective = qp.objective(out.z);
  out.polished = true;
  return out;
}

}  // namespace

}  // namespace ates
