#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into the solvers under test.

#include "ates/qp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace ates::oracle {

/// Random convex QP of dimension d: H = M M' + 0.05 I, finite boxes around
/// zero and, when `equality` is set, one equality row satisfied by a point
/// inside the box.
inline QuadraticProgram random_box_qp(int d, bool equality, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> width(0.2, 2.0);
  Matrix M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = n01(rng);
  const Matrix H = M * M.transpose() + 0.05 * Matrix::Identity(d, d);
  Vector g(d);
  for (int i = 0; i < d; ++i) g[i] = 3.0 * n01(rng);

  QuadraticProgram qp = QuadraticProgram::unconstrained(H.sparseView(), g);
  for (int i = 0; i < d; ++i) {
    qp.lb[i] = -width(rng);
    qp.ub[i] = width(rng);
  }
  if (equality) {
    Vector a(d), inside(d);
    for (int i = 0; i < d; ++i) {
      a[i] = n01(rng);
      inside[i] = 0.5 * (qp.lb[i] + qp.ub[i]);
    }
    Matrix A = a.transpose();
    qp.A_eq = A.sparseView();
    qp.b_eq = Vector::Constant(1, a.dot(inside));
  }
  return qp;
}

struct EnumeratedSolution {
  Vector z;
  double objective = std::numeric_limits<double>::infinity();
};

/// Tries every assignment of each variable to {free, at lower, at upper},
/// solves the KKT system of the reduced equality problem and keeps the best
/// point that is primal feasible with correctly signed multipliers.
/// Exponential in d; meant for d <= 8.
inline std::optional<EnumeratedSolution> enumerate_active_sets(const QuadraticProgram& qp,
                                                               double tol = 1e-9) {
  const int d = qp.dim();
  const int m = qp.equalities();
  const Matrix H(qp.H);
  const Matrix A = m > 0 ? Matrix(qp.A_eq) : Matrix(0, d);

  std::optional<EnumeratedSolution> best;
  std::vector<int> state(d, 0);  // 0 free, 1 lower, 2 upper
  long total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < d; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
    }
    std::vector<int> fixed;
    for (int i = 0; i < d; ++i)
      if (state[i] != 0) fixed.push_back(i);
    const int nf = static_cast<int>(fixed.size());

    // Unknowns: z (d), equality multipliers (m), bound multipliers (nf).
    const int dim = d + m + nf;
    Matrix K = Matrix::Zero(dim, dim);
    Vector rhs = Vector::Zero(dim);
    K.topLeftCorner(d, d) = H;
    K.block(0, d, d, m) = A.transpose();
    K.block(d, 0, m, d) = A;
    rhs.head(d) = -qp.g;
    if (m > 0) rhs.segment(d, m) = qp.b_eq;
    for (int j = 0; j < nf; ++j) {
      const int i = fixed[j];
      // Stationarity: H z + g + A'y - mu_l + mu_u = 0 with a signed
      // multiplier s_j = mu_u - mu_l.
      K(i, d + m + j) = 1.0;
      K(d + m + j, i) = 1.0;
      rhs[d + m + j] = state[i] == 1 ? qp.lb[i] : qp.ub[i];
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector z = sol.head(d);

    bool ok = true;
    for (int i = 0; i < d && ok; ++i)
      ok = z[i] >= qp.lb[i] - tol && z[i] <= qp.ub[i] + tol;
    for (int j = 0; j < nf && ok; ++j) {
      const double s = sol[d + m + j];
      ok = state[fixed[j]] == 1 ? s <= tol : s >= -tol;
    }
    if (!ok) continue;
    const double f = qp.objective(z);
    if (!best || f < best->objective) best = EnumeratedSolution{z, f};
  }
  return best;
}

/// Textbook linear Kalman filter step: predict through (A, f), then
/// correct with y = C x + noise.
struct KalmanOracle {
  Vector mean;
  Matrix P;

  void predict(const Matrix& A, const Vector& f, double process_var) {
    mean = A * mean + f;
    P = A * P * A.transpose() + process_var * Matrix::Identity(P.rows(), P.cols());
  }

  void correct(const Matrix& C, const Vector& y, double meas_var) {
    const Matrix S = C * P * C.transpose() + meas_var * Matrix::Identity(C.rows(), C.rows());
    const Matrix K = P * C.transpose() * S.inverse();
    mean += K * (y - C * mean);
    const Matrix I = Matrix::Identity(P.rows(), P.cols());
    P = (I - K * C) * P * (I - K * C).transpose() + meas_var * K * K.transpose();
  }
};

}  // namespace ates::oracle
