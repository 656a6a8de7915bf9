#pragma once

#include "ates/domain.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <string_view>

namespace ates {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// min 0.5 z'Hz + g'z + constant  s.t.  A_eq z = b_eq,  lb <= z <= ub.
///
/// Infinite bounds are allowed. General polyhedral constraints are expected
/// in slack-augmented form.
struct QuadraticProgram {
  SparseMatrix H;
  Vector g;
  double constant = 0.0;
  SparseMatrix A_eq;
  Vector b_eq;
  Vector lb;
  Vector ub;

  int dim() const { return static_cast<int>(g.size()); }
  int equalities() const { return static_cast<int>(b_eq.size()); }

  /// Unconstrained problem of dimension d with free bounds and no equalities.
  static QuadraticProgram unconstrained(const SparseMatrix& H, const Vector& g);

  /// Throws std::invalid_argument on inconsistent dimensions, asymmetric H
  /// or lb > ub.
  void validate() const;
  double objective(const Vector& z) const;
};

enum class QpStatus { Optimal, Infeasible, IterLimit };
std::string_view to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;   ///< |Hz + g + A'y - mu_l + mu_u|_inf
  double primal = 0.0;         ///< equality and bound violation
  double complementarity = 0.0;
  double dual_sign = 0.0;      ///< most negative bound multiplier, as a magnitude

  double max() const;
};

struct QpSolution {
  Vector z;
  double objective = 0.0;
  Vector y_eq;
  Vector mu_lower;
  Vector mu_upper;
  QpStatus status = QpStatus::IterLimit;
  KktResiduals residuals;
  int iterations = 0;
  bool polished = false;
};

struct QpSettings {
  double tol = 1e-8;
  int max_iter = 10000;
  /// Re-solve the equality-constrained problem on the detected active set
  /// after convergence and keep it when its residuals are smaller.
  bool polish = true;
  /// Non-empty: write the problem to this path before solving.
  std::string dump_path;
};

/// Primal-dual interior point method with Mehrotra predictor-corrector on the
/// regularized KKT system. Deterministic for fixed input.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {});
QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iter);

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Vector& z,
                           const Vector& y_eq, const Vector& mu_lower,
                           const Vector& mu_upper);

/// Coordinate-format text dump (one section per matrix or vector).
void dump_qp(const QuadraticProgram& qp, const std::string& path);

}  // namespace ates
