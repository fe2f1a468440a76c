#pragma once

#include "mvtc/market_model.hpp"

namespace mvtc {

/// Dense convex QP
///
///   minimize   1/2 x'Qx - x'R
///   subject to A x = B,  lower <= x <= upper
///
/// Q must be symmetric positive semi-definite. Bounds may be infinite.
struct QpProblem
{
  Matrix Q;
  Vector R;
  Matrix A;
  Vector B;
  Vector lower;
  Vector upper;

  Index dimension() const { return R.size(); }
  double objective(const Vector &x) const { return 0.5 * x.dot(Q * x) - x.dot(R); }
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

const char *to_string(QpStatus status);

struct QpSettings
{
  double tol = 1e-9;
  /// Iteration cap per phase; 0 selects 10 * m + 100.
  int max_iter = 0;
  /// Check symmetry and positive semi-definiteness of Q before solving.
  bool check_convexity = true;
};

struct QpSolution
{
  Vector x;
  double objective = 0.0;
  QpStatus status = QpStatus::IterationLimit;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Multipliers of the (independent) equality rows, in the sign convention
  /// Qx - R + A'nu - z = 0.
  Vector eq_multipliers;
};

/// Primal active-set method on the box constraints, with the equality rows
/// kept in a nullspace basis. Redundant consistent equality rows are dropped;
/// inconsistent ones make the problem infeasible.
QpSolution solve_qp(const QpProblem &p, const QpSettings &settings = {});

/// Same, starting from `warm_start` when it is feasible (otherwise the
/// feasibility phase runs as usual).
QpSolution solve_qp(const QpProblem &p, const QpSettings &settings, const Vector &warm_start);

/// Throws InputError when dimensions or bounds are inconsistent, or when
/// `check_convexity` is set and Q is not symmetric PSD.
void validate_qp(const QpProblem &p, bool check_convexity = true);

} // namespace mvtc
