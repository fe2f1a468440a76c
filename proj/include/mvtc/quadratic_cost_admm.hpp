#pragma once

#include <string>
#include <vector>

#include "mvtc/budget_projection.hpp"
#include "mvtc/linear_cost.hpp"

namespace mvtc {

/// Quadratic-cost problem in x = (w, dw-, dw+):
///
///   minimize   1/2 x'Qx - x'R
///   subject to A1 x + x'C1 x = B1,  A2 x = B2,  lower <= x <= upper
struct QcAssembly
{
  Matrix Q;
  Vector R;
  Matrix A1;
  double B1 = 1.0;
  Matrix A2;
  Vector B2;
  /// Diagonal of C1 = diag(0, delta-, delta+).
  Vector C1diag;
  Vector lower;
  Vector upper;
  Index n = 0;
  CostSpec costs;
  double gamma = 0.0;

  /// A1 x + x'C1 x - B1
  double budget_residual(const Vector &x) const;
  double objective(const Vector &x) const { return 0.5 * x.dot(Q * x) - x.dot(R); }
  Vector weights(const Vector &x) const { return x.head(n); }
  TradeSplit trade(const Vector &x) const { return {x.segment(n, n), x.tail(n)}; }
};

struct AdmmState
{
  Vector x;
  Vector y;
  Vector u;
  /// Absolute penalty in use.
  double phi = 1.0;
  /// Objective scale the residuals are measured in (1 for absolute penalties);
  /// dual_residual = (phi / scale) ||y_k+1 - y_k||.
  double scale = 1.0;
  int k = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct AdmmSettings
{
  double phi = 1.0;
  /// Measure phi relative to the objective scale max(max diag Q, max |R|),
  /// i.e. run ADMM on the objective divided by that scale.
  bool relative_penalty = true;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  int max_iter = 5000;
  /// Convergence also requires |A1 x + x'C1 x - B1| <= budget_tol, so the
  /// returned x (which carries the bounds) satisfies the budget.
  double budget_tol = 1e-8;
  /// Residual balancing: phi doubles (halves) when the primal residual exceeds
  /// (falls below a tenth of) ten times the dual residual.
  bool adaptive_penalty = false;
  bool record_history = false;
  ProjectionMethod projection = ProjectionMethod::Auto;
  /// After convergence, refine x by sequential QP on the linearized budget
  /// row. The refinement is kept only if its weights stay within
  /// polish_radius of those of x (infinity norm) and it satisfies every
  /// constraint. Trades are not compared: without costs they are not unique.
  bool polish = true;
  double polish_radius = 1e-4;
};

struct AdmmIterate
{
  int k = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double phi = 0.0;
};

struct AdmmDiagnostics
{
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Budget residual of the returned x.
  double budget_residual = 0.0;
  /// Number of y-updates that hit the pole (non-unique nearest point).
  int degenerate_projections = 0;
  bool polished = false;
  std::vector<AdmmIterate> history;
};

struct QcResult
{
  RebalanceResult rebalance;
  AdmmDiagnostics diagnostics;
  AdmmState state;
};

QcAssembly assemble_qc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                       double gamma, const BoundOptions &bounds = {});

/// Objective scale used by AdmmSettings::relative_penalty.
double objective_scale(const QcAssembly &a);

/// min 1/2 x'(Q + phi I)x - x'(R + phi (y - u))  s.t. A2 x = B2, bounds.
Vector x_update(const QcAssembly &a, const Vector &y, const Vector &u, double phi,
                const Vector &warm_start = {});

/// Sequential QP from x0: the budget row is linearized at the current point and
/// the Hessian is Q + 2 nu C1 (trade blocks clamped at zero), with nu the
/// budget multiplier of the previous step. Returns false when the refinement
/// fails or leaves the feasible set.
bool polish_solution(const QcAssembly &a, const Vector &x0, Vector &x, double budget_tol = 1e-12);

/// ADMM on the split x = y, with x carrying the trade identity and bounds and
/// y the budget surface. Starts from x = y = (w_tilde, 0, 0), u = 0 unless
/// `initial` is given. The returned portfolio is read from x, after polishing
/// when enabled; `state` keeps the raw iterates. Hitting
/// max_iter is reported through diagnostics.converged; a failed projection
/// throws SolverError.
QcResult admm_solve(const QcAssembly &a, const AdmmSettings &settings = {},
                    const AdmmState *initial = nullptr);

QcResult solve_qc(const Universe &u, const CostSpec &cs, const Vector &w_tilde, double gamma,
                  const AdmmSettings &settings = {}, const BoundOptions &bounds = {});

} // namespace mvtc
