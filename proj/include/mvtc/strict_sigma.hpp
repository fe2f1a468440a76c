#pragma once

#include <cstdint>

#include "mvtc/quadratic_cost_admm.hpp"

namespace mvtc {

/// Net-return maximization at an exact volatility:
///
///   minimize   -x'R + x'Qx
///   subject to A1 x + x'C1 x = B1,  x'C3 x = B3,  A2 x = B2,  bounds
///
/// with Q = C1 = diag(0, delta-, delta+), R = (mu, -c-, -c+), C3 = diag(Σ, 0, 0)
/// and B3 = sigma*^2.
struct StrictAssembly
{
  Matrix Q;
  Vector R;
  Matrix A1;
  double B1 = 1.0;
  Matrix A2;
  Vector B2;
  Vector C1diag;
  /// Σ, the only non-zero block of C3.
  Matrix sigma;
  double B3 = 0.0;
  Vector lower;
  Vector upper;
  Index n = 0;
  CostSpec costs;
  /// Attainable long-only volatility range [min-variance vol, max asset vol].
  double vol_min = 0.0;
  double vol_max = 0.0;

  double objective(const Vector &x) const { return -x.dot(R) + x.dot(Q * x); }
  double budget_residual(const Vector &x) const;
  /// x'C3 x - B3
  double variance_residual(const Vector &x) const;
};

StrictAssembly assemble_strict(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                               double sigma_star);

struct SphereProjection
{
  Vector y;
  double lambda = 0.0;
  /// Set when the nearest point is not unique (the w-part of v has no
  /// component along the top eigenvector of Σ).
  bool degenerate = false;
};

/// Nearest point to v (length 3n) with w'Σw = B3, where w = v.head(n). Only
/// the w-part moves. Throws InputError when B3 <= 0 or Σ = 0.
SphereProjection project_variance_sphere(const Vector &v, const Matrix &sigma, double B3);

struct StrictSettings
{
  /// Relative to the objective scale, as in AdmmSettings.
  double phi = 1.0;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  int max_iter = 5000;
  /// Both quadratic residuals of x must be below this to certify a start.
  double feas_tol = 1e-6;
  int starts = 5;
  std::uint64_t seed = 20240601;
};

struct StrictStatus
{
  /// Some start produced a point satisfying every constraint within feas_tol.
  bool feasible = false;
  double objective = 0.0;
  double budget_residual = 0.0;
  double variance_residual = 0.0;
  double trade_residual = 0.0;
  double bound_violation = 0.0;
  int iterations = 0;
  /// 0: current portfolio, 1: equal weight, 2+: perturbed starts.
  int start = -1;
  int degenerate_projections = 0;
};

struct StrictResult
{
  RebalanceResult rebalance;
  StrictStatus status;
};

/// Three-block consensus ADMM (QP / budget projection / variance-sphere
/// projection) from several deterministic starts, keeping the best feasible
/// point. The problem is non-convex; the result is feasibility-certified, not
/// globally optimal.
StrictResult solve_strict(const StrictAssembly &a, const StrictSettings &settings = {});

StrictResult solve_strict(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                          double sigma_star, const StrictSettings &settings = {});

} // namespace mvtc
