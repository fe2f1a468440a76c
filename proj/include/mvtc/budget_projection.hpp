#pragma once

#include <array>

#include "mvtc/market_model.hpp"

namespace mvtc {

/// Point to project, partitioned as v_y = (v, dv-, dv+), together with the
/// costs defining the budget surface
///
///   sum_i w_i + dw-_i (c-_i + delta-_i dw-_i) + dw+_i (c+_i + delta+_i dw+_i) = 1.
struct ProjectionInput
{
  Vector v;
  Vector dv_minus;
  Vector dv_plus;
  CostSpec costs;

  static ProjectionInput from_stacked(const Vector &vy, const CostSpec &costs);
  Index size() const { return v.size(); }
  Vector stacked() const;
  void validate() const;
};

/// alpha_0 .. alpha_5 of the multiplier polynomial for homogeneous slopes.
struct QuinticCoefficients
{
  std::array<double, 6> alpha{};

  double operator()(double lambda) const;
};

struct ProjectionResult
{
  Vector y;
  double lambda = 0.0;
  /// 1/2 ||y - v_y||^2
  double distance = 0.0;
  int candidates_considered = 0;
  /// Set when the multiplier sits on a pole and y is one of infinitely many
  /// nearest points.
  bool degenerate = false;
};

enum class ProjectionMethod { Auto, Quintic, Bisection };

/// Budget residual A1 y + y'C1 y - 1 of a stacked point y = (w, dw-, dw+).
double budget_residual(const Vector &y, const CostSpec &costs);

QuinticCoefficients quintic_coefficients(const ProjectionInput &p);

/// Stationary point of the projection for a given multiplier:
///   w = v - lambda,  dw = (dv - lambda c) / (1 + 2 lambda delta).
Vector reconstruct(const ProjectionInput &p, double lambda);

/// Budget residual of reconstruct(p, lambda), evaluated in closed form.
/// Strictly decreasing on (secular_lower_limit(p), inf). Throws InputError at
/// a pole.
double secular_residual(double lambda, const ProjectionInput &p);

/// -1 / (2 max delta), or -inf when every slope is zero.
double secular_lower_limit(const ProjectionInput &p);

/// Projection for homogeneous slopes through the real roots of the quintic.
/// Every root whose reconstruction lies on the surface (residual <= 1e-10) is
/// a candidate; the nearest one wins, ties going to the smaller |lambda|.
ProjectionResult project_homogeneous(const ProjectionInput &p);

/// Projection for arbitrary slopes by bisection on the secular equation.
ProjectionResult project_general(const ProjectionInput &p, double tol = 1e-12);

/// Auto uses the quintic for homogeneous slopes and falls back to bisection
/// when no quintic root reconstructs a feasible point or the selected root
/// lies at or below secular_lower_limit.
ProjectionResult project_budget(const ProjectionInput &p,
                                ProjectionMethod method = ProjectionMethod::Auto);

} // namespace mvtc
