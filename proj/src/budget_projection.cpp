#include "mvtc/budget_projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mvtc/polynomial.hpp"

namespace mvtc {

ProjectionInput ProjectionInput::from_stacked(const Vector &vy, const CostSpec &costs)
{
  if (vy.size() % 3 != 0)
    throw InputError("stacked projection point must have length 3n");
  const Index n = vy.size() / 3;
  ProjectionInput p{vy.head(n), vy.segment(n, n), vy.tail(n), costs};
  p.validate();
  return p;
}

Vector ProjectionInput::stacked() const
{
  Vector out(3 * size());
  out << v, dv_minus, dv_plus;
  return out;
}

void ProjectionInput::validate() const
{
  const Index n = v.size();
  detail::require_size(dv_minus, n, "dv_minus");
  detail::require_size(dv_plus, n, "dv_plus");
  costs.validate(n);
  if (!v.allFinite() || !dv_minus.allFinite() || !dv_plus.allFinite())
    throw InputError("projection point contains non-finite values");
}

double QuinticCoefficients::operator()(double lambda) const
{
  return evaluate_polynomial(alpha, lambda);
}

double budget_residual(const Vector &y, const CostSpec &costs)
{
  const Index n = costs.size();
  detail::require_size(y, 3 * n, "stacked point");
  const auto dm = y.segment(n, n);
  const auto dp = y.tail(n);
  return y.head(n).sum() + costs.c_minus.dot(dm) + costs.c_plus.dot(dp) +
         dm.dot(costs.delta_minus.cwiseProduct(dm)) + dp.dot(costs.delta_plus.cwiseProduct(dp)) -
         1.0;
}

QuinticCoefficients quintic_coefficients(const ProjectionInput &p)
{
  p.validate();
  if (!p.costs.is_homogeneous())
    throw InputError("quintic projection requires identical slopes across assets; use the "
                     "bisection path");
  const double n = static_cast<double>(p.size());
  const double dm = p.size() > 0 ? p.costs.delta_minus[0] : 0.0;
  const double dp = p.size() > 0 ? p.costs.delta_plus[0] : 0.0;
  const Vector &cm = p.costs.c_minus;
  const Vector &cp = p.costs.c_plus;

  const double V = p.v.sum() - 1.0;
  const double Sm = cm.dot(p.dv_minus);
  const double Sp = cp.dot(p.dv_plus);
  const double Cm = cm.squaredNorm();
  const double Cp = cp.squaredNorm();
  const double Qm = p.dv_minus.squaredNorm();
  const double Qp = p.dv_plus.squaredNorm();
  const double dm2 = dm * dm;
  const double dp2 = dp * dp;
  const double mix = dm2 + 4 * dm * dp + dp2;

  QuinticCoefficients q;
  auto &a = q.alpha;
  // The product lambda * (1 + 2 lambda d-)^2 (1 + 2 lambda d+)^2 contributes
  // with a minus sign, hence the negative leading coefficient.
  a[5] = -16 * n * dm2 * dp2;
  a[4] = 16 * dm2 * dp2 * V - 16 * n * dm * dp * (dm + dp) - 4 * dm * dp * (dp * Cm + dm * Cp);
  a[3] = 16 * dm * dp * (dm + dp) * V - 4 * n * mix - 4 * (dm + dp) * (dp * Cm + dm * Cp);
  a[2] = 4 * mix * V - 4 * n * (dm + dp) + 4 * (dp2 * Sm + dm2 * Sp) - (dm + 4 * dp) * Cm -
         (4 * dm + dp) * Cp + 4 * dm * dp * (dp * Qm + dm * Qp);
  a[1] = 4 * (dm + dp) * V - n + 4 * (dp * Sm + dm * Sp) - (Cm + Cp) + 4 * dm * dp * (Qm + Qp);
  a[0] = V + (Sm + Sp) + (dm * Qm + dp * Qp);
  return q;
}

namespace {

void check_pole(double den)
{
  if (den == 0.0 || std::abs(den) < 1e-300)
    throw InputError("secular equation evaluated at a pole");
}

} // namespace

Vector reconstruct(const ProjectionInput &p, double lambda)
{
  const Index n = p.size();
  Vector y(3 * n);
  for (Index i = 0; i < n; ++i) {
    const double den_m = 1.0 + 2.0 * lambda * p.costs.delta_minus[i];
    const double den_p = 1.0 + 2.0 * lambda * p.costs.delta_plus[i];
    check_pole(den_m);
    check_pole(den_p);
    y[i] = p.v[i] - lambda;
    y[n + i] = (p.dv_minus[i] - lambda * p.costs.c_minus[i]) / den_m;
    y[2 * n + i] = (p.dv_plus[i] - lambda * p.costs.c_plus[i]) / den_p;
  }
  return y;
}

double secular_residual(double lambda, const ProjectionInput &p)
{
  const Index n = p.size();
  double r = -1.0;
  for (Index i = 0; i < n; ++i) {
    r += p.v[i] - lambda;
    const double cm = p.costs.c_minus[i], cp = p.costs.c_plus[i];
    const double den_m = 1.0 + 2.0 * lambda * p.costs.delta_minus[i];
    const double den_p = 1.0 + 2.0 * lambda * p.costs.delta_plus[i];
    check_pole(den_m);
    check_pole(den_p);
    const double num_m = p.dv_minus[i] - lambda * cm;
    const double num_p = p.dv_plus[i] - lambda * cp;
    r += cm * num_m / den_m + cp * num_p / den_p;
    r += p.costs.delta_minus[i] * num_m * num_m / (den_m * den_m);
    r += p.costs.delta_plus[i] * num_p * num_p / (den_p * den_p);
  }
  return r;
}

double secular_lower_limit(const ProjectionInput &p)
{
  double dmax = 0.0;
  if (p.size() > 0)
    dmax = std::max(p.costs.delta_minus.maxCoeff(), p.costs.delta_plus.maxCoeff());
  return dmax > 0.0 ? -1.0 / (2.0 * dmax) : -std::numeric_limits<double>::infinity();
}

namespace {

ProjectionResult finish(const ProjectionInput &p, Vector y, double lambda, int candidates)
{
  ProjectionResult r;
  r.distance = 0.5 * (y - p.stacked()).squaredNorm();
  r.y = std::move(y);
  r.lambda = lambda;
  r.candidates_considered = candidates;
  return r;
}

/// Multiplier pinned at the pole: the components with the largest slope are
/// free on a sphere around dv, every point of which is equally near.
ProjectionResult pole_solution(const ProjectionInput &p, double lambda_min)
{
  const Index n = p.size();
  const double dmax = -1.0 / (2.0 * lambda_min);
  const auto on_pole = [&](double delta) { return delta >= dmax * (1.0 - 1e-12); };

  Vector y(3 * n);
  double rest = -1.0;
  double pole_mass = 0.0;
  Index first_pole = -1;
  for (Index i = 0; i < n; ++i) {
    y[i] = p.v[i] - lambda_min;
    rest += y[i];
  }
  for (int side = 0; side < 2; ++side) {
    const Vector &dv = side == 0 ? p.dv_minus : p.dv_plus;
    const Vector &c = side == 0 ? p.costs.c_minus : p.costs.c_plus;
    const Vector &d = side == 0 ? p.costs.delta_minus : p.costs.delta_plus;
    for (Index i = 0; i < n; ++i) {
      const Index k = (side + 1) * n + i;
      if (on_pole(d[i])) {
        // dv = lambda_min c on the pole; contribution is d (t - dv)^2 - d dv^2.
        y[k] = dv[i];
        pole_mass += d[i] * dv[i] * dv[i];
        if (first_pole < 0)
          first_pole = k;
      } else {
        y[k] = (dv[i] - lambda_min * c[i]) / (1.0 + 2.0 * lambda_min * d[i]);
        rest += c[i] * y[k] + d[i] * y[k] * y[k];
      }
    }
  }
  const double K = std::max(0.0, pole_mass - rest);
  if (first_pole >= 0)
    y[first_pole] += std::sqrt(K / dmax);
  ProjectionResult r = finish(p, std::move(y), lambda_min, 1);
  r.degenerate = true;
  return r;
}

} // namespace

ProjectionResult project_homogeneous(const ProjectionInput &p)
{
  const QuinticCoefficients q = quintic_coefficients(p);
  const double dm = p.size() > 0 ? p.costs.delta_minus[0] : 0.0;
  const double dp = p.size() > 0 ? p.costs.delta_plus[0] : 0.0;

  const std::vector<double> roots = real_roots(q.alpha);
  const Vector vy = p.stacked();
  ProjectionResult best;
  bool found = false;
  int candidates = 0;
  for (double lambda : roots) {
    if (std::abs(1.0 + 2.0 * lambda * dm) < 1e-12 || std::abs(1.0 + 2.0 * lambda * dp) < 1e-12)
      continue;
    Vector y = reconstruct(p, lambda);
    if (std::abs(budget_residual(y, p.costs)) > 1e-10)
      continue;
    ++candidates;
    const double dist = 0.5 * (y - vy).squaredNorm();
    const bool better =
        !found || dist < best.distance - 1e-12 ||
        (std::abs(dist - best.distance) <= 1e-12 && std::abs(lambda) < std::abs(best.lambda));
    if (better) {
      best.y = std::move(y);
      best.lambda = lambda;
      best.distance = dist;
      found = true;
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg << "quintic projection: none of the " << roots.size()
        << " real roots reconstructs a point on the budget surface";
    throw SolverError(msg.str());
  }
  best.candidates_considered = candidates;
  return best;
}

ProjectionResult project_general(const ProjectionInput &p, double tol)
{
  p.validate();
  const auto r = [&](double lambda) { return secular_residual(lambda, p); };
  const double r0 = r(0.0);
  if (std::abs(r0) <= tol)
    return finish(p, reconstruct(p, 0.0), 0.0, 1);

  const double lambda_min = secular_lower_limit(p);
  double lo = 0.0, hi = 0.0;
  if (r0 > 0.0) {
    hi = 1.0;
    int doublings = 0;
    while (r(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > 200)
        throw SolverError("budget projection: bracket expansion failed");
    }
  } else if (!std::isfinite(lambda_min)) {
    lo = -1.0;
    int doublings = 0;
    while (r(lo) < 0.0) {
      hi = lo;
      lo *= 2.0;
      if (++doublings > 200)
        throw SolverError("budget projection: bracket expansion failed");
    }
  } else {
    double gap = 1e-9 * std::max(1.0, std::abs(lambda_min));
    lo = lambda_min + gap;
    while (r(lo) <= 0.0) {
      gap *= 1e-3;
      const double next = lambda_min + gap;
      if (next == lambda_min || gap < 1e-15 * std::abs(lambda_min))
        return pole_solution(p, lambda_min);
      hi = lo;
      lo = next;
    }
  }

  double lambda = 0.5 * (lo + hi);
  double best_res = std::numeric_limits<double>::infinity();
  double best_lambda = lambda;
  for (int it = 0; it < 400; ++it) {
    lambda = 0.5 * (lo + hi);
    const double res = r(lambda);
    if (std::abs(res) < best_res) {
      best_res = std::abs(res);
      best_lambda = lambda;
    }
    if (std::abs(res) <= tol)
      break;
    if (res > 0.0)
      lo = lambda;
    else
      hi = lambda;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
      break;
  }
  return finish(p, reconstruct(p, best_lambda), best_lambda, 1);
}

ProjectionResult project_budget(const ProjectionInput &p, ProjectionMethod method)
{
  switch (method) {
  case ProjectionMethod::Quintic:
    return project_homogeneous(p);
  case ProjectionMethod::Bisection:
    return project_general(p);
  case ProjectionMethod::Auto:
    break;
  }
  if (p.costs.is_homogeneous()) {
    try {
      ProjectionResult r = project_homogeneous(p);
      // Roots left of the pole are stationary but never the nearest point.
      if (r.lambda > secular_lower_limit(p))
        return r;
    } catch (const SolverError &) {
    }
  }
  return project_general(p);
}

} // namespace mvtc
