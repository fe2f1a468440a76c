#include "mvtc/quadratic_cost_admm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvtc {

double QcAssembly::budget_residual(const Vector &x) const
{
  return (A1 * x)(0) + x.dot(C1diag.cwiseProduct(x)) - B1;
}

QcAssembly assemble_qc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                       double gamma, const BoundOptions &bounds)
{
  const Index n = u.size();
  cs.validate(n);
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw InputError("risk tolerance gamma must be finite and non-negative");
  detail::check_current_portfolio(w_tilde, n, bounds);

  QcAssembly a;
  a.n = n;
  a.costs = cs;
  a.gamma = gamma;
  a.Q = Matrix::Zero(3 * n, 3 * n);
  a.Q.topLeftCorner(n, n) = u.cov;
  a.Q.diagonal().segment(n, n) = 2.0 * gamma * cs.delta_minus;
  a.Q.diagonal().tail(n) = 2.0 * gamma * cs.delta_plus;
  a.R.resize(3 * n);
  a.R << gamma * u.mu, -gamma * cs.c_minus, -gamma * cs.c_plus;

  a.A1.resize(1, 3 * n);
  a.A1 << Vector::Ones(n).transpose(), cs.c_minus.transpose(), cs.c_plus.transpose();
  a.B1 = 1.0;
  a.A2 = Matrix::Zero(n, 3 * n);
  a.A2.block(0, 0, n, n).setIdentity();
  a.A2.block(0, n, n, n).setIdentity();
  a.A2.block(0, 2 * n, n, n) = -Matrix::Identity(n, n);
  a.B2 = w_tilde;
  a.C1diag.resize(3 * n);
  a.C1diag << Vector::Zero(n), cs.delta_minus, cs.delta_plus;
  augmented_bounds(w_tilde, bounds, a.lower, a.upper);
  return a;
}

namespace {

QpProblem x_problem(const QcAssembly &a, double phi)
{
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw InputError("ADMM penalty phi must be positive and finite");
  QpProblem p;
  p.Q = a.Q;
  p.Q.diagonal().array() += phi;
  p.R = a.R;
  p.A = a.A2;
  p.B = a.B2;
  p.lower = a.lower;
  p.upper = a.upper;
  return p;
}

Vector solve_x(QpProblem &p, const QcAssembly &a, const Vector &y, const Vector &u, double phi,
               const Vector &warm_start, const QpSettings &settings)
{
  p.R = a.R + phi * (y - u);
  const QpSolution s = warm_start.size() == p.dimension() ? solve_qp(p, settings, warm_start)
                                                          : solve_qp(p, settings);
  if (s.status != QpStatus::Optimal) {
    std::ostringstream msg;
    msg << "ADMM x-update failed: " << to_string(s.status);
    throw SolverError(msg.str());
  }
  return s.x;
}

std::string dump(const Vector &v)
{
  std::ostringstream out;
  out.precision(17);
  for (Index i = 0; i < v.size(); ++i)
    out << (i ? ", " : "") << v[i];
  return out.str();
}

} // namespace

double objective_scale(const QcAssembly &a)
{
  double s = a.Q.diagonal().cwiseAbs().maxCoeff();
  if (a.R.size() > 0)
    s = std::max(s, a.R.cwiseAbs().maxCoeff());
  return s > 0.0 ? s : 1.0;
}

Vector x_update(const QcAssembly &a, const Vector &y, const Vector &u, double phi,
                const Vector &warm_start)
{
  detail::require_size(y, 3 * a.n, "y");
  detail::require_size(u, 3 * a.n, "u");
  QpProblem p = x_problem(a, phi);
  return solve_x(p, a, y, u, phi, warm_start, {});
}

bool polish_solution(const QcAssembly &a, const Vector &x0, Vector &x, double budget_tol)
{
  const Index n = a.n;
  const Index m = 3 * n;
  QpProblem p;
  p.A.resize(n + 1, m);
  p.A.bottomRows(n) = a.A2;
  p.B.resize(n + 1);
  p.B.tail(n) = a.B2;
  p.lower = a.lower;
  p.upper = a.upper;
  QpSettings qs;
  qs.check_convexity = false;

  x = x0;
  double nu = 0.0;
  for (int it = 0; it < 30; ++it) {
    const Vector cx = a.C1diag.cwiseProduct(x);
    p.Q = a.Q;
    p.Q.diagonal() += 2.0 * nu * a.C1diag;
    p.Q.diagonal().tail(2 * n) = p.Q.diagonal().tail(2 * n).cwiseMax(0.0);
    p.R = a.R + (p.Q - a.Q) * x;
    p.A.row(0) = a.A1.row(0) + 2.0 * cx.transpose();
    p.B[0] = a.B1 + x.dot(cx);
    const QpSolution s = solve_qp(p, qs, x);
    if (s.status != QpStatus::Optimal || s.eq_multipliers.size() != n + 1)
      return false;
    const double step = (s.x - x).cwiseAbs().maxCoeff();
    x = s.x;
    nu = s.eq_multipliers[0];
    if (step <= 1e-14 && std::abs(a.budget_residual(x)) <= budget_tol)
      break;
  }
  const double feas_tol = 1e-12;
  return x.allFinite() && std::abs(a.budget_residual(x)) <= budget_tol &&
         (a.A2 * x - a.B2).cwiseAbs().maxCoeff() <= 1e-10 &&
         (x - a.lower).minCoeff() >= -feas_tol && (a.upper - x).minCoeff() >= -feas_tol;
}

QcResult admm_solve(const QcAssembly &a, const AdmmSettings &settings, const AdmmState *initial)
{
  const Index n = a.n;
  const Index m = 3 * n;
  if (!(settings.eps_abs >= 0.0) || !(settings.eps_rel >= 0.0) || settings.max_iter < 1)
    throw InputError("ADMM tolerances must be non-negative and max_iter positive");

  AdmmState st;
  if (initial) {
    st = *initial;
    detail::require_size(st.x, m, "initial x");
    detail::require_size(st.y, m, "initial y");
    detail::require_size(st.u, m, "initial u");
    st.k = 0;
  } else {
    st.x = Vector::Zero(m);
    st.x.head(n) = a.B2;
    st.y = st.x;
    st.u = Vector::Zero(m);
    st.scale = settings.relative_penalty ? objective_scale(a) : 1.0;
    st.phi = settings.phi * st.scale;
  }

  QpProblem p = x_problem(a, st.phi);
  validate_qp(p, true);
  QpSettings qs;
  qs.check_convexity = false;

  QcResult out;
  AdmmDiagnostics &diag = out.diagnostics;
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  Vector y_prev;
  for (int k = 1; k <= settings.max_iter; ++k) {
    st.x = solve_x(p, a, st.y, st.u, st.phi, st.x, qs);

    y_prev = st.y;
    const Vector v = st.x + st.u;
    ProjectionResult proj;
    try {
      proj = project_budget(ProjectionInput::from_stacked(v, a.costs), settings.projection);
    } catch (const Error &e) {
      std::ostringstream msg;
      msg << "ADMM y-update failed at iteration " << k << ": " << e.what() << "\n  x = ["
          << dump(st.x) << "]\n  u = [" << dump(st.u) << "]";
      throw SolverError(msg.str());
    }
    if (proj.degenerate)
      ++diag.degenerate_projections;
    st.y = std::move(proj.y);
    st.u += st.x - st.y;
    st.k = k;

    st.primal_residual = (st.x - st.y).norm();
    const double phi_n = st.phi / st.scale;
    st.dual_residual = phi_n * (st.y - y_prev).norm();
    const double eps_pri =
        settings.eps_abs * sqrt_m + settings.eps_rel * std::max(st.x.norm(), st.y.norm());
    const double eps_dual = settings.eps_abs * sqrt_m + settings.eps_rel * phi_n * st.u.norm();
    if (settings.record_history)
      diag.history.push_back({k, st.primal_residual, st.dual_residual, st.phi});
    if (st.primal_residual <= eps_pri && st.dual_residual <= eps_dual &&
        std::abs(a.budget_residual(st.x)) <= settings.budget_tol) {
      diag.converged = true;
      break;
    }

    if (settings.adaptive_penalty) {
      double scale = 1.0;
      if (st.primal_residual > 10.0 * st.dual_residual)
        scale = 2.0;
      else if (st.dual_residual > 10.0 * st.primal_residual)
        scale = 0.5;
      if (scale != 1.0) {
        st.phi *= scale;
        st.u /= scale;
        p = x_problem(a, st.phi);
      }
    }
  }

  diag.iterations = st.k;
  diag.primal_residual = st.primal_residual;
  diag.dual_residual = st.dual_residual;

  Vector x = st.x;
  if (diag.converged && settings.polish) {
    Vector refined;
    if (polish_solution(a, st.x, refined) &&
        (refined - st.x).head(n).cwiseAbs().maxCoeff() <= settings.polish_radius) {
      x = std::move(refined);
      diag.polished = true;
    }
  }
  diag.budget_residual = a.budget_residual(x);

  RebalanceResult &r = out.rebalance;
  r.gamma = a.gamma;
  r.w = a.weights(x);
  r.trade = a.trade(x);
  r.cost_paid = trade_cost(a.costs, CostModel::Quadratic, r.trade);
  r.complementary = detail::complementary(r.trade);
  out.state = std::move(st);
  return out;
}

QcResult solve_qc(const Universe &u, const CostSpec &cs, const Vector &w_tilde, double gamma,
                  const AdmmSettings &settings, const BoundOptions &bounds)
{
  return admm_solve(assemble_qc(u, cs, w_tilde, gamma, bounds), settings);
}

} // namespace mvtc
