#include "mvtc/linear_cost.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mvtc {

namespace detail {

void check_current_portfolio(const Vector &w_tilde, Index n, const BoundOptions &bounds)
{
  require_size(w_tilde, n, "current portfolio");
  if (!w_tilde.allFinite())
    throw InputError("current portfolio contains non-finite weights");
  if (bounds.long_only && (w_tilde.minCoeff() < 0.0 || w_tilde.maxCoeff() > 1.0))
    throw InputError("current portfolio must lie in [0, 1]^n for long-only problems");
}

bool complementary(const TradeSplit &t, double tol)
{
  return t.dw_minus.size() == 0 || t.dw_minus.cwiseMin(t.dw_plus).maxCoeff() <= tol;
}

} // namespace detail

void augmented_bounds(const Vector &w_tilde, const BoundOptions &bounds, Vector &lower,
                      Vector &upper)
{
  const Index n = w_tilde.size();
  lower = Vector::Zero(3 * n);
  upper.resize(3 * n);
  if (bounds.long_only) {
    upper << Vector::Ones(n), w_tilde, Vector::Ones(n) - w_tilde;
  } else {
    if (!(bounds.turnover_cap > 0.0))
      throw InputError("turnover cap must be positive");
    constexpr double inf = std::numeric_limits<double>::infinity();
    lower.head(n).setConstant(-inf);
    upper << Vector::Constant(n, inf), Vector::Constant(2 * n, bounds.turnover_cap);
  }
}

AugmentedAssembly assemble_lc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                              double gamma, const BoundOptions &bounds)
{
  const Index n = u.size();
  cs.validate(n);
  if (!cs.is_linear())
    throw InputError("linear-cost assembly requires delta_minus = delta_plus = 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw InputError("risk tolerance gamma must be finite and non-negative");
  detail::check_current_portfolio(w_tilde, n, bounds);

  AugmentedAssembly a;
  a.n = n;
  QpProblem &p = a.qp;
  p.Q = Matrix::Zero(3 * n, 3 * n);
  p.Q.topLeftCorner(n, n) = u.cov;
  p.R.resize(3 * n);
  p.R << gamma * u.mu, -gamma * cs.c_minus, -gamma * cs.c_plus;

  p.A = Matrix::Zero(1 + n, 3 * n);
  p.A.block(0, 0, 1, n).setOnes();
  p.A.block(0, n, 1, n) = cs.c_minus.transpose();
  p.A.block(0, 2 * n, 1, n) = cs.c_plus.transpose();
  p.A.block(1, 0, n, n).setIdentity();
  p.A.block(1, n, n, n).setIdentity();
  p.A.block(1, 2 * n, n, n) = -Matrix::Identity(n, n);
  p.B.resize(1 + n);
  p.B << 1.0, w_tilde;

  augmented_bounds(w_tilde, bounds, p.lower, p.upper);
  return a;
}

RebalanceResult solve_lc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                         double gamma, const BoundOptions &bounds, const QpSettings &settings)
{
  const AugmentedAssembly a = assemble_lc(u, cs, w_tilde, gamma, bounds);
  const QpSolution s = solve_qp(a.qp, settings);
  if (s.status != QpStatus::Optimal) {
    std::ostringstream msg;
    msg << "linear-cost QP failed: " << to_string(s.status) << " (gamma = " << gamma
        << ", kkt residual " << s.kkt_residual << ")";
    throw SolverError(msg.str());
  }
  RebalanceResult r;
  r.gamma = gamma;
  r.w = a.weights(s.x);
  r.trade = a.trade(s.x);
  r.cost_paid = trade_cost(cs, CostModel::Linear, r.trade);
  r.complementary = detail::complementary(r.trade);
  return r;
}

RebalanceResult solve_mvo(const Universe &u, double gamma, const BoundOptions &bounds,
                          const QpSettings &settings)
{
  const Index n = u.size();
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw InputError("risk tolerance gamma must be finite and non-negative");
  QpProblem p;
  p.Q = u.cov;
  p.R = gamma * u.mu;
  p.A = Matrix::Ones(1, n);
  p.B = Vector::Ones(1);
  if (bounds.long_only) {
    p.lower = Vector::Zero(n);
    p.upper = Vector::Ones(n);
  } else {
    constexpr double inf = std::numeric_limits<double>::infinity();
    p.lower = Vector::Constant(n, -inf);
    p.upper = Vector::Constant(n, inf);
  }
  const QpSolution s = solve_qp(p, settings);
  if (s.status != QpStatus::Optimal) {
    std::ostringstream msg;
    msg << "Markowitz QP failed: " << to_string(s.status) << " (gamma = " << gamma << ")";
    throw SolverError(msg.str());
  }
  RebalanceResult r;
  r.gamma = gamma;
  r.w = s.x;
  r.trade = {Vector::Zero(n), Vector::Zero(n)};
  r.cost_paid = 0.0;
  return r;
}

} // namespace mvtc
