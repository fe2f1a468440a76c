#include "mvtc/market_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace mvtc {

namespace detail {

void require_size(const Vector &v, Index n, const char *what)
{
  if (v.size() != n) {
    std::ostringstream msg;
    msg << what << ": expected length " << n << ", got " << v.size();
    throw InputError(msg.str());
  }
}

} // namespace detail

namespace {

void check_psd(const Matrix &cov)
{
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  const Vector &ev = es.eigenvalues();
  const double floor = -1e-10 * std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "covariance is not positive semi-definite: smallest eigenvalue " << ev.minCoeff()
        << ", largest " << ev.maxCoeff();
    throw InputError(msg.str());
  }
}

} // namespace

Universe Universe::create(Vector mu, Matrix cov, std::vector<std::string> names)
{
  const Index n = mu.size();
  if (n < 1)
    throw InputError("universe needs at least one asset");
  if (cov.rows() != n || cov.cols() != n)
    throw InputError("covariance dimensions do not match the number of expected returns");
  if (!mu.allFinite() || !cov.allFinite())
    throw InputError("universe contains non-finite values");

  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym >= 1e-12)
    throw InputError("covariance is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  cov = 0.5 * (cov + cov.transpose()).eval();
  check_psd(cov);

  if (names.empty()) {
    for (Index i = 0; i < n; ++i)
      names.push_back("A" + std::to_string(i + 1));
  } else if (static_cast<Index>(names.size()) != n) {
    throw InputError("number of asset names does not match the number of assets");
  }

  Universe u;
  u.names = std::move(names);
  u.mu = std::move(mu);
  u.vols = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  u.cov = std::move(cov);
  return u;
}

CostSpec CostSpec::uniform(Index n, double c_minus, double c_plus, double delta_minus,
                           double delta_plus)
{
  CostSpec cs;
  cs.c_minus = Vector::Constant(n, c_minus);
  cs.c_plus = Vector::Constant(n, c_plus);
  cs.delta_minus = Vector::Constant(n, delta_minus);
  cs.delta_plus = Vector::Constant(n, delta_plus);
  return cs;
}

void CostSpec::validate(Index n) const
{
  detail::require_size(c_minus, n, "c_minus");
  detail::require_size(c_plus, n, "c_plus");
  detail::require_size(delta_minus, n, "delta_minus");
  detail::require_size(delta_plus, n, "delta_plus");
  for (const Vector *v : {&c_minus, &c_plus, &delta_minus, &delta_plus}) {
    if (!v->allFinite() || (v->size() > 0 && v->minCoeff() < 0.0))
      throw InputError("transaction cost coefficients must be finite and non-negative");
  }
}

bool CostSpec::is_linear() const
{
  return (delta_minus.size() == 0 || delta_minus.maxCoeff() == 0.0) &&
         (delta_plus.size() == 0 || delta_plus.maxCoeff() == 0.0);
}

bool CostSpec::is_homogeneous() const
{
  auto constant = [](const Vector &v) {
    return v.size() == 0 || v.maxCoeff() == v.minCoeff();
  };
  return constant(delta_minus) && constant(delta_plus);
}

Matrix build_covariance(const Vector &vols, double correlation)
{
  const Index n = vols.size();
  if (n < 1)
    throw InputError("need at least one volatility");
  if (n > 1) {
    const double lo = -1.0 / static_cast<double>(n - 1);
    if (!(correlation > lo && correlation <= 1.0)) {
      std::ostringstream msg;
      msg << "constant correlation " << correlation << " outside (" << lo << ", 1]";
      throw InputError(msg.str());
    }
  }
  Matrix corr = Matrix::Constant(n, n, correlation);
  corr.diagonal().setOnes();
  return build_covariance(vols, corr);
}

Matrix build_covariance(const Vector &vols, const Matrix &correlation)
{
  const Index n = vols.size();
  if (correlation.rows() != n || correlation.cols() != n)
    throw InputError("correlation matrix dimensions do not match the volatilities");
  if (!vols.allFinite() || (vols.array() <= 0.0).any())
    throw InputError("volatilities must be strictly positive");
  if ((correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InputError("correlation matrix is not symmetric");
  if ((correlation.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw InputError("correlation matrix must have a unit diagonal");

  Matrix cov = vols.asDiagonal() * correlation * vols.asDiagonal();
  cov = 0.5 * (cov + cov.transpose()).eval();
  cov.diagonal() = vols.cwiseProduct(vols);
  check_psd(cov);
  return cov;
}

PortfolioStats portfolio_stats(const Universe &u, const Vector &w)
{
  detail::require_size(w, u.size(), "portfolio");
  PortfolioStats s;
  s.mean = w.dot(u.mu);
  s.vol = std::sqrt(std::max(w.dot(u.cov * w), 0.0));
  return s;
}

TradeSplit split_trades(const Vector &w, const Vector &w_tilde)
{
  detail::require_size(w_tilde, w.size(), "current portfolio");
  TradeSplit t;
  t.dw_minus = (w_tilde - w).cwiseMax(0.0);
  t.dw_plus = (w - w_tilde).cwiseMax(0.0);
  return t;
}

double trade_cost(const CostSpec &cs, CostModel model, const TradeSplit &trade)
{
  const Index n = trade.dw_minus.size();
  cs.validate(n);
  detail::require_size(trade.dw_plus, n, "dw_plus");
  double cost = cs.c_minus.dot(trade.dw_minus) + cs.c_plus.dot(trade.dw_plus);
  if (model == CostModel::Quadratic) {
    cost += trade.dw_minus.dot(cs.delta_minus.cwiseProduct(trade.dw_minus));
    cost += trade.dw_plus.dot(cs.delta_plus.cwiseProduct(trade.dw_plus));
  }
  return cost;
}

double cost_linear(const CostSpec &cs, const Vector &w, const Vector &w_tilde)
{
  return trade_cost(cs, CostModel::Linear, split_trades(w, w_tilde));
}

double cost_quadratic(const CostSpec &cs, const Vector &w, const Vector &w_tilde)
{
  return trade_cost(cs, CostModel::Quadratic, split_trades(w, w_tilde));
}

double rebalancing_cost(const CostSpec &cs, CostModel model, const Vector &w,
                        const Vector &w_tilde)
{
  return trade_cost(cs, model, split_trades(w, w_tilde));
}

double net_expected_return(const Universe &u, const Vector &w_star, const Vector &w_tilde,
                           const CostSpec &cs, CostModel model, int rebalances_per_year,
                           NetReturnBasis basis)
{
  if (rebalances_per_year < 1)
    throw InputError("rebalances_per_year must be at least 1");
  detail::require_size(w_star, u.size(), "optimized portfolio");
  const double wealth = w_star.sum();
  if (!(wealth > 0.0))
    throw InputError("optimized portfolio must have a positive total weight");
  const double gross =
      basis == NetReturnBasis::Raw ? w_star.dot(u.mu) : w_star.dot(u.mu) / wealth;
  return gross - rebalances_per_year * rebalancing_cost(cs, model, w_star, w_tilde);
}

} // namespace mvtc
