#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "mvtc/error.hpp"

namespace mvtc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Asset universe: expected returns, volatilities and covariance, all in
/// decimal units (0.05 means 5% per year).
struct Universe
{
  std::vector<std::string> names;
  Vector mu;
  Vector vols;
  Matrix cov;

  Index size() const { return mu.size(); }

  /// Validates and builds a universe. The covariance is symmetrized when its
  /// asymmetry is below 1e-12 and rejected otherwise; it must be PSD up to
  /// an eigenvalue floor of -1e-10 * lambda_max. Names default to A1..An.
  static Universe create(Vector mu, Matrix cov, std::vector<std::string> names = {});
};

/// Bid/ask unit costs (c) and quadratic slopes (delta), one entry per asset.
struct CostSpec
{
  Vector c_minus;
  Vector c_plus;
  Vector delta_minus;
  Vector delta_plus;

  static CostSpec uniform(Index n, double c_minus, double c_plus, double delta_minus = 0.0,
                          double delta_plus = 0.0);
  static CostSpec zero(Index n) { return uniform(n, 0.0, 0.0); }

  Index size() const { return c_minus.size(); }
  void validate(Index n) const;
  bool is_linear() const;
  /// True when every delta_minus entry is equal and every delta_plus entry is equal.
  bool is_homogeneous() const;
};

/// Sale (dw_minus) and purchase (dw_plus) magnitudes of a rebalancing.
struct TradeSplit
{
  Vector dw_minus;
  Vector dw_plus;
};

struct PortfolioStats
{
  double mean = 0.0;
  double vol = 0.0;
};

enum class CostModel { Linear, Quadratic };

/// Which gross return the net expected return is measured on: the raw
/// optimized weights w* or the normalized weights w* / sum(w*).
enum class NetReturnBasis { Raw, Normalized };

/// Covariance from volatilities and a constant pairwise correlation.
Matrix build_covariance(const Vector &vols, double correlation);
/// Covariance from volatilities and a full correlation matrix.
Matrix build_covariance(const Vector &vols, const Matrix &correlation);

PortfolioStats portfolio_stats(const Universe &u, const Vector &w);

TradeSplit split_trades(const Vector &w, const Vector &w_tilde);

double cost_linear(const CostSpec &cs, const Vector &w, const Vector &w_tilde);
double cost_quadratic(const CostSpec &cs, const Vector &w, const Vector &w_tilde);
double rebalancing_cost(const CostSpec &cs, CostModel model, const Vector &w, const Vector &w_tilde);

/// Cost of an explicit trade split, which may contain offsetting sales and
/// purchases of the same asset.
double trade_cost(const CostSpec &cs, CostModel model, const TradeSplit &trade);

/// Expected return net of rebalancing costs:
///   Raw:        mu(w*)  - rebalances * C(w* | w_tilde)
///   Normalized: mu(w*/sum w*) - rebalances * C(w* | w_tilde)
double net_expected_return(const Universe &u, const Vector &w_star, const Vector &w_tilde,
                           const CostSpec &cs, CostModel model, int rebalances_per_year = 1,
                           NetReturnBasis basis = NetReturnBasis::Raw);

namespace detail {
void require_size(const Vector &v, Index n, const char *what);
}

} // namespace mvtc
