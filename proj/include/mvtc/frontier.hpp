#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mvtc/strict_sigma.hpp"

namespace mvtc {

enum class Mode { Mvo, Linear, Quadratic, Strict };

const char *to_string(Mode mode);
/// "mvo", "linear", "quadratic" or "strict"; throws InputError otherwise.
Mode parse_mode(std::string_view name);

/// Cost model used to charge a portfolio produced in `mode`.
CostModel cost_model(Mode mode);

struct SolverOptions
{
  QpSettings qp;
  AdmmSettings admm;
  StrictSettings strict;
  BoundOptions bounds;
};

/// w / sum(w). Throws InputError when sum(w) <= 1e-9.
Vector normalize(const Vector &w);

/// Optimum of the gamma-form problem of `mode` (Mvo, Linear or Quadratic).
/// Quadratic solves that hit the ADMM iteration cap throw SolverError.
RebalanceResult solve_gamma(Mode mode, const Universe &u, const CostSpec &cs,
                            const Vector &w_tilde, double gamma, const SolverOptions &opts = {});

struct TargetVolResult
{
  RebalanceResult rebalance;
  double gamma = 0.0;
  /// sigma(w*) of the raw portfolio.
  double vol = 0.0;
  int evaluations = 0;
};

/// Bisection on gamma until |sigma(w*(gamma)) - sigma_target| <= tol, with
/// gamma_hi doubled from 1 up to 2^20. The volatility of the raw portfolio
/// must be non-decreasing in gamma; a violation larger than 1e-6 aborts.
/// Unreachable targets throw SolverError quoting the attainable range.
/// Strict mode solves the exact-volatility problem directly (gamma = NaN).
TargetVolResult solve_for_target_vol(Mode mode, const Universe &u, const CostSpec &cs,
                                     const Vector &w_tilde, double sigma_target,
                                     double tol = 1e-4, const SolverOptions &opts = {});

struct GridSpec
{
  enum class Kind { Gamma, Sigma };
  Kind kind = Kind::Gamma;
  double min = 1e-3;
  double max = 1e2;
  int count = 100;
  /// Log spacing for gamma grids (requires min > 0); sigma grids are linear.
  bool log_spaced = true;

  std::vector<double> values() const;
};

struct FrontierPoint
{
  double gamma = 0.0;
  double sigma_bar = 0.0;
  double mu_gross = 0.0;
  double cost_paid = 0.0;
  double mu_net = 0.0;
  double wealth = 0.0;
  Vector weights_raw;
  Vector weights_norm;
  bool ok = false;
  std::string error;
};

struct FrontierOptions
{
  int rebalances = 1;
  NetReturnBasis basis = NetReturnBasis::Raw;
  /// Volatility tolerance of sigma-grid points.
  double vol_tol = 1e-4;
  int threads = 1;
  SolverOptions solver;
};

/// Net expected return of a solved portfolio: gross return (raw or
/// normalized) minus rebalances * cost_paid, where cost_paid is what the
/// trade actually consumed (sum(w) + cost_paid = 1).
double point_net_return(const Universe &u, const RebalanceResult &r, int rebalances,
                        NetReturnBasis basis);

/// One point per grid value; failed points are kept with ok = false and an
/// error message. Successful points are sorted by sigma_bar and come first,
/// failed ones follow in grid order.
std::vector<FrontierPoint> frontier(Mode mode, const Universe &u, const CostSpec &cs,
                                    const Vector &w_tilde, const GridSpec &grid,
                                    const FrontierOptions &opts = {});

/// Successful points not dominated by another point with lower or equal
/// sigma_bar and higher mu_net, sorted by sigma_bar.
std::vector<FrontierPoint> efficient_envelope(const std::vector<FrontierPoint> &points);

struct CompareColumn
{
  std::string label;
  Vector w;
  PortfolioStats stats;
  /// Cost rows are blank for the current and normalized columns, net rows
  /// only for the normalized ones.
  bool has_costs = false;
  bool has_net = false;
  double cost_lc = 0.0;
  double cost_qc = 0.0;
  double mu_lc = 0.0;
  double mu_qc = 0.0;
  double gamma = 0.0;
};

/// Current portfolio, Markowitz, linear-cost and quadratic-cost optima at the
/// target volatility, then the normalized linear- and quadratic-cost columns.
struct CompareReport
{
  std::vector<std::string> assets;
  std::vector<CompareColumn> columns;
};

CompareReport compare_report(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                             double sigma_target, double tol = 1e-6,
                             const SolverOptions &opts = {});

} // namespace mvtc
