#pragma once

#include "mvtc/qp_solver.hpp"

namespace mvtc {

/// Bounds shared by the augmented formulations.
struct BoundOptions
{
  /// 0 <= w <= 1. When false, w is unbounded and each sale/purchase is capped
  /// by `turnover_cap`.
  bool long_only = true;
  double turnover_cap = 1.0;
};

/// Stacked-variable QP for linear costs, x = (w, dw-, dw+) of length 3n.
struct AugmentedAssembly
{
  QpProblem qp;
  Index n = 0;

  Vector weights(const Vector &x) const { return x.head(n); }
  TradeSplit trade(const Vector &x) const { return {x.segment(n, n), x.tail(n)}; }
};

/// Outcome of any rebalancing solve.
struct RebalanceResult
{
  Vector w;
  TradeSplit trade;
  /// Budget consumed by the trade, so that sum(w) + cost_paid = 1.
  double cost_paid = 0.0;
  /// max_i min(dw-_i, dw+_i) <= 1e-6. Offsetting trades can appear when
  /// burning wealth lowers variance (small gamma) or when costs are zero.
  bool complementary = true;
  double gamma = 0.0;
};

/// Lower/upper bounds of x = (w, dw-, dw+).
void augmented_bounds(const Vector &w_tilde, const BoundOptions &bounds, Vector &lower,
                      Vector &upper);

AugmentedAssembly assemble_lc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                              double gamma, const BoundOptions &bounds = {});

RebalanceResult solve_lc(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                         double gamma, const BoundOptions &bounds = {},
                         const QpSettings &settings = {});

/// Plain Markowitz problem: min 1/2 w'Σw - gamma w'mu, sum(w) = 1, bounds.
RebalanceResult solve_mvo(const Universe &u, double gamma, const BoundOptions &bounds = {},
                          const QpSettings &settings = {});

namespace detail {
void check_current_portfolio(const Vector &w_tilde, Index n, const BoundOptions &bounds);
bool complementary(const TradeSplit &t, double tol = 1e-6);
} // namespace detail

} // namespace mvtc
