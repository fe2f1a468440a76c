#include <doctest.h>

#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "mvtc/linear_cost.hpp"

using namespace mvtc;
using mvtc::test::inf_norm;
using mvtc::test::table1_current_weights;

namespace {

Vector vec(std::initializer_list<double> xs)
{
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs)
    v[i++] = x;
  return v;
}

/// Plain gamma bisection on the volatility of solve(gamma).
Vector at_volatility(const Universe &u, const std::function<Vector(double)> &solve, double target)
{
  double lo = 0.0, hi = 1.0;
  while (portfolio_stats(u, solve(hi)).vol < target)
    hi *= 2.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (portfolio_stats(u, solve(mid)).vol < target ? lo : hi) = mid;
  }
  return solve(0.5 * (lo + hi));
}

} // namespace

TEST_CASE("augmented assembly")
{
  SUBCASE("single asset")
  {
    const Universe u = Universe::create(vec({0.05}), Matrix::Constant(1, 1, 0.04));
    const AugmentedAssembly a = assemble_lc(u, CostSpec::uniform(1, 0.02, 0.01), vec({0.3}), 2.0);
    Matrix A(2, 3);
    A << 1.0, 0.02, 0.01, 1.0, 1.0, -1.0;
    CHECK((a.qp.A - A).isZero(0.0));
    CHECK(inf_norm(a.qp.B - vec({1.0, 0.3})) == 0.0);
    CHECK(inf_norm(a.qp.R - vec({0.1, -0.04, -0.02})) <= 1e-16);
    CHECK(a.qp.Q(0, 0) == 0.04);
    CHECK(a.qp.Q.bottomRightCorner(2, 2).isZero(0.0));
  }
  SUBCASE("bounds")
  {
    Matrix cov = Matrix::Identity(2, 2) * 0.01;
    const Universe u = Universe::create(vec({0.05, 0.06}), cov);
    const AugmentedAssembly a = assemble_lc(u, CostSpec::zero(2), vec({0.5, 0.5}), 1.0);
    CHECK(a.qp.lower.isZero(0.0));
    CHECK(inf_norm(a.qp.upper - vec({1, 1, 0.5, 0.5, 0.5, 0.5})) == 0.0);
    CHECK(assemble_lc(u, CostSpec::zero(2), vec({0.5, 0.5}), 0.0).qp.R.isZero(0.0));
  }
  SUBCASE("invalid inputs")
  {
    const Universe u = test::seven_asset_universe();
    const Vector wt = table1_current_weights();
    CHECK_THROWS_AS(assemble_lc(u, test::table1_costs(), wt, 1.0), InputError);
    CHECK_THROWS_AS(assemble_lc(u, CostSpec::uniform(7, 0.02, 0.01), wt, -1.0), InputError);
    Vector bad = wt;
    bad[0] = 1.2;
    CHECK_THROWS_AS(assemble_lc(u, CostSpec::uniform(7, 0.02, 0.01), bad, 1.0), InputError);
    CHECK_THROWS_AS(assemble_lc(u, CostSpec::uniform(6, 0.02, 0.01), wt, 1.0), InputError);
  }
}

TEST_CASE("published Markowitz and linear-cost columns at 4% volatility")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  const CostSpec cs = CostSpec::uniform(7, 0.02, 0.01);

  const Vector w_mvo = at_volatility(u, [&](double g) { return solve_mvo(u, g).w; }, 0.04);
  const Vector published_mvo = vec({0.01, 0.08, 10.92, 22.42, 24.77, 22.59, 19.22}) / 100.0;
  CHECK(100.0 * inf_norm(w_mvo - published_mvo) <= 0.10);

  const Vector w_lc = at_volatility(u, [&](double g) { return solve_lc(u, cs, wt, g).w; }, 0.04);
  const Vector published_lc = vec({0.00, 14.52, 16.13, 12.79, 10.56, 18.27, 26.74}) / 100.0;
  CHECK(100.0 * inf_norm(w_lc - published_lc) <= 0.10);
  const double cost = cost_linear(cs, w_lc, wt);
  CHECK(std::abs(100.0 * cost - 0.98) <= 0.03);
  CHECK(std::abs(w_lc.sum() + cost - 1.0) <= 1e-6);

  // The cost-aware optimum never pays more than the cost-blind one at equal volatility.
  CHECK(cost <= cost_linear(cs, w_mvo, wt));
}

TEST_CASE("zero costs reduce to the Markowitz problem")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  for (double gamma : {0.0, 0.01, 0.05, 0.3, 2.0}) {
    const RebalanceResult lc = solve_lc(u, CostSpec::zero(7), wt, gamma);
    const RebalanceResult mvo = solve_mvo(u, gamma);
    CHECK(inf_norm(lc.w - mvo.w) <= 1e-8);
    CHECK(lc.cost_paid == 0.0);
  }
}

TEST_CASE("minimum-variance current portfolio at zero risk tolerance")
{
  const Universe u = test::seven_asset_universe();
  // Closed form: the first three assets are active, w = Σ_S^{-1} 1 / 1'Σ_S^{-1} 1.
  const Vector w_mv = vec({150, 21, 2, 0, 0, 0, 0}) / 173.0;
  const Vector grad = u.cov * w_mv;
  CHECK(std::abs(grad[0] - grad[1]) <= 1e-15);
  CHECK(std::abs(grad[0] - grad[2]) <= 1e-15);
  for (int i = 3; i < 7; ++i)
    CHECK(grad[i] > grad[0]);
  CHECK(inf_norm(solve_mvo(u, 0.0).w - w_mv) <= 1e-9);

  // Paying costs to shrink the invested wealth lowers variance, so the
  // optimum trades away from the current portfolio (conic-solver oracle).
  const RebalanceResult r = solve_lc(u, CostSpec::uniform(7, 0.02, 0.01), w_mv, 0.0);
  const Vector oracle = vec({0.851064665845083, 0.126698538549987, 0.013864023988492, 0, 0, 0, 0});
  CHECK(inf_norm(r.w - oracle) <= 1e-8);
  CHECK(portfolio_stats(u, r.w).vol == doctest::Approx(0.00959712519510689).epsilon(1e-9));
  CHECK(std::abs(r.w.sum() + r.cost_paid - 1.0) <= 1e-9);
  CHECK_FALSE(r.complementary);
}

TEST_CASE("budget identity and monotone volatility along a gamma grid")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  const CostSpec cs = CostSpec::uniform(7, 0.02, 0.01);
  double prev = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double gamma = 1e-3 * std::pow(1e5, k / 49.0);
    const RebalanceResult r = solve_lc(u, cs, wt, gamma);
    CHECK(std::abs(r.w.sum() + r.cost_paid - 1.0) <= 1e-6);
    CHECK(r.cost_paid == doctest::Approx(trade_cost(cs, CostModel::Linear, r.trade)));
    CHECK(inf_norm(wt + r.trade.dw_plus - r.trade.dw_minus - r.w) <= 1e-9);
    const double vol = portfolio_stats(u, r.w).vol;
    CHECK(vol >= prev - 1e-9);
    prev = vol;
    if (gamma >= 0.01)
      CHECK(r.complementary);
  }
}

TEST_CASE("unbounded weights with a turnover cap")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  BoundOptions b;
  b.long_only = false;
  b.turnover_cap = 0.5;
  const RebalanceResult r = solve_lc(u, CostSpec::uniform(7, 0.02, 0.01), wt, 0.5, b);
  CHECK(std::abs(r.w.sum() + r.cost_paid - 1.0) <= 1e-6);
  CHECK(r.trade.dw_minus.maxCoeff() <= 0.5 + 1e-9);
  CHECK(r.trade.dw_plus.maxCoeff() <= 0.5 + 1e-9);
  CHECK(r.w.minCoeff() < 0.0);

  b.turnover_cap = 0.0;
  CHECK_THROWS_AS(solve_lc(u, CostSpec::uniform(7, 0.02, 0.01), wt, 0.5, b), InputError);
}
