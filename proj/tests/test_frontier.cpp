#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvtc/frontier.hpp"

using namespace mvtc;
using mvtc::test::inf_norm;
using mvtc::test::table1_costs;
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

Vector pct(std::initializer_list<double> xs) { return vec(xs) / 100.0; }

bool near_pp(double value, double percent, double tol_pp)
{
  return std::abs(100.0 * value - percent) <= tol_pp;
}

} // namespace

TEST_CASE("normalization")
{
  CHECK(inf_norm(normalize(vec({0.4, 0.4})) - vec({0.5, 0.5})) == 0.0);
  const Vector w = vec({0.1, 0.3, 0.6});
  CHECK(inf_norm(normalize(w) - w) <= 1e-16);
  CHECK(inf_norm(normalize(normalize(w)) - normalize(w)) <= 1e-16);
  CHECK(inf_norm(normalize(3.7 * w) - normalize(w)) <= 1e-16);
  CHECK_THROWS_AS(normalize(vec({1e-12, 0.0})), InputError);
  CHECK_THROWS_AS(normalize(vec({0.5, -0.5})), InputError);

  const Universe u = test::seven_asset_universe();
  const TargetVolResult lc =
      solve_for_target_vol(Mode::Linear, u, table1_costs(), table1_current_weights(), 0.04, 1e-6);
  CHECK(lc.rebalance.w.sum() < 0.995);
  const Vector w_bar = normalize(lc.rebalance.w);
  CHECK(std::abs(w_bar.sum() - 1.0) <= 1e-12);
  CHECK(100.0 * inf_norm(w_bar - pct({0.00, 14.67, 16.28, 12.91, 10.67, 18.45, 27.01})) <= 0.10);
}

TEST_CASE("target volatility search")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  SUBCASE("Markowitz at 4%")
  {
    const TargetVolResult r = solve_for_target_vol(Mode::Mvo, u, table1_costs(), wt, 0.04);
    CHECK(std::abs(r.vol - 0.04) <= 1e-4);
    CHECK(r.evaluations > 1);
    const TargetVolResult tight = solve_for_target_vol(Mode::Mvo, u, table1_costs(), wt, 0.04, 1e-8);
    CHECK(std::abs(tight.vol - 0.04) <= 1e-8);
    CHECK(100.0 * inf_norm(tight.rebalance.w - pct({0.01, 0.08, 10.92, 22.42, 24.77, 22.59, 19.22})) <=
          0.10);
  }
  SUBCASE("minimum-variance target returns the zero risk tolerance portfolio")
  {
    const double vol0 = portfolio_stats(u, solve_mvo(u, 0.0).w).vol;
    const TargetVolResult r = solve_for_target_vol(Mode::Mvo, u, table1_costs(), wt, vol0);
    CHECK(r.gamma == 0.0);
    CHECK(r.evaluations == 1);
    CHECK_THROWS_AS(solve_for_target_vol(Mode::Mvo, u, table1_costs(), wt, 0.5 * vol0),
                    SolverError);
  }
  SUBCASE("the quadratic-cost frontier stalls below 5.5%")
  {
    try {
      solve_for_target_vol(Mode::Quadratic, u, table1_costs(), wt, 0.055);
      FAIL("expected an unreachable-target error");
    } catch (const SolverError &e) {
      const std::string msg = e.what();
      CHECK(msg.find("unreachable") != std::string::npos);
      const auto comma = msg.find(", ", msg.find('['));
      const double vol_max = std::stod(msg.substr(comma + 2));
      CHECK(vol_max > 0.045);
      CHECK(vol_max < 0.052);
    }
  }
  SUBCASE("tight tolerance")
  {
    const TargetVolResult r =
        solve_for_target_vol(Mode::Quadratic, u, table1_costs(), wt, 0.04, 1e-8);
    CHECK(std::abs(r.vol - 0.04) <= 1e-8);
  }
  SUBCASE("strict mode solves at the exact volatility")
  {
    const TargetVolResult r = solve_for_target_vol(Mode::Strict, u, table1_costs(), wt, 0.045);
    CHECK(std::isnan(r.gamma));
    CHECK(std::abs(r.vol - 0.045) <= 1e-6);
  }
  SUBCASE("invalid arguments")
  {
    CHECK_THROWS_AS(solve_for_target_vol(Mode::Mvo, u, table1_costs(), wt, -0.04), InputError);
    CHECK_THROWS_AS(solve_gamma(Mode::Strict, u, table1_costs(), wt, 1.0), InputError);
  }
}

TEST_CASE("mode names")
{
  for (Mode m : {Mode::Mvo, Mode::Linear, Mode::Quadratic, Mode::Strict})
    CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("cubic"), InputError);
}

TEST_CASE("grid values")
{
  GridSpec g;
  const std::vector<double> v = g.values();
  REQUIRE(v.size() == 100);
  CHECK(v.front() == doctest::Approx(1e-3));
  CHECK(v.back() == 1e2);
  CHECK(v[1] / v[0] == doctest::Approx(v[99] / v[98]));

  g = GridSpec{GridSpec::Kind::Sigma, 0.03, 0.05, 5, false};
  const std::vector<double> s = g.values();
  CHECK(s[2] == doctest::Approx(0.04));

  g.count = 1;
  CHECK(g.values() == std::vector<double>{0.03});
  g.count = 0;
  CHECK_THROWS_AS(g.values(), InputError);
  CHECK_THROWS_AS((GridSpec{GridSpec::Kind::Gamma, 0.0, 1.0, 5, true}.values()), InputError);
  CHECK_THROWS_AS((GridSpec{GridSpec::Kind::Gamma, 2.0, 1.0, 5, false}.values()), InputError);
}

TEST_CASE("zero-cost frontier is the Markowitz frontier")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = vec({0.5, 0.5, 0, 0, 0, 0, 0});
  GridSpec g;
  g.count = 20;
  const std::vector<FrontierPoint> pts = frontier(Mode::Linear, u, CostSpec::zero(7), wt, g);
  REQUIRE(pts.size() == 20);
  for (const FrontierPoint &p : pts) {
    REQUIRE(p.ok);
    CHECK(inf_norm(p.weights_norm - solve_mvo(u, p.gamma).w) <= 1e-8);
    CHECK(p.mu_net == doctest::Approx(p.mu_gross));
    CHECK(p.wealth == doctest::Approx(1.0));
  }
}

TEST_CASE("frontier points")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = table1_current_weights();
  const CostSpec cs = table1_costs();

  SUBCASE("single point")
  {
    GridSpec g;
    g.min = g.max = 0.3;
    g.count = 1;
    for (Mode m : {Mode::Mvo, Mode::Linear, Mode::Quadratic}) {
      const std::vector<FrontierPoint> pts = frontier(m, u, cs, wt, g);
      REQUIRE(pts.size() == 1);
      const FrontierPoint &p = pts[0];
      REQUIRE(p.ok);
      CHECK(std::abs(p.wealth + p.cost_paid - 1.0) <= 1e-6);
      CHECK(std::abs(p.weights_norm.sum() - 1.0) <= 1e-10);
      CHECK(p.sigma_bar == doctest::Approx(portfolio_stats(u, p.weights_norm).vol));
      CHECK(p.mu_net == doctest::Approx(p.weights_raw.dot(u.mu) - p.cost_paid));
    }
  }
  SUBCASE("quadratic costs cap the net return near 4%")
  {
    const std::vector<FrontierPoint> pts = frontier(Mode::Quadratic, u, cs, wt, GridSpec{});
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      REQUIRE(pts[i].ok);
      if (i > 0)
        CHECK(pts[i].sigma_bar >= pts[i - 1].sigma_bar);
      CHECK(std::abs(pts[i].wealth + pts[i].cost_paid - 1.0) <= 1e-6);
      best = std::max(best, pts[i].mu_net);
    }
    CHECK(best >= 0.038);
    CHECK(best <= 0.043);
  }
  SUBCASE("failed points are kept and placed last")
  {
    const GridSpec g{GridSpec::Kind::Sigma, 0.03, 0.06, 4, false};
    const std::vector<FrontierPoint> pts = frontier(Mode::Quadratic, u, cs, wt, g);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].ok);
    CHECK(pts[1].ok);
    CHECK_FALSE(pts[2].ok);
    CHECK_FALSE(pts[3].ok);
    CHECK(pts[2].error.find("unreachable") != std::string::npos);
    CHECK(pts[0].sigma_bar < pts[1].sigma_bar);
  }
  SUBCASE("strict mode needs a volatility grid")
  {
    CHECK_THROWS_AS(frontier(Mode::Strict, u, cs, wt, GridSpec{}), InputError);
  }
  SUBCASE("threaded sweep is identical to the sequential one")
  {
    GridSpec g;
    g.count = 12;
    FrontierOptions one, four;
    four.threads = 4;
    const std::vector<FrontierPoint> a = frontier(Mode::Quadratic, u, cs, wt, g, one);
    const std::vector<FrontierPoint> b = frontier(Mode::Quadratic, u, cs, wt, g, four);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].gamma == b[i].gamma);
      CHECK((a[i].weights_raw - b[i].weights_raw).isZero(0.0));
    }
  }
}

TEST_CASE("rebalance multiplier lowers the net frontier")
{
  const Universe u = test::seven_asset_universe();
  const Vector wt = vec({0.5, 0.5, 0, 0, 0, 0, 0});
  const CostSpec cs = CostSpec::uniform(7, 0.002, 0.001);
  GridSpec g;
  g.count = 30;
  FrontierOptions five;
  five.rebalances = 5;
  const std::vector<FrontierPoint> a = frontier(Mode::Linear, u, cs, wt, g);
  const std::vector<FrontierPoint> b = frontier(Mode::Linear, u, cs, wt, g, five);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma == b[i].gamma);
    CHECK(b[i].mu_net <= a[i].mu_net);
    CHECK(b[i].mu_net == doctest::Approx(a[i].mu_net - 4.0 * a[i].cost_paid).epsilon(1e-12));
  }
  FrontierOptions bad;
  bad.rebalances = 0;
  CHECK_THROWS_AS(frontier(Mode::Linear, u, cs, wt, g, bad), InputError);
}

TEST_CASE("efficient envelope")
{
  const auto point = [](double s, double m, bool ok = true) {
    FrontierPoint p;
    p.sigma_bar = s;
    p.mu_net = m;
    p.ok = ok;
    return p;
  };
  const std::vector<FrontierPoint> pts{point(0.02, 0.03), point(0.05, 0.04), point(0.03, 0.035),
                                       point(0.04, 0.034), point(0.06, 0.039),
                                       point(0.01, 0.09, false)};
  const std::vector<FrontierPoint> env = efficient_envelope(pts);
  REQUIRE(env.size() == 3);
  CHECK(env[0].sigma_bar == 0.02);
  CHECK(env[1].sigma_bar == 0.03);
  CHECK(env[2].sigma_bar == 0.05);
  for (std::size_t i = 1; i < env.size(); ++i) {
    CHECK(env[i].sigma_bar > env[i - 1].sigma_bar);
    CHECK(env[i].mu_net > env[i - 1].mu_net);
  }
}

TEST_CASE("net return of a solved point")
{
  const Universe u = test::seven_asset_universe();
  RebalanceResult r;
  r.w = pct({10, 10, 10, 10, 10, 20, 29});
  r.cost_paid = 0.01;
  const double raw = r.w.dot(u.mu);
  CHECK(point_net_return(u, r, 1, NetReturnBasis::Raw) == doctest::Approx(raw - 0.01));
  CHECK(point_net_return(u, r, 3, NetReturnBasis::Normalized) ==
        doctest::Approx(raw / 0.99 - 0.03));
  CHECK_THROWS_AS(point_net_return(u, r, 0, NetReturnBasis::Raw), InputError);
}

TEST_CASE("comparison report reproduces the published table")
{
  const Universe u = test::seven_asset_universe();
  const CompareReport rep = compare_report(u, table1_costs(), table1_current_weights(), 0.04);
  REQUIRE(rep.columns.size() == 6);
  REQUIRE(rep.assets.size() == 7);

  const std::vector<Vector> weights{
      pct({26.16, 21.41, 16.13, 12.79, 10.56, 7.34, 5.62}),
      pct({0.01, 0.08, 10.92, 22.42, 24.77, 22.59, 19.22}),
      pct({0.00, 14.52, 16.13, 12.79, 10.56, 18.27, 26.74}),
      pct({6.70, 10.84, 14.32, 12.78, 10.56, 14.17, 29.13}),
      pct({0.00, 14.67, 16.28, 12.91, 10.67, 18.45, 27.01}),
      pct({6.80, 11.01, 14.53, 12.98, 10.72, 14.38, 29.57})};
  const double mu[] = {3.33, 6.08, 5.86, 5.73, 5.92, 5.82};
  const double sigma[] = {2.00, 4.00, 4.00, 4.00, 4.04, 4.06};
  const double c_lc[] = {0, 1.58, 0.98, 0.94};
  const double c_qc[] = {0, 2.52, 1.63, 1.49};
  const double mu_lc[] = {3.33, 4.50, 4.88, 4.79};
  const double mu_qc[] = {3.33, 3.56, 4.23, 4.24};

  for (std::size_t k = 0; k < 6; ++k) {
    const CompareColumn &c = rep.columns[k];
    INFO("column " << c.label);
    CHECK(100.0 * inf_norm(c.w - weights[k]) <= 0.10);
    CHECK(near_pp(c.stats.mean, mu[k], 0.03));
    CHECK(near_pp(c.stats.vol, sigma[k], 0.03));
    CHECK(c.has_costs == (k >= 1 && k <= 3));
    CHECK(c.has_net == (k <= 3));
    if (c.has_costs) {
      CHECK(near_pp(c.cost_lc, c_lc[k], 0.03));
      CHECK(near_pp(c.cost_qc, c_qc[k], 0.03));
    }
    if (c.has_net) {
      CHECK(near_pp(c.mu_lc, mu_lc[k], 0.03));
      CHECK(near_pp(c.mu_qc, mu_qc[k], 0.03));
      CHECK(c.mu_qc == doctest::Approx(c.stats.mean - c.cost_qc).epsilon(1e-14));
    }
  }
}

TEST_CASE("without costs the three optimized columns coincide")
{
  const Universe u = test::seven_asset_universe();
  const CompareReport rep =
      compare_report(u, CostSpec::zero(7), table1_current_weights(), 0.04);
  // Each column is bisected to |sigma - 4%| <= 1e-6 independently.
  CHECK(inf_norm(rep.columns[1].w - rep.columns[2].w) <= 1e-4);
  CHECK(inf_norm(rep.columns[1].w - rep.columns[3].w) <= 1e-4);
  CHECK(inf_norm(rep.columns[4].w - rep.columns[2].w) <= 1e-12);
  CHECK(rep.columns[3].cost_qc == 0.0);
}
