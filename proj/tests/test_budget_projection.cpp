#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mvtc/budget_projection.hpp"

using namespace mvtc;
using mvtc::test::inf_norm;
using mvtc::test::random_vector;

namespace {

ProjectionInput make_input(const Vector &v, const Vector &dm, const Vector &dp, const CostSpec &cs)
{
  return ProjectionInput{v, dm, dp, cs};
}

ProjectionInput random_homogeneous(std::mt19937_64 &rng, Index n)
{
  const Vector c = random_vector(rng, 1, 0.0, 0.02);
  const Vector d = random_vector(rng, 2, 0.005, 0.2);
  CostSpec cs = CostSpec::uniform(n, c[0], 1.5 * c[0], d[0], d[1]);
  return make_input(random_vector(rng, n, -0.2, 0.6), random_vector(rng, n, -0.1, 0.3),
                    random_vector(rng, n, -0.1, 0.3), cs);
}

/// Residual (*) written directly with the products lambda- and lambda+ for
/// homogeneous slopes, multiplied through by (lambda-)^2 (lambda+)^2.
double expanded_residual(const ProjectionInput &p, double l)
{
  const double dm = p.costs.delta_minus[0], dp = p.costs.delta_plus[0];
  const double lm = 1 + 2 * l * dm, lp = 1 + 2 * l * dp;
  double total = (p.v.array() - l).sum() - 1.0;
  total *= lm * lm * lp * lp;
  for (Index i = 0; i < p.size(); ++i) {
    const double cm = p.costs.c_minus[i], cp = p.costs.c_plus[i];
    const double am = p.dv_minus[i] - l * cm, ap = p.dv_plus[i] - l * cp;
    total += cm * am * lm * lp * lp + dm * am * am * lp * lp;
    total += cp * ap * lp * lm * lm + dp * ap * ap * lm * lm;
  }
  return total;
}

} // namespace

TEST_CASE("quintic coefficients without slopes")
{
  CostSpec cs = CostSpec::uniform(2, 0.01, 0.02);
  Vector v(2), dm(2), dp(2);
  v << 0.4, 0.7;
  dm << 0.1, 0.2;
  dp << 0.3, 0.05;
  const auto q = quintic_coefficients(make_input(v, dm, dp, cs));
  CHECK(q.alpha[5] == 0.0);
  CHECK(q.alpha[4] == 0.0);
  CHECK(q.alpha[3] == 0.0);
  CHECK(q.alpha[2] == 0.0);
  CHECK(q.alpha[1] == doctest::Approx(-2 - 2 * 0.0001 - 2 * 0.0004));
  CHECK(q.alpha[0] == doctest::Approx(0.1 + 0.01 * 0.3 + 0.02 * 0.35));
}

TEST_CASE("leading coefficient is negative")
{
  CostSpec cs = CostSpec::uniform(1, 0.0, 0.0, 0.05, 0.05);
  const Vector z = Vector::Zero(1);
  const auto q = quintic_coefficients(make_input(Vector::Constant(1, 0.3), z, z, cs));
  CHECK(q.alpha[5] == doctest::Approx(-1e-4).epsilon(1e-14));
}

TEST_CASE("heterogeneous slopes are rejected by the quintic path")
{
  CostSpec cs = CostSpec::uniform(2, 0.01, 0.01, 0.05, 0.05);
  cs.delta_minus[1] = 0.06;
  const Vector z = Vector::Zero(2);
  CHECK_THROWS_AS(quintic_coefficients(make_input(z, z, z, cs)), InputError);
}

TEST_CASE("quintic matches the expanded residual and the secular equation")
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 10);
    const ProjectionInput p = random_homogeneous(rng, n);
    const auto q = quintic_coefficients(p);
    const double dm = p.costs.delta_minus[0], dp = p.costs.delta_plus[0];
    const Vector lambdas = random_vector(rng, 20, -3.0, 3.0);
    for (double l : lambdas) {
      const double poly = q(l);
      const double expanded = expanded_residual(p, l);
      CHECK(std::abs(poly - expanded) <= 1e-10 * std::max(1.0, std::abs(expanded)));
      const double lm = 1 + 2 * l * dm, lp = 1 + 2 * l * dp;
      const double scaled = secular_residual(l, p) * lm * lm * lp * lp;
      CHECK(std::abs(poly - scaled) <= 1e-9 * std::max(1.0, std::abs(poly)));
    }
  }
}

TEST_CASE("secular residual special values")
{
  SUBCASE("all zero, n = 1")
  {
    const Vector z = Vector::Zero(1);
    const ProjectionInput p = make_input(z, z, z, CostSpec::zero(1));
    for (double l : {-2.0, -1.0, 0.0, 0.5})
      CHECK(secular_residual(l, p) == doctest::Approx(-l - 1));
    CHECK(project_general(p).lambda == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("lambda = 0 is the budget residual of v_y")
  {
    std::mt19937_64 rng(3);
    const ProjectionInput p = random_homogeneous(rng, 4);
    CHECK(secular_residual(0.0, p) ==
          doctest::Approx(budget_residual(p.stacked(), p.costs)).epsilon(1e-14));
  }
  SUBCASE("pole is rejected")
  {
    const Vector z = Vector::Zero(1);
    const ProjectionInput p = make_input(z, z, z, CostSpec::uniform(1, 0, 0, 0.5, 0.25));
    CHECK_THROWS_AS(secular_residual(-1.0, p), InputError);
    CHECK(secular_lower_limit(p) == -1.0);
  }
}

TEST_CASE("hyperplane projection without costs")
{
  const Vector z = Vector::Zero(1);
  const ProjectionInput p = make_input(Vector::Constant(1, 1.5), z, z, CostSpec::zero(1));
  for (auto method : {ProjectionMethod::Quintic, ProjectionMethod::Bisection}) {
    const ProjectionResult r = project_budget(p, method);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(r.y[0] - 1.0) <= 1e-12);
    CHECK(std::abs(r.y[1]) <= 1e-12);
    CHECK(std::abs(r.y[2]) <= 1e-12);
  }
}

TEST_CASE("golden two-asset projection")
{
  CostSpec cs = CostSpec::uniform(2, 0.01, 0.01, 0.05, 0.05);
  Vector v(2), dm(2), dp(2);
  v << 0.6, 0.5;
  dm << 0.05, 0;
  dp << 0, 0.1;
  const ProjectionInput p = make_input(v, dm, dp, cs);
  // Dense sampling plus 40-digit bisection of the secular function.
  const double lambda_star = 0.051041605447223019696;
  Vector y_star(6);
  y_star << 0.5489583945527769803, 0.4489583945527769803, 0.049238263941427313686,
      -0.00050782403904845754237, -0.00050782403904845754237, 0.098984351921903084915;
  const double dist_star = 0.00260630926330535803;

  for (auto method : {ProjectionMethod::Quintic, ProjectionMethod::Bisection}) {
    const ProjectionResult r = project_budget(p, method);
    CHECK(r.lambda == doctest::Approx(lambda_star).epsilon(1e-10));
    CHECK(inf_norm(r.y - y_star) <= 1e-10);
    CHECK(r.distance == doctest::Approx(dist_star).epsilon(1e-9));
    CHECK(std::abs(budget_residual(r.y, cs)) <= 1e-10);
  }
}

TEST_CASE("quintic and bisection agree on random homogeneous instances")
{
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 10);
    const ProjectionInput p = random_homogeneous(rng, n);
    const ProjectionResult a = project_homogeneous(p);
    const ProjectionResult b = project_general(p);
    CHECK(std::abs(a.lambda - b.lambda) <= 1e-8);
    CHECK(inf_norm(a.y - b.y) <= 1e-7);
    CHECK(std::abs(budget_residual(a.y, p.costs)) <= 1e-10);
    CHECK(std::abs(budget_residual(b.y, p.costs)) <= 1e-10);
  }
}

TEST_CASE("projection is idempotent")
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ProjectionInput p = random_homogeneous(rng, 5);
    const ProjectionResult first = project_budget(p);
    const ProjectionInput again = ProjectionInput::from_stacked(first.y, p.costs);
    for (auto method : {ProjectionMethod::Quintic, ProjectionMethod::Bisection}) {
      const ProjectionResult second = project_budget(again, method);
      CHECK(std::abs(second.lambda) <= 1e-9);
      CHECK(inf_norm(second.y - first.y) <= 1e-9);
    }
  }
}

TEST_CASE("heterogeneous slopes: bisection result is locally nearest")
{
  std::mt19937_64 rng(1234);
  CostSpec cs = CostSpec::uniform(2, 0.01, 0.015);
  cs.delta_minus << 0.02, 0.08;
  cs.delta_plus << 0.03, 0.05;
  const ProjectionInput p = make_input(random_vector(rng, 2, 0.0, 0.8), random_vector(rng, 2, -0.2, 0.4),
                                       random_vector(rng, 2, -0.2, 0.4), cs);
  const ProjectionResult r = project_budget(p);
  REQUIRE(std::abs(budget_residual(r.y, cs)) <= 1e-10);

  // Gradient of the surface at y; move along the tangent space and pull back
  // onto the surface along the gradient by solving the scalar quadratic.
  Vector grad(6);
  for (Index i = 0; i < 2; ++i) {
    grad[i] = 1.0;
    grad[2 + i] = cs.c_minus[i] + 2 * cs.delta_minus[i] * r.y[2 + i];
    grad[4 + i] = cs.c_plus[i] + 2 * cs.delta_plus[i] * r.y[4 + i];
  }
  const Vector vy = p.stacked();
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    Vector d = mvtc::test::random_matrix(rng, 6, 1).col(0);
    d -= grad * (grad.dot(d) / grad.squaredNorm());
    Vector z = r.y + 1e-3 * d;
    // Newton on s for budget_residual(z + s grad) = 0.
    double s = 0.0;
    for (int it = 0; it < 50; ++it) {
      const double f = budget_residual(z + s * grad, cs);
      if (std::abs(f) <= 1e-14)
        break;
      const double h = 1e-7;
      const double df = (budget_residual(z + (s + h) * grad, cs) - f) / h;
      s -= f / df;
    }
    z += s * grad;
    if (std::abs(budget_residual(z, cs)) > 1e-12)
      continue;
    ++checked;
    CHECK(0.5 * (z - vy).squaredNorm() >= r.distance - 1e-14);
  }
  CHECK(checked > 900);
}

TEST_CASE("secular residual is strictly decreasing past the pole")
{
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 6);
    CostSpec cs = CostSpec::uniform(n, 0.01, 0.02);
    cs.delta_minus = random_vector(rng, n, 0.0, 0.2);
    cs.delta_plus = random_vector(rng, n, 0.0, 0.2);
    const ProjectionInput p = make_input(random_vector(rng, n, -0.5, 0.5), random_vector(rng, n, -0.3, 0.3),
                                         random_vector(rng, n, -0.3, 0.3), cs);
    const double lo = secular_lower_limit(p);
    const Vector ts = random_vector(rng, 50, 0.0, 1.0);
    for (double t : ts) {
      const double l = lo + 1e-3 + t * 20.0;
      const double h = 1e-6;
      CHECK(secular_residual(l + h, p) < secular_residual(l - h, p));
    }
  }
}

TEST_CASE("multiplier pinned at the pole")
{
  // min 1/2 ((w + 1)^2 + a^2 + b^2) s.t. w + 0.5 a^2 + 0.5 b^2 = 1.
  const Vector z = Vector::Zero(1);
  const CostSpec cs = CostSpec::uniform(1, 0.0, 0.0, 0.5, 0.5);
  const ProjectionInput p = make_input(Vector::Constant(1, -1.0), z, z, cs);

  SUBCASE("quintic stationary root is not the nearest point")
  {
    const ProjectionResult r = project_homogeneous(p);
    CHECK(r.lambda == doctest::Approx(-2.0));
    CHECK(r.distance == doctest::Approx(2.0));
  }
  SUBCASE("auto and bisection find the sphere of nearest points")
  {
    for (auto method : {ProjectionMethod::Auto, ProjectionMethod::Bisection}) {
      const ProjectionResult r = project_budget(p, method);
      CHECK(r.degenerate);
      CHECK(r.lambda == doctest::Approx(-1.0));
      CHECK(r.distance == doctest::Approx(1.5).epsilon(1e-12));
      CHECK(std::abs(r.y[0]) <= 1e-12);
      CHECK(r.y[1] * r.y[1] + r.y[2] * r.y[2] == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(std::abs(budget_residual(r.y, cs)) <= 1e-10);
    }
  }
}

TEST_CASE("mismatched lengths are rejected")
{
  const ProjectionInput p{Vector::Zero(2), Vector::Zero(1), Vector::Zero(2), CostSpec::zero(2)};
  CHECK_THROWS_AS(p.validate(), InputError);
  CHECK_THROWS_AS(ProjectionInput::from_stacked(Vector::Zero(4), CostSpec::zero(1)), InputError);
}
