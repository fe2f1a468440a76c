#include "mvtc/strict_sigma.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace mvtc {

double StrictAssembly::budget_residual(const Vector &x) const
{
  return (A1 * x)(0) + x.dot(C1diag.cwiseProduct(x)) - B1;
}

double StrictAssembly::variance_residual(const Vector &x) const
{
  const auto w = x.head(n);
  return w.dot(sigma * w) - B3;
}

StrictAssembly assemble_strict(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                               double sigma_star)
{
  const Index n = u.size();
  cs.validate(n);
  detail::check_current_portfolio(w_tilde, n, {});
  if (!(sigma_star > 0.0) || !std::isfinite(sigma_star))
    throw InputError("target volatility must be positive");

  StrictAssembly a;
  a.n = n;
  a.costs = cs;
  a.vol_min = portfolio_stats(u, solve_mvo(u, 0.0).w).vol;
  a.vol_max = u.vols.maxCoeff();
  if (sigma_star < a.vol_min * (1.0 - 1e-9) || sigma_star > a.vol_max * (1.0 + 1e-9)) {
    std::ostringstream msg;
    msg << "target volatility " << sigma_star << " outside the attainable long-only range ["
        << a.vol_min << ", " << a.vol_max << "]";
    throw InputError(msg.str());
  }

  a.Q = Matrix::Zero(3 * n, 3 * n);
  a.Q.diagonal().segment(n, n) = cs.delta_minus;
  a.Q.diagonal().tail(n) = cs.delta_plus;
  a.R.resize(3 * n);
  a.R << u.mu, -cs.c_minus, -cs.c_plus;
  a.A1.resize(1, 3 * n);
  a.A1 << Vector::Ones(n).transpose(), cs.c_minus.transpose(), cs.c_plus.transpose();
  a.A2 = Matrix::Zero(n, 3 * n);
  a.A2.block(0, 0, n, n).setIdentity();
  a.A2.block(0, n, n, n).setIdentity();
  a.A2.block(0, 2 * n, n, n) = -Matrix::Identity(n, n);
  a.B2 = w_tilde;
  a.C1diag.resize(3 * n);
  a.C1diag << Vector::Zero(n), cs.delta_minus, cs.delta_plus;
  a.sigma = u.cov;
  a.B3 = sigma_star * sigma_star;
  augmented_bounds(w_tilde, {}, a.lower, a.upper);
  return a;
}

namespace {

/// Projection onto {w : w'Σw = B3} in the eigenbasis of Σ.
class SphereProjector
{
public:
  SphereProjector(const Matrix &sigma, double B3) : B3_(B3)
  {
    if (!(B3 > 0.0) || !std::isfinite(B3))
      throw InputError("variance target must be positive");
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    if (es.info() != Eigen::Success)
      throw SolverError("eigendecomposition of the covariance failed");
    V_ = es.eigenvectors();
    L_ = es.eigenvalues().cwiseMax(0.0);
    if (!(L_.maxCoeff() > 0.0))
      throw InputError("covariance is zero; the variance sphere is empty");
    // Deterministic orientation: largest entry of each eigenvector positive.
    for (Index j = 0; j < V_.cols(); ++j) {
      Index k;
      V_.col(j).cwiseAbs().maxCoeff(&k);
      if (V_(k, j) < 0.0)
        V_.col(j) = -V_.col(j);
    }
  }

  SphereProjection operator()(const Vector &v) const
  {
    const Index n = V_.rows();
    if (v.size() < n || v.size() % n != 0)
      throw InputError("variance projection: point length must be a multiple of n");
    const Vector a = V_.transpose() * v.head(n);
    const double lmax = L_.maxCoeff();
    const double lambda_min = -1.0 / (2.0 * lmax);
    const auto g = [&](double lambda) {
      double s = -B3_;
      for (Index i = 0; i < n; ++i) {
        const double d = 1.0 + 2.0 * lambda * L_[i];
        s += L_[i] * a[i] * a[i] / (d * d);
      }
      return s;
    };

    SphereProjection out;
    out.y = v;
    const double g0 = g(0.0);
    if (g0 == 0.0)
      return out;

    double lo, hi;
    if (g0 > 0.0) {
      lo = 0.0;
      hi = 1.0;
      for (int k = 0; g(hi) > 0.0; ++k) {
        lo = hi;
        hi *= 2.0;
        if (k > 2000)
          throw SolverError("variance projection: bracket expansion failed");
      }
    } else {
      hi = 0.0;
      double gap = 1e-9 * std::abs(lambda_min);
      lo = lambda_min + gap;
      while (g(lo) <= 0.0) {
        gap *= 1e-3;
        const double next = lambda_min + gap;
        if (next == lambda_min || gap < 1e-15 * std::abs(lambda_min))
          return pole(v, a, lambda_min);
        hi = lo;
        lo = next;
      }
    }
    double best = 0.5 * (lo + hi), best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double res = g(mid);
      if (std::abs(res) < best_res) {
        best_res = std::abs(res);
        best = mid;
      }
      if (res == 0.0)
        break;
      (res > 0.0 ? lo : hi) = mid;
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
        break;
    }
    Vector c(n);
    for (Index i = 0; i < n; ++i)
      c[i] = a[i] / (1.0 + 2.0 * best * L_[i]);
    out.y.head(n) = V_ * c;
    out.lambda = best;
    return out;
  }

private:
  SphereProjection pole(const Vector &v, const Vector &a, double lambda_min) const
  {
    const Index n = V_.rows();
    const double lmax = L_.maxCoeff();
    Vector c(n);
    double rest = 0.0;
    Index top = -1;
    for (Index i = 0; i < n; ++i) {
      if (L_[i] >= lmax * (1.0 - 1e-12)) {
        c[i] = a[i];
        if (top < 0)
          top = i;
      } else {
        c[i] = a[i] / (1.0 + 2.0 * lambda_min * L_[i]);
      }
      rest += L_[i] * c[i] * c[i];
    }
    const double t = std::sqrt(std::max(0.0, B3_ - rest) / lmax);
    c[top] += c[top] >= 0.0 ? t : -t;
    SphereProjection out;
    out.y = v;
    out.y.head(n) = V_ * c;
    out.lambda = lambda_min;
    out.degenerate = true;
    return out;
  }

  double B3_;
  Matrix V_;
  Vector L_;
};

struct Run
{
  Vector x;
  int iterations = 0;
  int degenerate = 0;
};

Run run_admm(const StrictAssembly &a, const SphereProjector &sphere, const Vector &x0,
             const StrictSettings &s)
{
  const Index n = a.n;
  const Index m = 3 * n;
  double scale = std::max((2.0 * a.Q.diagonal()).cwiseAbs().maxCoeff(), a.R.cwiseAbs().maxCoeff());
  if (!(scale > 0.0))
    scale = 1.0;
  const double phi = s.phi * scale;

  QpProblem p;
  p.Q = 2.0 * a.Q;
  p.Q.diagonal().array() += 2.0 * phi;
  p.A = a.A2;
  p.B = a.B2;
  p.lower = a.lower;
  p.upper = a.upper;
  QpSettings qs;
  qs.check_convexity = false;

  Run run;
  Vector x = x0, y = x0, z = x0;
  Vector u1 = Vector::Zero(m), u2 = Vector::Zero(m);
  const double sqrt_m = std::sqrt(static_cast<double>(2 * m));
  const double stop_tol = 1e-2 * s.feas_tol;
  for (int k = 1; k <= s.max_iter; ++k) {
    p.R = a.R + phi * (y - u1) + phi * (z - u2);
    const QpSolution qp = solve_qp(p, qs, x);
    if (qp.status != QpStatus::Optimal)
      throw SolverError(std::string("strict x-update failed: ") + to_string(qp.status));
    x = qp.x;

    const Vector y_prev = y, z_prev = z;
    const ProjectionResult py = project_general(ProjectionInput::from_stacked(x + u1, a.costs));
    const SphereProjection pz = sphere(x + u2);
    run.degenerate += (py.degenerate ? 1 : 0) + (pz.degenerate ? 1 : 0);
    y = py.y;
    z = pz.y;
    u1 += x - y;
    u2 += x - z;
    run.iterations = k;

    const double r_pri = std::sqrt((x - y).squaredNorm() + (x - z).squaredNorm());
    const double r_dual = s.phi * std::sqrt((y - y_prev).squaredNorm() + (z - z_prev).squaredNorm());
    const double eps_pri = s.eps_abs * sqrt_m + s.eps_rel * std::max({x.norm(), y.norm(), z.norm()});
    const double eps_dual =
        s.eps_abs * sqrt_m + s.eps_rel * s.phi * std::sqrt(u1.squaredNorm() + u2.squaredNorm());
    if (r_pri <= eps_pri && r_dual <= eps_dual && std::abs(a.budget_residual(x)) <= stop_tol &&
        std::abs(a.variance_residual(x)) <= stop_tol)
      break;
  }
  run.x = std::move(x);
  return run;
}

Vector start_from_weights(const Vector &w, const Vector &w_tilde)
{
  const Index n = w.size();
  const TradeSplit t = split_trades(w, w_tilde);
  Vector x(3 * n);
  x << w, t.dw_minus, t.dw_plus;
  return x;
}

} // namespace

SphereProjection project_variance_sphere(const Vector &v, const Matrix &sigma, double B3)
{
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw InputError("variance projection: covariance must be square and non-empty");
  return SphereProjector(sigma, B3)(v);
}

StrictResult solve_strict(const StrictAssembly &a, const StrictSettings &settings)
{
  if (settings.starts < 1 || settings.max_iter < 1 || !(settings.phi > 0.0))
    throw InputError("strict solver needs starts >= 1, max_iter >= 1 and phi > 0");
  const Index n = a.n;
  const SphereProjector sphere(a.sigma, a.B3);

  std::vector<Vector> starts;
  starts.push_back(start_from_weights(a.B2, a.B2));
  starts.push_back(start_from_weights(Vector::Constant(n, 1.0 / static_cast<double>(n)), a.B2));
  std::mt19937_64 rng(settings.seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  while (static_cast<int>(starts.size()) < settings.starts) {
    Vector w = a.B2;
    for (Index i = 0; i < n; ++i)
      w[i] = std::clamp(w[i] + noise(rng), 0.0, 1.0);
    if (w.sum() > 0.0)
      w /= w.sum();
    starts.push_back(start_from_weights(w, a.B2));
  }
  starts.resize(static_cast<std::size_t>(settings.starts));

  StrictResult best;
  bool have_any = false;
  double best_violation = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Run run = run_admm(a, sphere, starts[k], settings);
    StrictStatus st;
    st.objective = a.objective(run.x);
    st.budget_residual = a.budget_residual(run.x);
    st.variance_residual = a.variance_residual(run.x);
    st.trade_residual = (a.A2 * run.x - a.B2).cwiseAbs().maxCoeff();
    st.bound_violation =
        std::max({0.0, (a.lower - run.x).maxCoeff(), (run.x - a.upper).maxCoeff()});
    st.iterations = run.iterations;
    st.start = static_cast<int>(k);
    st.degenerate_projections = run.degenerate;
    st.feasible = std::abs(st.budget_residual) <= settings.feas_tol &&
                  std::abs(st.variance_residual) <= settings.feas_tol &&
                  st.trade_residual <= 1e-8 && st.bound_violation <= settings.feas_tol;
    const double violation = std::max(std::abs(st.budget_residual), std::abs(st.variance_residual));

    bool take;
    if (!have_any)
      take = true;
    else if (st.feasible != best.status.feasible)
      take = st.feasible;
    else if (st.feasible)
      take = st.objective < best.status.objective;
    else
      take = violation < best_violation;
    if (take) {
      have_any = true;
      best_violation = violation;
      best.status = st;
      best.rebalance.w = run.x.head(n);
      best.rebalance.trade = {run.x.segment(n, n), run.x.tail(n)};
    }
  }
  best.rebalance.cost_paid = trade_cost(a.costs, CostModel::Quadratic, best.rebalance.trade);
  best.rebalance.complementary = detail::complementary(best.rebalance.trade);
  best.rebalance.gamma = std::numeric_limits<double>::quiet_NaN();
  return best;
}

StrictResult solve_strict(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                          double sigma_star, const StrictSettings &settings)
{
  return solve_strict(assemble_strict(u, cs, w_tilde, sigma_star), settings);
}

} // namespace mvtc
