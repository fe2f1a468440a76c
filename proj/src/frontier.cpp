#include "mvtc/frontier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace mvtc {

const char *to_string(Mode mode)
{
  switch (mode) {
  case Mode::Mvo:
    return "mvo";
  case Mode::Linear:
    return "linear";
  case Mode::Quadratic:
    return "quadratic";
  case Mode::Strict:
    return "strict";
  }
  return "?";
}

Mode parse_mode(std::string_view name)
{
  for (Mode m : {Mode::Mvo, Mode::Linear, Mode::Quadratic, Mode::Strict})
    if (name == to_string(m))
      return m;
  throw InputError("unknown mode '" + std::string(name) +
                   "' (expected mvo, linear, quadratic or strict)");
}

CostModel cost_model(Mode mode)
{
  return mode == Mode::Linear ? CostModel::Linear : CostModel::Quadratic;
}

Vector normalize(const Vector &w)
{
  const double total = w.sum();
  if (!(total > 1e-9))
    throw InputError("cannot normalize a portfolio with non-positive total weight");
  return w / total;
}

namespace {

CostSpec linear_part(const CostSpec &cs)
{
  CostSpec lin = cs;
  lin.delta_minus.setZero();
  lin.delta_plus.setZero();
  return lin;
}

} // namespace

RebalanceResult solve_gamma(Mode mode, const Universe &u, const CostSpec &cs,
                            const Vector &w_tilde, double gamma, const SolverOptions &opts)
{
  switch (mode) {
  case Mode::Mvo:
    return solve_mvo(u, gamma, opts.bounds, opts.qp);
  case Mode::Linear:
    return solve_lc(u, linear_part(cs), w_tilde, gamma, opts.bounds, opts.qp);
  case Mode::Quadratic: {
    const QcResult r = solve_qc(u, cs, w_tilde, gamma, opts.admm, opts.bounds);
    if (!r.diagnostics.converged) {
      std::ostringstream msg;
      msg << "ADMM did not converge in " << r.diagnostics.iterations
          << " iterations (gamma = " << gamma << ", primal residual "
          << r.diagnostics.primal_residual << ")";
      throw SolverError(msg.str());
    }
    return r.rebalance;
  }
  case Mode::Strict:
    break;
  }
  throw InputError("strict mode has no risk-tolerance form; give a target volatility");
}

TargetVolResult solve_for_target_vol(Mode mode, const Universe &u, const CostSpec &cs,
                                     const Vector &w_tilde, double sigma_target, double tol,
                                     const SolverOptions &opts)
{
  if (!(sigma_target > 0.0) || !(tol > 0.0))
    throw InputError("target volatility and tolerance must be positive");

  TargetVolResult out;
  if (mode == Mode::Strict) {
    const StrictResult s = solve_strict(u, cs, w_tilde, sigma_target, opts.strict);
    if (!s.status.feasible) {
      std::ostringstream msg;
      msg << "strict solver found no feasible point at volatility " << sigma_target
          << " (budget residual " << s.status.budget_residual << ", variance residual "
          << s.status.variance_residual << ")";
      throw SolverError(msg.str());
    }
    out.rebalance = s.rebalance;
    out.gamma = std::numeric_limits<double>::quiet_NaN();
    out.vol = portfolio_stats(u, s.rebalance.w).vol;
    out.evaluations = 1;
    return out;
  }

  constexpr double kMonotoneSlack = 1e-6;
  const auto eval = [&](double gamma) {
    TargetVolResult r;
    r.rebalance = solve_gamma(mode, u, cs, w_tilde, gamma, opts);
    r.gamma = gamma;
    r.vol = portfolio_stats(u, r.rebalance.w).vol;
    r.evaluations = ++out.evaluations;
    return r;
  };
  const auto done = [&](TargetVolResult r) {
    r.evaluations = out.evaluations;
    return r;
  };

  TargetVolResult lo = eval(0.0);
  const double vol_min = lo.vol;
  if (std::abs(lo.vol - sigma_target) <= tol)
    return done(lo);
  if (lo.vol > sigma_target) {
    std::ostringstream msg;
    msg << "target volatility " << sigma_target << " is below the minimum attainable "
        << lo.vol << " (" << to_string(mode) << ")";
    throw SolverError(msg.str());
  }

  constexpr double kGammaCap = 1048576.0;
  TargetVolResult hi = eval(1.0);
  while (hi.vol < sigma_target - tol) {
    if (hi.vol < lo.vol - kMonotoneSlack) {
      std::ostringstream msg;
      msg << "volatility decreased from " << lo.vol << " (gamma " << lo.gamma << ") to "
          << hi.vol << " (gamma " << hi.gamma << ")";
      throw SolverError(msg.str());
    }
    if (hi.gamma >= kGammaCap) {
      std::ostringstream msg;
      msg << "target volatility " << sigma_target << " unreachable in " << to_string(mode)
          << " mode: attainable range [" << vol_min << ", "
          << hi.vol << "] up to gamma = " << kGammaCap;
      throw SolverError(msg.str());
    }
    lo = hi;
    hi = eval(2.0 * hi.gamma);
  }
  if (std::abs(hi.vol - sigma_target) <= tol)
    return done(hi);

  for (int it = 0; it < 200; ++it) {
    const TargetVolResult mid = eval(0.5 * (lo.gamma + hi.gamma));
    if (mid.vol < lo.vol - kMonotoneSlack || mid.vol > hi.vol + kMonotoneSlack) {
      std::ostringstream msg;
      msg << "volatility is not monotone in gamma near " << mid.gamma << ": " << lo.vol
          << ", " << mid.vol << ", " << hi.vol;
      throw SolverError(msg.str());
    }
    if (std::abs(mid.vol - sigma_target) <= tol)
      return done(mid);
    (mid.vol < sigma_target ? lo : hi) = mid;
    if (hi.gamma - lo.gamma <= 1e-15 * hi.gamma)
      break;
  }
  const TargetVolResult &closest =
      std::abs(lo.vol - sigma_target) < std::abs(hi.vol - sigma_target) ? lo : hi;
  std::ostringstream msg;
  msg << "gamma bisection stalled at volatility " << closest.vol << " (target " << sigma_target
      << ", tolerance " << tol << ")";
  throw SolverError(msg.str());
}

std::vector<double> GridSpec::values() const
{
  if (count < 1)
    throw InputError("grid needs at least one point");
  if (!std::isfinite(min) || !std::isfinite(max) || max < min)
    throw InputError("grid bounds must be finite with min <= max");
  const bool log = kind == Kind::Gamma && log_spaced;
  if (kind == Kind::Gamma && min < 0.0)
    throw InputError("gamma grid must be non-negative");
  if (kind == Kind::Sigma && !(min > 0.0))
    throw InputError("volatility grid must be positive");
  if (log && !(min > 0.0))
    throw InputError("log-spaced grid needs min > 0");

  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    v[static_cast<std::size_t>(i)] =
        log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
  }
  if (count > 1)
    v.back() = max;
  return v;
}

double point_net_return(const Universe &u, const RebalanceResult &r, int rebalances,
                        NetReturnBasis basis)
{
  if (rebalances < 1)
    throw InputError("rebalances_per_year must be at least 1");
  const double gross =
      basis == NetReturnBasis::Raw ? r.w.dot(u.mu) : normalize(r.w).dot(u.mu);
  return gross - rebalances * r.cost_paid;
}

namespace {

FrontierPoint make_point(const Universe &u, const RebalanceResult &r, double gamma,
                         const FrontierOptions &opts)
{
  FrontierPoint p;
  p.gamma = gamma;
  p.weights_raw = r.w;
  p.weights_norm = normalize(r.w);
  p.wealth = r.w.sum();
  p.cost_paid = r.cost_paid;
  const PortfolioStats bar = portfolio_stats(u, p.weights_norm);
  p.sigma_bar = bar.vol;
  p.mu_gross = bar.mean;
  p.mu_net = point_net_return(u, r, opts.rebalances, opts.basis);
  p.ok = true;
  return p;
}

} // namespace

std::vector<FrontierPoint> frontier(Mode mode, const Universe &u, const CostSpec &cs,
                                    const Vector &w_tilde, const GridSpec &grid,
                                    const FrontierOptions &opts)
{
  if (opts.rebalances < 1)
    throw InputError("rebalances_per_year must be at least 1");
  if (mode == Mode::Strict && grid.kind == GridSpec::Kind::Gamma)
    throw InputError("strict mode needs a volatility grid");
  const std::vector<double> values = grid.values();
  std::vector<FrontierPoint> points(values.size());

  const auto solve_one = [&](std::size_t i) {
    FrontierPoint &p = points[i];
    try {
      if (grid.kind == GridSpec::Kind::Gamma) {
        p = make_point(u, solve_gamma(mode, u, cs, w_tilde, values[i], opts.solver), values[i],
                       opts);
      } else {
        const TargetVolResult t =
            solve_for_target_vol(mode, u, cs, w_tilde, values[i], opts.vol_tol, opts.solver);
        p = make_point(u, t.rebalance, t.gamma, opts);
      }
    } catch (const Error &e) {
      p = FrontierPoint{};
      p.gamma = grid.kind == GridSpec::Kind::Gamma ? values[i]
                                                   : std::numeric_limits<double>::quiet_NaN();
      p.error = e.what();
    }
  };

  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(values.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < values.size(); ++i)
      solve_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < values.size(); i = next++)
          solve_one(i);
      });
    for (auto &th : pool)
      th.join();
  }

  std::stable_partition(points.begin(), points.end(), [](const FrontierPoint &p) { return p.ok; });
  const auto first_failed =
      std::find_if(points.begin(), points.end(), [](const FrontierPoint &p) { return !p.ok; });
  std::stable_sort(points.begin(), first_failed, [](const FrontierPoint &a, const FrontierPoint &b) {
    return a.sigma_bar < b.sigma_bar;
  });
  return points;
}

std::vector<FrontierPoint> efficient_envelope(const std::vector<FrontierPoint> &points)
{
  std::vector<FrontierPoint> ok;
  for (const FrontierPoint &p : points)
    if (p.ok)
      ok.push_back(p);
  std::stable_sort(ok.begin(), ok.end(), [](const FrontierPoint &a, const FrontierPoint &b) {
    return a.sigma_bar < b.sigma_bar || (a.sigma_bar == b.sigma_bar && a.mu_net > b.mu_net);
  });
  std::vector<FrontierPoint> env;
  double best = -std::numeric_limits<double>::infinity();
  for (const FrontierPoint &p : ok) {
    if (p.mu_net > best) {
      env.push_back(p);
      best = p.mu_net;
    }
  }
  return env;
}

CompareReport compare_report(const Universe &u, const CostSpec &cs, const Vector &w_tilde,
                             double sigma_target, double tol, const SolverOptions &opts)
{
  cs.validate(u.size());
  CompareReport rep;
  rep.assets = u.names;
  const CostSpec lin = linear_part(cs);

  const auto column = [&](std::string label, const Vector &w, bool costs, bool net, double gamma) {
    CompareColumn c;
    c.label = std::move(label);
    c.w = w;
    c.stats = portfolio_stats(u, w);
    c.has_costs = costs;
    c.has_net = net;
    c.gamma = gamma;
    if (net) {
      c.cost_lc = rebalancing_cost(lin, CostModel::Linear, w, w_tilde);
      c.cost_qc = rebalancing_cost(cs, CostModel::Quadratic, w, w_tilde);
      c.mu_lc = c.stats.mean - c.cost_lc;
      c.mu_qc = c.stats.mean - c.cost_qc;
    }
    return c;
  };

  const TargetVolResult mvo = solve_for_target_vol(Mode::Mvo, u, cs, w_tilde, sigma_target, tol, opts);
  const TargetVolResult lc = solve_for_target_vol(Mode::Linear, u, cs, w_tilde, sigma_target, tol, opts);
  const TargetVolResult qc =
      solve_for_target_vol(Mode::Quadratic, u, cs, w_tilde, sigma_target, tol, opts);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.columns.push_back(column("w_tilde", w_tilde, false, true, nan));
  rep.columns.push_back(column("w_mvo", mvo.rebalance.w, true, true, mvo.gamma));
  rep.columns.push_back(column("w_lc", lc.rebalance.w, true, true, lc.gamma));
  rep.columns.push_back(column("w_qc", qc.rebalance.w, true, true, qc.gamma));
  rep.columns.push_back(column("wbar_lc", normalize(lc.rebalance.w), false, false, lc.gamma));
  rep.columns.push_back(column("wbar_qc", normalize(qc.rebalance.w), false, false, qc.gamma));
  return rep;
}

} // namespace mvtc
