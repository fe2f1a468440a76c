#include "mvtc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mvtc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string &what) { throw ConfigError(what); }

void reject_unknown(const json &obj, const std::set<std::string> &known, const std::string &where)
{
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      fail("unknown key '" + it.key() + "' in " + where);
}

double number(const json &j, const std::string &what)
{
  if (!j.is_number())
    fail(what + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x))
    fail(what + " must be finite");
  return x;
}

int integer(const json &j, const std::string &what)
{
  if (!j.is_number_integer())
    fail(what + " must be an integer");
  return j.get<int>();
}

Vector vector_of(const json &j, Index n, const std::string &what)
{
  if (j.is_number())
    return Vector::Constant(n, number(j, what));
  if (!j.is_array())
    fail(what + " must be a number or a list");
  if (static_cast<Index>(j.size()) != n) {
    std::ostringstream msg;
    msg << what << " has " << j.size() << " entries, expected " << n;
    fail(msg.str());
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v[i] = number(j[static_cast<std::size_t>(i)], what);
  return v;
}

Matrix matrix_of(const json &j, Index n, const std::string &what)
{
  if (!j.is_array() || static_cast<Index>(j.size()) != n)
    fail(what + " must be a list of " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    m.row(i) = vector_of(j[static_cast<std::size_t>(i)], n, what + " row").transpose();
  return m;
}

void read_solver(const json &j, RunConfig &cfg)
{
  if (!j.is_object())
    fail("solver must be an object");
  reject_unknown(j, {"qp", "admm", "strict", "vol_tol", "threads", "long_only", "turnover_cap"},
                 "solver");
  SolverOptions &s = cfg.solver;
  if (j.contains("qp")) {
    const json &q = j["qp"];
    reject_unknown(q, {"tol", "max_iter"}, "solver.qp");
    if (q.contains("tol"))
      s.qp.tol = number(q["tol"], "solver.qp.tol");
    if (q.contains("max_iter"))
      s.qp.max_iter = integer(q["max_iter"], "solver.qp.max_iter");
  }
  if (j.contains("admm")) {
    const json &a = j["admm"];
    reject_unknown(a,
                   {"phi", "relative_penalty", "eps_abs", "eps_rel", "max_iter", "budget_tol",
                    "adaptive_penalty", "projection", "polish", "polish_radius"},
                   "solver.admm");
    AdmmSettings &t = s.admm;
    if (a.contains("phi"))
      t.phi = number(a["phi"], "solver.admm.phi");
    if (a.contains("relative_penalty"))
      t.relative_penalty = a["relative_penalty"].get<bool>();
    if (a.contains("eps_abs"))
      t.eps_abs = number(a["eps_abs"], "solver.admm.eps_abs");
    if (a.contains("eps_rel"))
      t.eps_rel = number(a["eps_rel"], "solver.admm.eps_rel");
    if (a.contains("max_iter"))
      t.max_iter = integer(a["max_iter"], "solver.admm.max_iter");
    if (a.contains("budget_tol"))
      t.budget_tol = number(a["budget_tol"], "solver.admm.budget_tol");
    if (a.contains("adaptive_penalty"))
      t.adaptive_penalty = a["adaptive_penalty"].get<bool>();
    if (a.contains("projection"))
      t.projection = parse_projection_method(a["projection"].get<std::string>());
    if (a.contains("polish"))
      t.polish = a["polish"].get<bool>();
    if (a.contains("polish_radius"))
      t.polish_radius = number(a["polish_radius"], "solver.admm.polish_radius");
    if (!(t.phi > 0.0) || t.max_iter < 1 || !(t.eps_abs >= 0.0) || !(t.eps_rel >= 0.0))
      fail("solver.admm needs phi > 0, max_iter >= 1 and non-negative tolerances");
  }
  if (j.contains("strict")) {
    const json &a = j["strict"];
    reject_unknown(a, {"phi", "eps_abs", "eps_rel", "max_iter", "feas_tol", "starts", "seed"},
                   "solver.strict");
    StrictSettings &t = s.strict;
    if (a.contains("phi"))
      t.phi = number(a["phi"], "solver.strict.phi");
    if (a.contains("eps_abs"))
      t.eps_abs = number(a["eps_abs"], "solver.strict.eps_abs");
    if (a.contains("eps_rel"))
      t.eps_rel = number(a["eps_rel"], "solver.strict.eps_rel");
    if (a.contains("max_iter"))
      t.max_iter = integer(a["max_iter"], "solver.strict.max_iter");
    if (a.contains("feas_tol"))
      t.feas_tol = number(a["feas_tol"], "solver.strict.feas_tol");
    if (a.contains("starts"))
      t.starts = integer(a["starts"], "solver.strict.starts");
    if (a.contains("seed"))
      t.seed = a["seed"].get<std::uint64_t>();
    if (!(t.phi > 0.0) || t.max_iter < 1 || t.starts < 1)
      fail("solver.strict needs phi > 0, max_iter >= 1 and starts >= 1");
  }
  if (j.contains("vol_tol"))
    cfg.vol_tol = number(j["vol_tol"], "solver.vol_tol");
  if (!(cfg.vol_tol > 0.0))
    fail("solver.vol_tol must be positive");
  if (j.contains("threads"))
    cfg.threads = integer(j["threads"], "solver.threads");
  if (cfg.threads < 1)
    fail("solver.threads must be at least 1");
  if (j.contains("long_only"))
    s.bounds.long_only = j["long_only"].get<bool>();
  if (j.contains("turnover_cap"))
    s.bounds.turnover_cap = number(j["turnover_cap"], "solver.turnover_cap");
}

} // namespace

FrontierOptions RunConfig::frontier_options() const
{
  FrontierOptions o;
  o.rebalances = rebalances;
  o.basis = basis;
  o.vol_tol = vol_tol;
  o.threads = threads;
  o.solver = solver;
  return o;
}

NetReturnBasis parse_net_basis(const std::string &name)
{
  if (name == "raw")
    return NetReturnBasis::Raw;
  if (name == "normalized")
    return NetReturnBasis::Normalized;
  throw ConfigError("unknown net-return basis '" + name + "' (expected raw or normalized)");
}

ProjectionMethod parse_projection_method(const std::string &name)
{
  if (name == "auto")
    return ProjectionMethod::Auto;
  if (name == "quintic")
    return ProjectionMethod::Quintic;
  if (name == "bisection")
    return ProjectionMethod::Bisection;
  throw ConfigError("unknown projection method '" + name +
                    "' (expected auto, quintic or bisection)");
}

RunConfig parse_config(const json &doc)
{
  try {
    if (!doc.is_object())
      fail("configuration must be a JSON object");
    reject_unknown(doc,
                   {"assets", "correlation", "covariance", "costs", "current_weights", "mode",
                    "gamma", "target_vol", "sigma_star", "grid", "rebalances_per_year",
                    "net_basis", "solver", "units"},
                   "configuration");

    double unit = 1.0;
    if (doc.contains("units")) {
      const std::string u = doc["units"].get<std::string>();
      if (u == "percent")
        unit = 0.01;
      else if (u != "decimal")
        fail("units must be 'decimal' or 'percent'");
    }

    RunConfig cfg;
    if (!doc.contains("assets") || !doc["assets"].is_array() || doc["assets"].empty())
      fail("'assets' must be a non-empty list");
    const json &assets = doc["assets"];
    const Index n = static_cast<Index>(assets.size());
    std::vector<std::string> names;
    Vector mu(n), vols(n);
    for (Index i = 0; i < n; ++i) {
      const json &a = assets[static_cast<std::size_t>(i)];
      const std::string where = "assets[" + std::to_string(i) + "]";
      if (!a.is_object())
        fail(where + " must be an object");
      reject_unknown(a, {"name", "mu", "vol"}, where);
      names.push_back(a.contains("name") ? a["name"].get<std::string>()
                                         : "A" + std::to_string(i + 1));
      if (!a.contains("mu"))
        fail(where + " needs 'mu'");
      mu[i] = unit * number(a["mu"], where + ".mu");
      vols[i] = a.contains("vol") ? unit * number(a["vol"], where + ".vol") : 0.0;
    }

    Matrix cov;
    if (doc.contains("covariance")) {
      cov = unit * unit * matrix_of(doc["covariance"], n, "covariance");
      if (doc.contains("correlation"))
        cfg.warnings.push_back("'covariance' overrides 'correlation'");
    } else {
      if (!doc.contains("correlation"))
        fail("give 'correlation' or 'covariance'");
      for (Index i = 0; i < n; ++i)
        if (!(vols[i] >= 0.0))
          fail("asset volatilities must be non-negative");
      const json &c = doc["correlation"];
      cov = c.is_number() ? build_covariance(vols, number(c, "correlation"))
                          : build_covariance(vols, matrix_of(c, n, "correlation"));
    }
    cfg.universe = Universe::create(mu, cov, names);

    cfg.costs = CostSpec::zero(n);
    if (doc.contains("costs")) {
      const json &c = doc["costs"];
      if (!c.is_object())
        fail("'costs' must be an object");
      reject_unknown(c, {"c_minus", "c_plus", "delta_minus", "delta_plus"}, "costs");
      if (c.contains("c_minus"))
        cfg.costs.c_minus = unit * vector_of(c["c_minus"], n, "costs.c_minus");
      if (c.contains("c_plus"))
        cfg.costs.c_plus = unit * vector_of(c["c_plus"], n, "costs.c_plus");
      if (c.contains("delta_minus"))
        cfg.costs.delta_minus = unit * vector_of(c["delta_minus"], n, "costs.delta_minus");
      if (c.contains("delta_plus"))
        cfg.costs.delta_plus = unit * vector_of(c["delta_plus"], n, "costs.delta_plus");
    }
    cfg.costs.validate(n);

    if (doc.contains("mode"))
      cfg.mode = parse_mode(doc["mode"].get<std::string>());

    if (doc.contains("target_vol") && doc.contains("sigma_star"))
      fail("'target_vol' and 'sigma_star' are aliases; give one");
    if (doc.contains("gamma"))
      cfg.gamma = number(doc["gamma"], "gamma");
    for (const char *key : {"target_vol", "sigma_star"})
      if (doc.contains(key))
        cfg.target_vol = unit * number(doc[key], key);
    if (cfg.gamma && cfg.target_vol)
      fail("give either 'gamma' or 'target_vol', not both");
    if (cfg.gamma && !(*cfg.gamma >= 0.0))
      fail("gamma must be non-negative");
    if (cfg.target_vol && !(*cfg.target_vol > 0.0))
      fail("target_vol must be positive");

    if (doc.contains("grid")) {
      const json &g = doc["grid"];
      reject_unknown(g, {"kind", "min", "max", "count", "log_spaced"}, "grid");
      if (g.contains("kind")) {
        const std::string k = g["kind"].get<std::string>();
        if (k == "sigma")
          cfg.grid.kind = GridSpec::Kind::Sigma;
        else if (k != "gamma")
          fail("grid.kind must be 'gamma' or 'sigma'");
      }
      const double scale = cfg.grid.kind == GridSpec::Kind::Sigma ? unit : 1.0;
      if (cfg.grid.kind == GridSpec::Kind::Sigma) {
        cfg.grid.log_spaced = false;
        if (!g.contains("min") || !g.contains("max"))
          fail("a sigma grid needs 'min' and 'max'");
      }
      if (g.contains("min"))
        cfg.grid.min = scale * number(g["min"], "grid.min");
      if (g.contains("max"))
        cfg.grid.max = scale * number(g["max"], "grid.max");
      if (g.contains("count"))
        cfg.grid.count = integer(g["count"], "grid.count");
      if (g.contains("log_spaced"))
        cfg.grid.log_spaced = g["log_spaced"].get<bool>();
      try {
        cfg.grid.values();
      } catch (const InputError &e) {
        fail(e.what());
      }
    }

    if (doc.contains("rebalances_per_year"))
      cfg.rebalances = integer(doc["rebalances_per_year"], "rebalances_per_year");
    if (cfg.rebalances < 1)
      fail("rebalances_per_year must be at least 1");
    if (doc.contains("net_basis"))
      cfg.basis = parse_net_basis(doc["net_basis"].get<std::string>());
    if (doc.contains("solver"))
      read_solver(doc["solver"], cfg);

    if (!doc.contains("current_weights"))
      fail("'current_weights' is required");
    const json &cw = doc["current_weights"];
    if (cw.is_object()) {
      reject_unknown(cw, {"mvo_target_vol"}, "current_weights");
      if (!cw.contains("mvo_target_vol"))
        fail("current_weights object needs 'mvo_target_vol'");
      const double s = unit * number(cw["mvo_target_vol"], "current_weights.mvo_target_vol");
      try {
        cfg.current_weights =
            solve_for_target_vol(Mode::Mvo, cfg.universe, CostSpec::zero(n), Vector::Zero(n), s,
                                 1e-10, cfg.solver)
                .rebalance.w;
      } catch (const SolverError &e) {
        fail(std::string("current_weights.mvo_target_vol: ") + e.what());
      }
    } else {
      cfg.current_weights = unit * vector_of(cw, n, "current_weights");
    }
    const double total = cfg.current_weights.sum();
    if (std::abs(total - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "current weights sum to " << total << ", not 1 (partial investment)";
      cfg.warnings.push_back(msg.str());
    }
    detail::check_current_portfolio(cfg.current_weights, n, cfg.solver.bounds);
    return cfg;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const ConfigError &) {
    throw;
  } catch (const InputError &e) {
    throw ConfigError(e.what());
  }
}

json read_json_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error &e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

RunConfig load_config(const std::string &path) { return parse_config(read_json_file(path)); }

ProjectionRequest parse_projection_request(const json &doc)
{
  try {
    if (!doc.is_object())
      fail("projection input must be a JSON object");
    reject_unknown(doc, {"v", "dv_minus", "dv_plus", "y", "costs", "method"}, "projection input");
    ProjectionRequest req;
    Index n = 0;
    Vector stacked;
    if (doc.contains("y")) {
      if (doc.contains("v"))
        fail("give either 'y' or 'v'/'dv_minus'/'dv_plus'");
      const json &y = doc["y"];
      if (!y.is_array() || y.empty() || y.size() % 3 != 0)
        fail("'y' must be a list of length 3n");
      n = static_cast<Index>(y.size() / 3);
      stacked = vector_of(y, 3 * n, "y");
    } else {
      if (!doc.contains("v") || !doc["v"].is_array() || doc["v"].empty())
        fail("'v' must be a non-empty list");
      n = static_cast<Index>(doc["v"].size());
      stacked.resize(3 * n);
      stacked.head(n) = vector_of(doc["v"], n, "v");
      stacked.segment(n, n) =
          doc.contains("dv_minus") ? vector_of(doc["dv_minus"], n, "dv_minus") : Vector::Zero(n);
      stacked.tail(n) =
          doc.contains("dv_plus") ? vector_of(doc["dv_plus"], n, "dv_plus") : Vector::Zero(n);
    }
    CostSpec cs = CostSpec::zero(n);
    if (doc.contains("costs")) {
      const json &c = doc["costs"];
      reject_unknown(c, {"c_minus", "c_plus", "delta_minus", "delta_plus"}, "costs");
      if (c.contains("c_minus"))
        cs.c_minus = vector_of(c["c_minus"], n, "costs.c_minus");
      if (c.contains("c_plus"))
        cs.c_plus = vector_of(c["c_plus"], n, "costs.c_plus");
      if (c.contains("delta_minus"))
        cs.delta_minus = vector_of(c["delta_minus"], n, "costs.delta_minus");
      if (c.contains("delta_plus"))
        cs.delta_plus = vector_of(c["delta_plus"], n, "costs.delta_plus");
    }
    req.input = ProjectionInput::from_stacked(stacked, cs);
    req.input.validate();
    if (doc.contains("method"))
      req.method = parse_projection_method(doc["method"].get<std::string>());
    return req;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("projection input: ") + e.what());
  } catch (const ConfigError &) {
    throw;
  } catch (const InputError &e) {
    throw ConfigError(e.what());
  }
}

} // namespace mvtc
