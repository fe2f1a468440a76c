#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>

#include "mvtc/report.hpp"

using namespace mvtc;
using nlohmann::json;

namespace {

struct Common
{
  std::string config;
  std::string out;
  std::string format;
  bool verbose = false;
};

void add_common(CLI::App *cmd, Common &c, const std::string &default_format)
{
  c.format = default_format;
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json", "text"}))
      ->capture_default_str();
  cmd->add_flag("--verbose,-v", c.verbose, "Solver diagnostics on stderr");
}

class Output
{
public:
  explicit Output(const std::string &path)
  {
    if (!path.empty()) {
      file_.open(path);
      if (!file_)
        throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream &stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

RunConfig load(const Common &c)
{
  RunConfig cfg = load_config(c.config);
  for (const std::string &w : cfg.warnings)
    std::cerr << "warning: " << w << '\n';
  return cfg;
}

void emit_json(std::ostream &out, const json &j) { out << j.dump(2) << '\n'; }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct OptimizeArgs
{
  Common common;
  std::string mode;
  std::optional<double> gamma;
  std::optional<double> target_vol;
  std::optional<double> vol_tol;
};

int run_optimize(const OptimizeArgs &a)
{
  RunConfig cfg = load(a.common);
  if (!a.mode.empty())
    cfg.mode = parse_mode(a.mode);
  if (a.gamma) {
    cfg.gamma = a.gamma;
    cfg.target_vol.reset();
  }
  if (a.target_vol) {
    cfg.target_vol = a.target_vol;
    cfg.gamma.reset();
  }
  if (a.vol_tol)
    cfg.vol_tol = *a.vol_tol;
  if (!cfg.gamma && !cfg.target_vol)
    throw ConfigError("optimize needs --gamma or --target-vol (or 'gamma'/'target_vol' in the config)");
  if (cfg.mode == Mode::Strict && !cfg.target_vol)
    throw ConfigError("strict mode needs a target volatility");

  const auto t0 = std::chrono::steady_clock::now();
  RebalanceResult result;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  json diag = json::object();
  const Universe &u = cfg.universe;
  if (cfg.mode == Mode::Strict) {
    const StrictResult s = solve_strict(u, cfg.costs, cfg.current_weights, *cfg.target_vol,
                                        cfg.solver.strict);
    diag["feasible"] = s.status.feasible;
    diag["objective"] = s.status.objective;
    diag["budget_residual"] = s.status.budget_residual;
    diag["variance_residual"] = s.status.variance_residual;
    diag["iterations"] = s.status.iterations;
    diag["start"] = s.status.start;
    diag["degenerate_projections"] = s.status.degenerate_projections;
    if (!s.status.feasible)
      throw SolverError("strict solver found no feasible point: " + diag.dump());
    result = s.rebalance;
  } else if (cfg.target_vol) {
    const TargetVolResult t = solve_for_target_vol(cfg.mode, u, cfg.costs, cfg.current_weights,
                                                   *cfg.target_vol, cfg.vol_tol, cfg.solver);
    result = t.rebalance;
    gamma = t.gamma;
    diag["evaluations"] = t.evaluations;
    diag["vol"] = t.vol;
  } else if (cfg.mode == Mode::Quadratic) {
    const QcResult q = solve_qc(u, cfg.costs, cfg.current_weights, *cfg.gamma, cfg.solver.admm,
                                cfg.solver.bounds);
    diag["converged"] = q.diagnostics.converged;
    diag["iterations"] = q.diagnostics.iterations;
    diag["primal_residual"] = q.diagnostics.primal_residual;
    diag["dual_residual"] = q.diagnostics.dual_residual;
    diag["budget_residual"] = q.diagnostics.budget_residual;
    diag["polished"] = q.diagnostics.polished;
    diag["degenerate_projections"] = q.diagnostics.degenerate_projections;
    if (!q.diagnostics.converged)
      throw SolverError("ADMM did not converge: " + diag.dump());
    result = q.rebalance;
    gamma = *cfg.gamma;
  } else {
    result = solve_gamma(cfg.mode, u, cfg.costs, cfg.current_weights, *cfg.gamma, cfg.solver);
    gamma = *cfg.gamma;
  }
  diag["seconds"] = seconds_since(t0);
  if (a.common.verbose)
    std::cerr << "diagnostics: " << diag.dump() << '\n';

  OptimizeReport rep = make_optimize_report(cfg, result, gamma);
  rep.diagnostics = diag;
  Output out(a.common.out);
  if (parse_format(a.common.format) == OutputFormat::Json)
    emit_json(out.stream(), optimize_json(rep));
  else
    write_optimize_csv(out.stream(), rep);
  return 0;
}

struct FrontierArgs
{
  Common common;
  std::string mode;
  std::string grid_kind;
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  std::optional<int> grid_count;
  std::optional<int> rebalances;
  std::string net_basis;
  std::optional<int> threads;
  bool envelope = false;
};

int run_frontier(const FrontierArgs &a)
{
  RunConfig cfg = load(a.common);
  if (!a.mode.empty())
    cfg.mode = parse_mode(a.mode);
  if (!a.grid_kind.empty()) {
    cfg.grid.kind = a.grid_kind == "sigma" ? GridSpec::Kind::Sigma : GridSpec::Kind::Gamma;
    cfg.grid.log_spaced = cfg.grid.kind == GridSpec::Kind::Gamma;
  }
  if (a.grid_min)
    cfg.grid.min = *a.grid_min;
  if (a.grid_max)
    cfg.grid.max = *a.grid_max;
  if (a.grid_count)
    cfg.grid.count = *a.grid_count;
  if (a.rebalances)
    cfg.rebalances = *a.rebalances;
  if (!a.net_basis.empty())
    cfg.basis = parse_net_basis(a.net_basis);
  if (a.threads)
    cfg.threads = *a.threads;
  if (cfg.rebalances < 1)
    throw ConfigError("--rebalances must be at least 1");

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<FrontierPoint> points = frontier(cfg.mode, cfg.universe, cfg.costs,
                                               cfg.current_weights, cfg.grid,
                                               cfg.frontier_options());
  int failed = 0;
  for (const FrontierPoint &p : points)
    if (!p.ok) {
      ++failed;
      std::cerr << "warning: grid point failed: " << p.error << '\n';
    }
  if (a.common.verbose)
    std::cerr << "frontier: " << points.size() - failed << " points, " << failed << " failed, "
              << seconds_since(t0) << " s\n";
  if (failed == static_cast<int>(points.size()))
    throw SolverError("every frontier point failed");
  if (a.envelope)
    points = efficient_envelope(points);

  Output out(a.common.out);
  if (parse_format(a.common.format) == OutputFormat::Json)
    emit_json(out.stream(), frontier_json(points, cfg.universe.names));
  else
    write_frontier_csv(out.stream(), points, cfg.universe.names);
  return 0;
}

struct CompareArgs
{
  Common common;
  std::optional<double> target_vol;
  double tol = 1e-6;
};

int run_compare(const CompareArgs &a)
{
  RunConfig cfg = load(a.common);
  if (a.target_vol)
    cfg.target_vol = a.target_vol;
  if (!cfg.target_vol)
    throw ConfigError("compare needs --target-vol (or 'target_vol' in the config)");
  const auto t0 = std::chrono::steady_clock::now();
  const CompareReport rep = compare_report(cfg.universe, cfg.costs, cfg.current_weights,
                                           *cfg.target_vol, a.tol, cfg.solver);
  if (a.common.verbose)
    std::cerr << "compare: " << seconds_since(t0) << " s\n";
  Output out(a.common.out);
  switch (parse_format(a.common.format)) {
  case OutputFormat::Json:
    emit_json(out.stream(), compare_json(rep));
    break;
  case OutputFormat::Csv:
    write_compare_csv(out.stream(), rep);
    break;
  case OutputFormat::Text:
    write_compare_text(out.stream(), rep);
    break;
  }
  return 0;
}

struct ProjectArgs
{
  Common common;
  std::string input;
  std::string method;
};

int run_project(const ProjectArgs &a)
{
  ProjectionRequest req = parse_projection_request(read_json_file(a.input));
  if (!a.method.empty())
    req.method = parse_projection_method(a.method);
  const ProjectionResult r = project_budget(req.input, req.method);
  if (a.common.verbose)
    std::cerr << "projection: lambda = " << format_number(r.lambda, 17)
              << ", candidates = " << r.candidates_considered << '\n';
  Output out(a.common.out);
  if (parse_format(a.common.format) == OutputFormat::Csv) {
    out.stream() << "index,y\n";
    for (Index i = 0; i < r.y.size(); ++i)
      out.stream() << i << ',' << format_number(r.y[i], 17) << '\n';
  } else {
    emit_json(out.stream(), projection_json(r, req.input));
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Mean-variance portfolio optimization with transaction costs"};
  app.require_subcommand(1);

  const std::vector<std::string> modes{"mvo", "linear", "quadratic", "strict"};

  OptimizeArgs opt;
  CLI::App *optimize = app.add_subcommand("optimize", "Solve one portfolio");
  optimize->add_option("--config", opt.common.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(optimize, opt.common, "json");
  optimize->add_option("--mode", opt.mode, "Overrides the config mode")->check(CLI::IsMember(modes));
  CLI::Option *g = optimize->add_option("--gamma", opt.gamma, "Risk tolerance");
  CLI::Option *tv = optimize->add_option("--target-vol", opt.target_vol, "Target volatility (decimal)");
  g->excludes(tv);
  optimize->add_option("--vol-tol", opt.vol_tol, "Volatility tolerance of the gamma search");

  FrontierArgs fr;
  CLI::App *front = app.add_subcommand("frontier", "Efficient frontier sweep");
  front->add_option("--config", fr.common.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(front, fr.common, "csv");
  front->add_option("--mode", fr.mode, "Overrides the config mode")->check(CLI::IsMember(modes));
  front->add_option("--grid-kind", fr.grid_kind, "gamma or sigma")
      ->check(CLI::IsMember({"gamma", "sigma"}));
  front->add_option("--grid-min", fr.grid_min, "Smallest grid value");
  front->add_option("--grid-max", fr.grid_max, "Largest grid value");
  front->add_option("--grid-count", fr.grid_count, "Number of grid points");
  front->add_option("--rebalances", fr.rebalances, "Rebalances per year");
  front->add_option("--net-basis", fr.net_basis, "raw or normalized")
      ->check(CLI::IsMember({"raw", "normalized"}));
  front->add_option("--threads", fr.threads, "Worker threads");
  front->add_flag("--envelope", fr.envelope, "Keep only the efficient envelope");

  CompareArgs cmp;
  CLI::App *compare = app.add_subcommand("compare", "Side-by-side report at a target volatility");
  compare->add_option("--config", cmp.common.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(compare, cmp.common, "text");
  compare->add_option("--target-vol", cmp.target_vol, "Target volatility (decimal)");
  compare->add_option("--vol-tol", cmp.tol, "Volatility tolerance")->capture_default_str();

  ProjectArgs prj;
  CLI::App *project = app.add_subcommand("project", "Project a point onto the budget surface");
  project->add_option("--input", prj.input, "Projection input (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(project, prj.common, "json");
  project->add_option("--method", prj.method, "auto, quintic or bisection")
      ->check(CLI::IsMember({"auto", "quintic", "bisection"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*optimize)
      return run_optimize(opt);
    if (*front)
      return run_frontier(fr);
    if (*compare)
      return run_compare(cmp);
    return run_project(prj);
  } catch (const SolverError &e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 1;
  } catch (const InputError &e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
