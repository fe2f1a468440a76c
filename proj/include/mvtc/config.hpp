#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvtc/budget_projection.hpp"
#include "mvtc/frontier.hpp"

namespace mvtc {

/// Malformed or inconsistent configuration document.
class ConfigError : public InputError
{
public:
  using InputError::InputError;
};

/// Everything a run needs, in decimal units.
///
/// Document keys: assets [{name, mu, vol}], correlation (scalar or matrix),
/// covariance (matrix, overrides correlation), costs {c_minus, c_plus,
/// delta_minus, delta_plus} (scalar or per-asset, missing entries are 0),
/// current_weights (list, or {"mvo_target_vol": s} for the long-only Markowitz
/// portfolio at volatility s), mode, gamma | target_vol (alias sigma_star),
/// grid {kind, min, max, count, log_spaced}, rebalances_per_year, net_basis,
/// solver {...}, units ("decimal" or "percent").
struct RunConfig
{
  Universe universe;
  CostSpec costs;
  Vector current_weights;
  Mode mode = Mode::Quadratic;
  std::optional<double> gamma;
  std::optional<double> target_vol;
  GridSpec grid;
  int rebalances = 1;
  NetReturnBasis basis = NetReturnBasis::Raw;
  SolverOptions solver;
  double vol_tol = 1e-4;
  int threads = 1;
  std::vector<std::string> warnings;

  FrontierOptions frontier_options() const;
};

RunConfig parse_config(const nlohmann::json &doc);
RunConfig load_config(const std::string &path);

/// {"v", "dv_minus", "dv_plus"} or {"y"} (stacked), plus "costs" and an
/// optional "method" (auto, quintic, bisection).
struct ProjectionRequest
{
  ProjectionInput input;
  ProjectionMethod method = ProjectionMethod::Auto;
};

ProjectionRequest parse_projection_request(const nlohmann::json &doc);

NetReturnBasis parse_net_basis(const std::string &name);
ProjectionMethod parse_projection_method(const std::string &name);

nlohmann::json read_json_file(const std::string &path);

} // namespace mvtc
