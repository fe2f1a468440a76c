#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvtc/config.hpp"

namespace mvtc {

enum class OutputFormat { Csv, Json, Text };

OutputFormat parse_format(const std::string &name);

/// Single solve as reported by `optimize`.
struct OptimizeReport
{
  Mode mode = Mode::Quadratic;
  std::vector<std::string> assets;
  RebalanceResult result;
  PortfolioStats raw;
  PortfolioStats normalized;
  double mu_net = 0.0;
  /// NaN in strict mode.
  double gamma = 0.0;
  nlohmann::json diagnostics = nlohmann::json::object();
};

OptimizeReport make_optimize_report(const RunConfig &cfg, const RebalanceResult &r, double gamma);

/// name,value rows: summary fields, then w.<asset>, w_bar.<asset>,
/// dw_minus.<asset>, dw_plus.<asset>.
void write_optimize_csv(std::ostream &out, const OptimizeReport &r);
nlohmann::json optimize_json(const OptimizeReport &r);

/// gamma, sigma_bar, mu_gross, cost_paid, mu_net, wealth, then one normalized
/// weight per asset; 10 significant digits. Failed points are skipped.
void write_frontier_csv(std::ostream &out, const std::vector<FrontierPoint> &points,
                        const std::vector<std::string> &assets);
nlohmann::json frontier_json(const std::vector<FrontierPoint> &points,
                             const std::vector<std::string> &assets);

/// Percentages with two decimals, one column per portfolio.
void write_compare_text(std::ostream &out, const CompareReport &r);
void write_compare_csv(std::ostream &out, const CompareReport &r);
nlohmann::json compare_json(const CompareReport &r);

nlohmann::json projection_json(const ProjectionResult &r, const ProjectionInput &in);

/// Decimal value printed with `digits` significant digits.
std::string format_number(double x, int digits = 10);

} // namespace mvtc
