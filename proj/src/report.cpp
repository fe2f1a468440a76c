#include "mvtc/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace mvtc {

using nlohmann::json;

namespace {

json to_json(const Vector &v)
{
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

json named(const std::vector<std::string> &assets, const Vector &v)
{
  json o = json::object();
  for (std::size_t i = 0; i < assets.size(); ++i)
    o[assets[i]] = v[static_cast<Index>(i)];
  return o;
}

std::string csv_field(const std::string &s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string q = "\"";
  for (char c : s)
    q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string percent(double x)
{
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * x;
  return s.str();
}

struct CompareRow
{
  std::string label;
  std::vector<std::string> cells;
};

std::vector<CompareRow> compare_rows(const CompareReport &r)
{
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < r.assets.size(); ++i) {
    CompareRow row{r.assets[i], {}};
    for (const CompareColumn &c : r.columns)
      row.cells.push_back(percent(c.w[static_cast<Index>(i)]));
    rows.push_back(row);
  }
  const auto stat = [&](const char *label, auto value, auto shown) {
    CompareRow row{label, {}};
    for (const CompareColumn &c : r.columns)
      row.cells.push_back(shown(c) ? percent(value(c)) : std::string());
    rows.push_back(row);
  };
  const auto always = [](const CompareColumn &) { return true; };
  const auto costs = [](const CompareColumn &c) { return c.has_costs; };
  const auto net = [](const CompareColumn &c) { return c.has_net; };
  stat("mu(w)", [](const CompareColumn &c) { return c.stats.mean; }, always);
  stat("sigma(w)", [](const CompareColumn &c) { return c.stats.vol; }, always);
  stat("C_LC(w)", [](const CompareColumn &c) { return c.cost_lc; }, costs);
  stat("C_QC(w)", [](const CompareColumn &c) { return c.cost_qc; }, costs);
  stat("mu_LC(w)", [](const CompareColumn &c) { return c.mu_lc; }, net);
  stat("mu_QC(w)", [](const CompareColumn &c) { return c.mu_qc; }, net);
  return rows;
}

} // namespace

OutputFormat parse_format(const std::string &name)
{
  if (name == "csv")
    return OutputFormat::Csv;
  if (name == "json")
    return OutputFormat::Json;
  if (name == "text")
    return OutputFormat::Text;
  throw InputError("unknown output format '" + name + "' (expected csv, json or text)");
}

std::string format_number(double x, int digits)
{
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

OptimizeReport make_optimize_report(const RunConfig &cfg, const RebalanceResult &r, double gamma)
{
  OptimizeReport rep;
  rep.mode = cfg.mode;
  rep.assets = cfg.universe.names;
  rep.result = r;
  rep.gamma = gamma;
  rep.raw = portfolio_stats(cfg.universe, r.w);
  rep.normalized = portfolio_stats(cfg.universe, normalize(r.w));
  rep.mu_net = point_net_return(cfg.universe, r, cfg.rebalances, cfg.basis);
  return rep;
}

void write_optimize_csv(std::ostream &out, const OptimizeReport &r)
{
  const auto line = [&](const std::string &name, double v) {
    out << csv_field(name) << ',' << format_number(v) << '\n';
  };
  out << "name,value\n";
  out << "mode," << to_string(r.mode) << '\n';
  line("gamma", r.gamma);
  line("mu", r.raw.mean);
  line("sigma", r.raw.vol);
  line("mu_bar", r.normalized.mean);
  line("sigma_bar", r.normalized.vol);
  line("cost_paid", r.result.cost_paid);
  line("wealth", r.result.w.sum());
  line("mu_net", r.mu_net);
  const Vector w_bar = normalize(r.result.w);
  for (std::size_t i = 0; i < r.assets.size(); ++i)
    line("w." + r.assets[i], r.result.w[static_cast<Index>(i)]);
  for (std::size_t i = 0; i < r.assets.size(); ++i)
    line("w_bar." + r.assets[i], w_bar[static_cast<Index>(i)]);
  for (std::size_t i = 0; i < r.assets.size(); ++i)
    line("dw_minus." + r.assets[i], r.result.trade.dw_minus[static_cast<Index>(i)]);
  for (std::size_t i = 0; i < r.assets.size(); ++i)
    line("dw_plus." + r.assets[i], r.result.trade.dw_plus[static_cast<Index>(i)]);
}

json optimize_json(const OptimizeReport &r)
{
  json j;
  j["mode"] = to_string(r.mode);
  j["gamma"] = r.gamma;
  j["mu"] = r.raw.mean;
  j["sigma"] = r.raw.vol;
  j["mu_bar"] = r.normalized.mean;
  j["sigma_bar"] = r.normalized.vol;
  j["cost_paid"] = r.result.cost_paid;
  j["wealth"] = r.result.w.sum();
  j["mu_net"] = r.mu_net;
  j["complementary"] = r.result.complementary;
  j["weights"] = named(r.assets, r.result.w);
  j["weights_norm"] = named(r.assets, normalize(r.result.w));
  j["dw_minus"] = named(r.assets, r.result.trade.dw_minus);
  j["dw_plus"] = named(r.assets, r.result.trade.dw_plus);
  if (!r.diagnostics.empty())
    j["diagnostics"] = r.diagnostics;
  return j;
}

void write_frontier_csv(std::ostream &out, const std::vector<FrontierPoint> &points,
                        const std::vector<std::string> &assets)
{
  out << "gamma,sigma_bar,mu_gross,cost_paid,mu_net,wealth";
  for (const std::string &a : assets)
    out << ',' << csv_field(a);
  out << '\n';
  for (const FrontierPoint &p : points) {
    if (!p.ok)
      continue;
    out << format_number(p.gamma) << ',' << format_number(p.sigma_bar) << ','
        << format_number(p.mu_gross) << ',' << format_number(p.cost_paid) << ','
        << format_number(p.mu_net) << ',' << format_number(p.wealth);
    for (Index i = 0; i < p.weights_norm.size(); ++i)
      out << ',' << format_number(p.weights_norm[i]);
    out << '\n';
  }
}

json frontier_json(const std::vector<FrontierPoint> &points, const std::vector<std::string> &assets)
{
  json j;
  j["assets"] = assets;
  json arr = json::array();
  for (const FrontierPoint &p : points) {
    json q;
    q["ok"] = p.ok;
    q["gamma"] = p.gamma;
    if (p.ok) {
      q["sigma_bar"] = p.sigma_bar;
      q["mu_gross"] = p.mu_gross;
      q["cost_paid"] = p.cost_paid;
      q["mu_net"] = p.mu_net;
      q["wealth"] = p.wealth;
      q["weights_raw"] = to_json(p.weights_raw);
      q["weights_norm"] = to_json(p.weights_norm);
    } else {
      q["error"] = p.error;
    }
    arr.push_back(q);
  }
  j["points"] = arr;
  return j;
}

void write_compare_text(std::ostream &out, const CompareReport &r)
{
  const std::vector<CompareRow> rows = compare_rows(r);
  std::size_t label_width = 0;
  for (const CompareRow &row : rows)
    label_width = std::max(label_width, row.label.size());
  std::size_t cell_width = 6;
  for (const CompareColumn &c : r.columns)
    cell_width = std::max(cell_width, c.label.size());

  out << std::left << std::setw(static_cast<int>(label_width)) << "" << std::right;
  for (const CompareColumn &c : r.columns)
    out << "  " << std::setw(static_cast<int>(cell_width)) << c.label;
  out << '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == r.assets.size())
      out << std::string(label_width + r.columns.size() * (cell_width + 2), '-') << '\n';
    out << std::left << std::setw(static_cast<int>(label_width)) << rows[k].label << std::right;
    for (const std::string &cell : rows[k].cells)
      out << "  " << std::setw(static_cast<int>(cell_width)) << cell;
    out << '\n';
  }
}

void write_compare_csv(std::ostream &out, const CompareReport &r)
{
  out << "row";
  for (const CompareColumn &c : r.columns)
    out << ',' << csv_field(c.label);
  out << '\n';
  for (const CompareRow &row : compare_rows(r)) {
    out << csv_field(row.label);
    for (const std::string &cell : row.cells)
      out << ',' << cell;
    out << '\n';
  }
}

json compare_json(const CompareReport &r)
{
  json j;
  j["assets"] = r.assets;
  json cols = json::array();
  for (const CompareColumn &c : r.columns) {
    json o;
    o["label"] = c.label;
    o["gamma"] = c.gamma;
    o["weights"] = named(r.assets, c.w);
    o["mu"] = c.stats.mean;
    o["sigma"] = c.stats.vol;
    if (c.has_costs) {
      o["cost_lc"] = c.cost_lc;
      o["cost_qc"] = c.cost_qc;
    }
    if (c.has_net) {
      o["mu_lc"] = c.mu_lc;
      o["mu_qc"] = c.mu_qc;
    }
    cols.push_back(o);
  }
  j["columns"] = cols;
  return j;
}

json projection_json(const ProjectionResult &r, const ProjectionInput &in)
{
  json j;
  j["y"] = to_json(r.y);
  j["lambda"] = r.lambda;
  j["distance"] = r.distance;
  j["budget_residual"] = budget_residual(r.y, in.costs);
  j["candidates_considered"] = r.candidates_considered;
  j["degenerate"] = r.degenerate;
  return j;
}

} // namespace mvtc
