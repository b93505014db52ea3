#include "tmb/pathloss.hpp"

#include <cmath>
#include <sstream>

#include "textio.hpp"

namespace tmb {

namespace {

void check_distance(double d_m) {
  if (!(d_m > 0.0))
    throw DomainError("distance must be positive, got " + detail::canon(d_m));
}

void check_frequency(double fc_ghz) {
  if (!(fc_ghz > 0.0))
    throw DomainError("carrier frequency must be positive, got " +
                      detail::canon(fc_ghz));
}

void check_count(int n, const char* what) {
  if (n < 0)
    throw DomainError(std::string(what) + " count must be non-negative, got " +
                      std::to_string(n));
}

}  // namespace

std::string_view model_name(Model m) {
  switch (m) {
    case Model::Residential: return "residential";
    case Model::Enterprise: return "enterprise";
    case Model::LogDistance: return "log-distance";
    case Model::WallFactor: return "wall-factor";
    case Model::Tmb: return "tmb";
    case Model::ItuR: return "itu";
  }
  throw DomainError("invalid model id");
}

Model model_from_name(std::string_view name) {
  for (Model m : kAllModels)
    if (name == model_name(m)) return m;
  throw DomainError("unknown model name '" + std::string(name) + "'");
}

double pl_residential(double d_m, double fc_ghz, int walls, int floors) {
  check_distance(d_m);
  check_frequency(fc_ghz);
  check_count(walls, "wall");
  check_count(floors, "floor");
  double pl = 40.05 + 20.0 * std::log10(fc_ghz / 2.4) +
              20.0 * std::log10(std::min(d_m, 5.0));
  if (d_m > 5.0) pl += 35.0 * std::log10(d_m / 5.0);
  if (floors > 0) {
    double f = floors;
    pl += 18.3 * std::pow(f, (f + 2.0) / (f + 1.0) - 0.46);
  }
  return pl + 5.0 * walls;
}

double pl_enterprise(double d_m, double fc_ghz, int walls) {
  check_distance(d_m);
  check_frequency(fc_ghz);
  check_count(walls, "wall");
  double pl = 40.05 + 20.0 * std::log10(fc_ghz / 2.4) +
              20.0 * std::log10(std::min(d_m, 10.0));
  if (d_m > 10.0) pl += 35.0 * std::log10(d_m / 10.0);
  return pl + 7.0 * walls;
}

double pl_log_distance(double d_m, double l0_db, double gamma) {
  check_distance(d_m);
  return l0_db + 10.0 * gamma * std::log10(d_m);
}

double pl_wall_factor(double d_m, int walls, double l0_db, double gamma,
                      double k_db_per_wall) {
  check_count(walls, "wall");
  return pl_log_distance(d_m, l0_db, gamma) + k_db_per_wall * walls;
}

double pl_tmb(double d_m, const PathLossParams& p) {
  check_distance(d_m);
  return p.l0_db + 10.0 * p.gamma * std::log10(d_m) +
         p.k_db_per_wall * p.wbar_walls_per_m * d_m;
}

double pl_itu(double d_m, double fc_ghz, double n, double lf_db) {
  check_distance(d_m);
  check_frequency(fc_ghz);
  // Site-general form takes the frequency in MHz.
  return 20.0 * std::log10(fc_ghz * 1000.0) + n * std::log10(d_m) + lf_db -
         28.0;
}

double evaluate(Model m, const LinkGeometry& g, const PathLossParams& p) {
  switch (m) {
    case Model::Residential:
      return pl_residential(g.distance_m, p.fc_ghz, g.walls, g.floors);
    case Model::Enterprise:
      return pl_enterprise(g.distance_m, p.fc_ghz, g.walls);
    case Model::LogDistance:
      return pl_log_distance(g.distance_m, p.l0_db, p.gamma);
    case Model::WallFactor:
      return pl_wall_factor(g.distance_m, g.walls, p.l0_db, p.gamma,
                            p.k_db_per_wall);
    case Model::Tmb:
      return pl_tmb(g.distance_m, p);
    case Model::ItuR:
      return pl_itu(g.distance_m, p.fc_ghz, p.n_itu, p.lf_itu_db);
  }
  throw DomainError("invalid model id");
}

double rssi_at(Model m, const LinkGeometry& g, const PathLossParams& p,
               double ptx_dbm) {
  return ptx_dbm - evaluate(m, g, p);
}

LinkBudget link_budget(Model m, const LinkGeometry& g, const PathLossParams& p,
                       double ptx_dbm) {
  double pl = evaluate(m, g, p);
  return {ptx_dbm, pl, ptx_dbm - pl};
}

namespace {

constexpr std::string_view kParamKeys[] = {
    "l0_db", "gamma", "k_db_per_wall", "wbar_walls_per_m",
    "fc_ghz", "n_itu", "lf_itu_db",
};

double* param_slot(PathLossParams& p, std::string_view key) {
  if (key == "l0_db") return &p.l0_db;
  if (key == "gamma") return &p.gamma;
  if (key == "k_db_per_wall") return &p.k_db_per_wall;
  if (key == "wbar_walls_per_m") return &p.wbar_walls_per_m;
  if (key == "fc_ghz") return &p.fc_ghz;
  if (key == "n_itu") return &p.n_itu;
  if (key == "lf_itu_db") return &p.lf_itu_db;
  return nullptr;
}

}  // namespace

std::string serialize_params(const PathLossParams& p) {
  PathLossParams copy = p;
  std::string out;
  for (std::string_view key : kParamKeys) {
    out += key;
    out += " = ";
    out += detail::canon(*param_slot(copy, key));
    out += '\n';
  }
  return out;
}

PathLossParams parse_params(std::string_view text, const PathLossParams& base) {
  PathLossParams p = base;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    std::string_view key = detail::trim(s.substr(0, eq));
    std::string_view val = detail::trim(s.substr(eq + 1));
    double* slot = param_slot(p, key);
    if (!slot)
      throw ParseError("line " + std::to_string(lineno) + ": unknown key '" +
                       std::string(key) + "'");
    auto parsed = detail::parse_double(val);
    if (!parsed)
      throw ParseError("line " + std::to_string(lineno) +
                       ": invalid number '" + std::string(val) + "'");
    *slot = *parsed;
  }
  return p;
}

}  // namespace tmb
