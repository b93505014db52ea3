#pragma once

#include <array>
#include <string>
#include <string_view>

#include "tmb/errors.hpp"

namespace tmb {

// Indoor path loss models for 5 GHz WiFi links. All distances in metres,
// frequencies in GHz, losses in dB.
enum class Model {
  Residential,   // two-slope home model, 5 dB per wall
  Enterprise,    // two-slope office model, 7 dB per wall
  LogDistance,   // L0 + 10*gamma*log10(d)
  WallFactor,    // log-distance plus k dB per traversed wall
  Tmb,           // log-distance plus k * wbar * d (average wall density)
  ItuR,          // site-general indoor model, f in MHz
};

inline constexpr std::array<Model, 6> kAllModels = {
    Model::Residential, Model::Enterprise, Model::LogDistance,
    Model::WallFactor,  Model::Tmb,        Model::ItuR,
};

// Names used by the CLI and in report documents.
std::string_view model_name(Model m);
Model model_from_name(std::string_view name);  // DomainError on unknown name

struct LinkGeometry {
  double distance_m = 1.0;
  int walls = 0;   // office walls traversed by the direct path
  int floors = 0;  // floors traversed (residential model only)
};

struct PathLossParams {
  double l0_db = 54.1200;          // loss at 1 m
  double gamma = 2.06067;          // path loss exponent
  double k_db_per_wall = 5.25;     // per-wall attenuation
  double wbar_walls_per_m = 0.1467;  // mean wall density of the environment
  double fc_ghz = 5.18;            // carrier frequency
  double n_itu = 31.0;             // distance power coefficient
  double lf_itu_db = 0.0;          // floor penetration term
};

// ptx_dbm - pl_db = rssi_dbm by construction.
struct LinkBudget {
  double ptx_dbm;
  double pl_db;
  double rssi_dbm;
};

// Individual evaluators. All throw DomainError on d <= 0, fc <= 0, or
// negative wall/floor counts.
double pl_residential(double d_m, double fc_ghz, int walls, int floors);
double pl_enterprise(double d_m, double fc_ghz, int walls);
double pl_log_distance(double d_m, double l0_db, double gamma);
double pl_wall_factor(double d_m, int walls, double l0_db, double gamma,
                      double k_db_per_wall);
double pl_tmb(double d_m, const PathLossParams& p);
double pl_itu(double d_m, double fc_ghz, double n, double lf_db);

// Dispatch on model id; geometry fields a model does not use are ignored.
double evaluate(Model m, const LinkGeometry& g, const PathLossParams& p);

double rssi_at(Model m, const LinkGeometry& g, const PathLossParams& p,
               double ptx_dbm);
LinkBudget link_budget(Model m, const LinkGeometry& g, const PathLossParams& p,
                       double ptx_dbm);

// Flat key-value document, one "key = value" per line, '#' starts a comment.
// Keys: l0_db, gamma, k_db_per_wall, wbar_walls_per_m, fc_ghz, n_itu,
// lf_itu_db. parse starts from `base` so partial documents override defaults;
// unknown keys raise ParseError.
std::string serialize_params(const PathLossParams& p);
PathLossParams parse_params(std::string_view text,
                            const PathLossParams& base = {});

}  // namespace tmb
