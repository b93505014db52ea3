// Command line front end: model evaluation, curve export, fitting,
// capture ingestion, variance reports, MCS tables, and rate prediction.
// Exit codes: 0 success, 1 domain or data error, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tmb/errors.hpp"
#include "tmb/fitting.hpp"
#include "tmb/measurements.hpp"
#include "tmb/pathloss.hpp"
#include "tmb/rate_model.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string db(double v) { return fmt("%.3f", v); }          // dB / dBm
std::string pct(double v) { return fmt("%.2f", v); }         // percent
std::string plain(double v) { return fmt("%.6g", v); }       // unitless

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tmb::DataError("cannot open '" + path + "'");
  return in;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw tmb::DataError("cannot open '" + path + "' for writing");
  out << content;
}

// Shared parameter flags; later sources win: defaults < --params file < flags.
struct ParamFlags {
  std::string params_path;
  std::optional<double> l0, gamma, k, wbar, fc, n_itu, lf;

  void attach(CLI::App* cmd) {
    cmd->add_option("--params", params_path,
                    "Key-value parameter file (l0_db, gamma, ...)");
    cmd->add_option("--l0", l0, "Loss at 1 m [dB]");
    cmd->add_option("--gamma", gamma, "Path loss exponent");
    cmd->add_option("--k", k, "Per-wall attenuation [dB]");
    cmd->add_option("--wbar", wbar, "Mean wall density [walls/m]");
    cmd->add_option("--fc", fc, "Carrier frequency [GHz]");
    cmd->add_option("--n-itu", n_itu, "Distance power coefficient");
    cmd->add_option("--lf", lf, "Floor penetration term [dB]");
  }

  tmb::PathLossParams resolve() const {
    tmb::PathLossParams p;
    if (!params_path.empty()) {
      std::ifstream in = open_input(params_path);
      std::stringstream text;
      text << in.rdbuf();
      p = tmb::parse_params(text.str(), p);
    }
    if (l0) p.l0_db = *l0;
    if (gamma) p.gamma = *gamma;
    if (k) p.k_db_per_wall = *k;
    if (wbar) p.wbar_walls_per_m = *wbar;
    if (fc) p.fc_ghz = *fc;
    if (n_itu) p.n_itu = *n_itu;
    if (lf) p.lf_itu_db = *lf;
    return p;
  }
};

tmb::Model parse_model(const std::string& name) {
  try {
    return tmb::model_from_name(name);
  } catch (const tmb::DomainError&) {
    throw UsageError("unknown model '" + name +
                     "' (expected residential, enterprise, log-distance, "
                     "wall-factor, tmb, or itu)");
  }
}

struct Range {
  double min, max, step;
};

Range parse_range(const std::string& text) {
  auto fail = [&] {
    return UsageError("invalid range '" + text +
                      "', expected min:max:step with min < max and step > 0");
  };
  std::istringstream in(text);
  std::string a, b, c;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') ||
      !std::getline(in, c))
    throw fail();
  try {
    size_t pa, pb, pc;
    Range r{std::stod(a, &pa), std::stod(b, &pb), std::stod(c, &pc)};
    if (pa != a.size() || pb != b.size() || pc != c.size()) throw fail();
    if (!(r.min < r.max) || !(r.step > 0)) throw fail();
    return r;
  } catch (const std::invalid_argument&) {
    throw fail();
  } catch (const std::out_of_range&) {
    throw fail();
  }
}

std::vector<tmb::PacketRecord> load_capture(const std::string& path) {
  std::ifstream in = open_input(path);
  tmb::CaptureParseResult parsed = tmb::parse_capture(in);
  if (!parsed.errors.empty()) {
    std::cerr << path << ": rejected " << parsed.errors.size() << " row(s)\n";
    for (const auto& e : parsed.errors)
      std::cerr << path << ": line " << e.line << ": " << e.message << "\n";
  }
  return std::move(parsed.records);
}

tmb::LocationRegistry load_registry(const std::string& path) {
  if (path.empty()) return tmb::LocationRegistry::reference();
  std::ifstream in = open_input(path);
  return tmb::LocationRegistry::from_csv(in);
}

tmb::Gi parse_gi(const std::string& name) {
  if (name == "long") return tmb::Gi::Long;
  if (name == "short") return tmb::Gi::Short;
  throw UsageError("invalid guard interval '" + name +
                   "' (expected long or short)");
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  ParamFlags params;
  std::string model = "tmb";
  double d = 0;
  int walls = 0;
  int floors = 0;
  std::optional<double> ptx;
};

int run_eval(const EvalArgs& args) {
  tmb::Model model = parse_model(args.model);
  tmb::PathLossParams p = args.params.resolve();
  tmb::LinkGeometry g{args.d, args.walls, args.floors};
  double pl = tmb::evaluate(model, g, p);
  std::cout << "model=" << tmb::model_name(model) << " d=" << db(args.d)
            << " PL=" << db(pl) << " dB";
  if (args.ptx) std::cout << " RSSI=" << db(*args.ptx - pl) << " dBm";
  std::cout << "\n";
  return 0;
}

// ---- curve ---------------------------------------------------------------

struct CurveArgs {
  ParamFlags params;
  std::string models = "tmb";
  std::string range;
  std::string registry_path;
  bool use_registry = false;
  int walls = 0;
  int floors = 0;
  std::string out;
};

int run_curve(const CurveArgs& args) {
  std::vector<tmb::Model> models;
  std::istringstream list(args.models);
  std::string name;
  while (std::getline(list, name, ','))
    models.push_back(parse_model(name));
  if (models.empty()) throw UsageError("--models needs at least one model");

  tmb::PathLossParams p = args.params.resolve();
  std::string outText = "d_m";
  for (tmb::Model m : models) {
    outText += ',';
    outText += tmb::model_name(m);
  }
  outText += '\n';

  auto emit = [&](const tmb::LinkGeometry& g) {
    outText += plain(g.distance_m);
    for (tmb::Model m : models) {
      outText += ',';
      outText += db(tmb::evaluate(m, g, p));
    }
    outText += '\n';
  };

  if (args.use_registry || !args.registry_path.empty()) {
    tmb::LocationRegistry registry = load_registry(args.registry_path);
    std::vector<tmb::LinkGeometry> geoms = registry.geometries();
    std::stable_sort(geoms.begin(), geoms.end(),
                     [](const tmb::LinkGeometry& a, const tmb::LinkGeometry& b) {
                       return a.distance_m < b.distance_m;
                     });
    for (const auto& g : geoms) emit(g);
  } else {
    Range r = parse_range(args.range);
    for (int i = 0;; ++i) {
      double d = r.min + i * r.step;
      if (d > r.max + r.step * 1e-9) break;
      emit({d, args.walls, args.floors});
    }
  }
  write_output(args.out, outText);
  return 0;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
  ParamFlags params;
  std::string captures;
  std::string registry_path;
  std::string out;
  std::string k_trace;
};

int run_fit(const FitArgs& args) {
  std::vector<tmb::PacketRecord> records = load_capture(args.captures);
  tmb::LocationRegistry registry = load_registry(args.registry_path);
  std::vector<tmb::PathLossSample> samples =
      tmb::aggregate_path_loss(records, registry);
  tmb::FitReport report = tmb::fit_full(samples, args.params.resolve());

  const tmb::PathLossParams& p = report.params;
  std::cout << "L0=" << db(p.l0_db) << " dB gamma=" << plain(p.gamma)
            << " k=" << db(p.k_db_per_wall)
            << " dB/wall wbar=" << plain(p.wbar_walls_per_m) << " walls/m\n";
  std::cout << "samples=" << report.sample_count << "\n";
  std::cout << "model,rmse_db\n";
  for (const auto& [m, value] : report.rmse_db)
    std::cout << tmb::model_name(m) << "," << db(value) << "\n";

  if (!args.out.empty()) write_output(args.out, tmb::serialize_report(report));
  if (!args.k_trace.empty())
    write_output(args.k_trace, tmb::serialize_k_trace(report.k_trace));
  return 0;
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string captures;
  std::string out;
};

int run_ingest(const IngestArgs& args) {
  std::ifstream in = open_input(args.captures);
  tmb::CaptureParseResult parsed = tmb::parse_capture(in);
  std::cout << "records=" << parsed.records.size()
            << " rejected=" << parsed.errors.size() << "\n";
  for (const auto& e : parsed.errors)
    std::cout << "line " << e.line << ": " << e.message << "\n";
  if (!args.out.empty())
    write_output(args.out, tmb::serialize_capture(parsed.records));
  return 0;
}

// ---- variance --------------------------------------------------------------

struct VarianceArgs {
  std::string captures;
  bool time = false;
  std::string grid_path;
  bool channel = false;
  int ref_channel = 0;
  bool check = false;
  std::string out;
};

std::map<std::string, std::string> load_grid_map(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != "point_id,center_id")
    throw tmb::ParseError("grid map header mismatch, expected "
                          "'point_id,center_id'");
  std::map<std::string, std::string> map;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
      throw tmb::ParseError("grid map line " + std::to_string(lineno) +
                            ": expected point_id,center_id");
    auto [it, inserted] =
        map.emplace(line.substr(0, comma), line.substr(comma + 1));
    if (!inserted)
      throw tmb::ParseError("grid map line " + std::to_string(lineno) +
                            ": point '" + it->first + "' mapped twice");
  }
  return map;
}

int run_variance(const VarianceArgs& args) {
  if (!args.time && args.grid_path.empty() && !args.channel)
    throw UsageError("select at least one of --time, --grid, --channel");
  if (args.channel && args.ref_channel <= 0)
    throw UsageError("--channel requires --ref-channel");

  std::vector<tmb::PacketRecord> records = load_capture(args.captures);
  std::vector<tmb::VarianceReport> reports;
  if (args.time) reports.push_back(tmb::time_variance(records));
  if (!args.grid_path.empty())
    reports.push_back(tmb::grid_variance(records, load_grid_map(args.grid_path)));
  if (args.channel)
    reports.push_back(tmb::channel_variance(records, args.ref_channel));

  for (const auto& report : reports)
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

  write_output(args.out, tmb::serialize_variance(reports));

  if (args.check) {
    for (const auto& report : reports)
      for (const auto& e : report.exceeding())
        std::cerr << "flag: location '" << e.location_id << "'"
                  << (e.channel ? " channel " + std::to_string(*e.channel) : "")
                  << " value " << db(e.value_db) << " dB exceeds 5.000 dB\n";
  }
  return 0;
}

// ---- mcs-table ---------------------------------------------------------------

struct TableArgs {
  std::string captures;
  bool reference = false;
  std::string out;
};

int run_mcs_table(const TableArgs& args) {
  if (args.reference == !args.captures.empty())
    throw UsageError("pass exactly one of --captures or --reference");
  if (args.reference) {
    write_output(args.out, tmb::serialize_table(tmb::reference_table()));
    return 0;
  }
  std::vector<tmb::PacketRecord> records = load_capture(args.captures);
  tmb::McsDistributionTable table = tmb::build_table(records);
  if (table.out_of_range || table.excluded)
    std::cerr << "skipped records: out_of_range=" << table.out_of_range
              << " excluded=" << table.excluded << "\n";
  write_output(args.out, tmb::serialize_table(table));
  return 0;
}

// ---- predict -----------------------------------------------------------------

struct PredictArgs {
  ParamFlags params;
  std::string table_path;
  std::string captures;
  std::optional<double> rssi;
  std::optional<double> d;
  std::string model = "tmb";
  int walls = 0;
  int floors = 0;
  int bw = 0;
  double ptx = 0;
  std::string gi = "long";
  bool full = false;
};

int run_predict(const PredictArgs& args) {
  if (!args.table_path.empty() && !args.captures.empty())
    throw UsageError("pass at most one of --table or --captures");
  if (args.rssi.has_value() == args.d.has_value())
    throw UsageError("pass exactly one of --rssi or --d");

  tmb::McsDistributionTable loaded;
  const tmb::McsDistributionTable* table = &tmb::reference_table();
  if (!args.table_path.empty()) {
    std::ifstream in = open_input(args.table_path);
    loaded = tmb::parse_table(in);
    table = &loaded;
  } else if (!args.captures.empty()) {
    loaded = tmb::build_table(load_capture(args.captures));
    table = &loaded;
  }

  tmb::Gi gi = parse_gi(args.gi);
  tmb::RatePrediction prediction;
  if (args.d) {
    tmb::Model model = parse_model(args.model);
    tmb::PathLossParams p = args.params.resolve();
    tmb::LinkGeometry g{*args.d, args.walls, args.floors};
    prediction =
        tmb::query_by_distance(*table, model, g, p, args.bw, args.ptx, gi);
    std::cout << "model=" << tmb::model_name(model) << " d=" << db(*args.d)
              << " pl=" << db(args.ptx - prediction.rssi_dbm) << " dB\n";
  } else {
    prediction = tmb::query_by_rssi(*table, *args.rssi, args.bw, args.ptx, gi);
  }

  std::cout << "rssi=" << db(prediction.rssi_dbm) << " dBm bin=["
            << plain(prediction.bin.lower_dbm) << ","
            << plain(prediction.bin.upper_dbm()) << ") bw=" << args.bw
            << " MHz ptx=" << db(args.ptx) << " dBm\n";
  if (prediction.borrowed)
    std::cout << "note=no data in bin, borrowed from ["
              << plain(prediction.source_bin.lower_dbm) << ","
              << plain(prediction.source_bin.upper_dbm()) << ")\n";
  std::cout << "mode=MCS " << prediction.mode.mcs << " / "
            << prediction.mode.nss << "SS ("
            << pct(prediction.mode.probability * 100.0) << "%)\n";
  std::cout << "expected_rate=" << fmt("%.1f", prediction.expected_rate_mbps)
            << " Mbps samples=" << prediction.samples << "\n";
  if (args.full)
    for (const auto& e : prediction.distribution)
      std::cout << "p(mcs=" << e.mcs << ",nss=" << e.nss
                << ")=" << pct(e.probability * 100.0) << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Indoor 5 GHz WiFi path loss models, fitting, and rate prediction"};
  app.require_subcommand(1);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a path loss model");
  eval_args.params.attach(eval);
  eval->add_option("--model", eval_args.model, "Model name")
      ->capture_default_str();
  eval->add_option("--d", eval_args.d, "Distance [m]")->required();
  eval->add_option("--walls", eval_args.walls, "Walls traversed");
  eval->add_option("--floors", eval_args.floors, "Floors traversed");
  eval->add_option("--ptx", eval_args.ptx, "Transmit power [dBm]");

  CurveArgs curve_args;
  CLI::App* curve = app.add_subcommand("curve", "Export PL-vs-distance CSV");
  curve_args.params.attach(curve);
  curve->add_option("--models", curve_args.models,
                    "Comma-separated model names")
      ->capture_default_str();
  CLI::Option* curve_range =
      curve->add_option("--d", curve_args.range, "Distance range min:max:step");
  curve->add_flag("--at-registry", curve_args.use_registry,
                  "Evaluate at registry locations instead of a range");
  curve->add_option("--registry", curve_args.registry_path,
                    "Registry CSV (default: embedded reference locations)");
  curve->add_option("--walls", curve_args.walls, "Walls traversed");
  curve->add_option("--floors", curve_args.floors, "Floors traversed");
  curve->add_option("--out", curve_args.out, "Output path (default stdout)");

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit parameters from captures");
  fit_args.params.attach(fit);
  fit->add_option("--captures", fit_args.captures, "Capture CSV")->required();
  fit->add_option("--registry", fit_args.registry_path,
                  "Registry CSV (default: embedded reference locations)");
  fit->add_option("--out", fit_args.out, "Write the report document here");
  fit->add_option("--k-trace", fit_args.k_trace,
                  "Write the k search trace CSV here");

  IngestArgs ingest_args;
  CLI::App* ingest =
      app.add_subcommand("ingest", "Validate and normalize a capture CSV");
  ingest->add_option("--captures", ingest_args.captures, "Capture CSV")
      ->required();
  ingest->add_option("--out", ingest_args.out, "Write accepted rows here");

  VarianceArgs variance_args;
  CLI::App* variance =
      app.add_subcommand("variance", "RSSI variance statistics");
  variance->add_option("--captures", variance_args.captures, "Capture CSV")
      ->required();
  variance->add_flag("--time", variance_args.time,
                     "Per-location RSSI standard deviation");
  variance->add_option("--grid", variance_args.grid_path,
                       "Grid map CSV (point_id,center_id)");
  variance->add_flag("--channel", variance_args.channel,
                     "Per-channel mean RSSI deltas");
  variance->add_option("--ref-channel", variance_args.ref_channel,
                       "Reference channel for --channel");
  variance->add_flag("--check", variance_args.check,
                     "Flag statistics exceeding 5 dB on stderr");
  variance->add_option("--out", variance_args.out,
                       "Output path (default stdout)");

  TableArgs table_args;
  CLI::App* mcs_table =
      app.add_subcommand("mcs-table", "Build or export an MCS table");
  mcs_table->add_option("--captures", table_args.captures, "Capture CSV");
  mcs_table->add_flag("--reference", table_args.reference,
                      "Export the embedded reference table");
  mcs_table->add_option("--out", table_args.out,
                        "Output path (default stdout)");

  PredictArgs predict_args;
  CLI::App* predict =
      app.add_subcommand("predict", "Predict MCS and rate from the table");
  predict_args.params.attach(predict);
  predict->add_option("--table", predict_args.table_path, "Table CSV");
  predict->add_option("--captures", predict_args.captures,
                      "Capture CSV to build the table from");
  predict->add_option("--rssi", predict_args.rssi, "RSSI [dBm]");
  predict->add_option("--d", predict_args.d, "Distance [m]");
  predict->add_option("--model", predict_args.model,
                      "Model for --d (default tmb)")
      ->capture_default_str();
  predict->add_option("--walls", predict_args.walls, "Walls traversed");
  predict->add_option("--floors", predict_args.floors, "Floors traversed");
  predict->add_option("--bw", predict_args.bw, "Bandwidth [MHz]")->required();
  predict->add_option("--ptx", predict_args.ptx, "Transmit power [dBm]")
      ->required();
  predict->add_option("--gi", predict_args.gi, "Guard interval: long|short")
      ->capture_default_str();
  predict->add_flag("--full", predict_args.full,
                    "Print the full distribution");

  std::string registry_out;
  CLI::App* registry_export = app.add_subcommand(
      "registry-export", "Export the embedded location registry");
  registry_export->add_option("--out", registry_out,
                              "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (eval->parsed()) return run_eval(eval_args);
    if (curve->parsed()) {
      bool registry_mode =
          curve_args.use_registry || !curve_args.registry_path.empty();
      if (!registry_mode && curve_range->count() == 0)
        throw UsageError("pass --d min:max:step, --at-registry, or --registry");
      if (registry_mode && curve_range->count() > 0)
        throw UsageError("--d cannot be combined with registry evaluation");
      return run_curve(curve_args);
    }
    if (fit->parsed()) return run_fit(fit_args);
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (variance->parsed()) return run_variance(variance_args);
    if (mcs_table->parsed()) return run_mcs_table(table_args);
    if (predict->parsed()) return run_predict(predict_args);
    if (registry_export->parsed()) {
      write_output(registry_out,
                   tmb::LocationRegistry::reference().to_csv());
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tmb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
