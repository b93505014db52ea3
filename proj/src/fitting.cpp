#include "tmb/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "textio.hpp"

namespace tmb {

namespace {

constexpr double kTukeyC = 4.685;
constexpr double kMadToSigma = 1.4826;
constexpr int kMaxIrlsIterations = 50;
constexpr double kCoefficientTolerance = 1e-8;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Line {
  double intercept;
  double slope;
};

// Weighted least squares through the centroid form; zero weights allowed.
Line weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (sw <= 0.0) throw DataError("all samples rejected by the weight function");
  double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - my);
  }
  if (sxx <= 0.0)
    throw DataError("samples do not span distinct distances");
  double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

}  // namespace

LogDistanceFit fit_log_distance(const std::vector<PathLossSample>& samples) {
  if (samples.size() < 2)
    throw DataError("log-distance fit needs at least 2 samples, got " +
                    std::to_string(samples.size()));
  for (const auto& s : samples) {
    if (s.walls > 0)
      throw DataError("log-distance fit requires wall-free samples; location '" +
                      s.location_id + "' has " + std::to_string(s.walls) +
                      " walls");
    if (!(s.distance_m > 0.0))
      throw DomainError("sample distance must be positive at location '" +
                        s.location_id + "'");
  }

  size_t n = samples.size();
  std::vector<std::pair<double, double>> pts(n);
  for (size_t i = 0; i < n; ++i)
    pts[i] = {10.0 * std::log10(samples[i].distance_m), samples[i].pl_db};
  // Canonical order makes the fit independent of the input permutation.
  std::sort(pts.begin(), pts.end());
  std::vector<double> x(n), y(n), w(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    x[i] = pts[i].first;
    y[i] = pts[i].second;
  }

  Line fit = weighted_line(x, y, w);  // plain least squares start
  for (int iter = 0; iter < kMaxIrlsIterations; ++iter) {
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i)
      r[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    double med = median(r);
    std::vector<double> absdev(n);
    for (size_t i = 0; i < n; ++i) absdev[i] = std::abs(r[i] - med);
    double scale = kMadToSigma * median(absdev);
    if (scale < 1e-12) break;  // residuals collapsed; nothing left to reweight
    for (size_t i = 0; i < n; ++i) {
      double u = r[i] / (kTukeyC * scale);
      w[i] = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
    Line next;
    try {
      next = weighted_line(x, y, w);
    } catch (const DataError&) {
      break;  // reweighting degenerated; keep the last consistent fit
    }
    bool converged = std::abs(next.intercept - fit.intercept) <
                         kCoefficientTolerance &&
                     std::abs(next.slope - fit.slope) < kCoefficientTolerance;
    fit = next;
    if (converged) break;
  }
  return {fit.intercept, fit.slope};
}

KScan scan_wall_k(const std::vector<PathLossSample>& samples, double l0_db,
                  double gamma) {
  if (samples.empty()) throw DataError("wall attenuation search got no samples");
  bool any_walls = false;
  for (const auto& s : samples) {
    if (!(s.distance_m > 0.0))
      throw DomainError("sample distance must be positive at location '" +
                        s.location_id + "'");
    any_walls = any_walls || s.walls > 0;
  }
  if (!any_walls)
    throw DataError(
        "wall attenuation search needs at least one walled sample");

  size_t n = samples.size();
  std::vector<std::pair<double, double>> terms(n);
  for (size_t i = 0; i < n; ++i)
    terms[i] = {l0_db + 10.0 * gamma * std::log10(samples[i].distance_m) -
                    samples[i].pl_db,
                static_cast<double>(samples[i].walls)};
  // Canonical order keeps the scan independent of the input permutation.
  std::sort(terms.begin(), terms.end());
  std::vector<double> base(n), walls(n);
  for (size_t i = 0; i < n; ++i) {
    base[i] = terms[i].first;
    walls[i] = terms[i].second;
  }

  KScan scan;
  scan.trace.reserve(1001);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) {
    double k = i / 100.0;
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) {
      double err = base[j] + k * walls[j];
      sum += err * err;
    }
    double value = std::sqrt(sum / n);
    scan.trace.push_back({k, value});
    if (value < best) {  // strict: ties keep the smaller k
      best = value;
      scan.best_k_db = k;
    }
  }
  return scan;
}

double fit_wall_k(const std::vector<PathLossSample>& samples, double l0_db,
                  double gamma) {
  return scan_wall_k(samples, l0_db, gamma).best_k_db;
}

double compute_wbar(const std::vector<LinkGeometry>& geometries) {
  if (geometries.empty())
    throw DataError("wall density needs at least one location");
  double sum = 0.0;
  for (const auto& g : geometries) {
    if (!(g.distance_m > 0.0))
      throw DomainError("location distance must be positive");
    if (g.walls < 0) throw DomainError("wall count must be non-negative");
    sum += g.walls / g.distance_m;
  }
  return sum / static_cast<double>(geometries.size());
}

double rmse(Model m, const std::vector<PathLossSample>& samples,
            const PathLossParams& p) {
  if (samples.empty()) throw DataError("rmse needs at least one sample");
  double sum = 0.0;
  for (const auto& s : samples) {
    LinkGeometry g{s.distance_m, s.walls, 0};
    double err = evaluate(m, g, p) - s.pl_db;
    sum += err * err;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

namespace {

template <typename F>
auto fit_step(const char* step, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw DomainError(std::string(step) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(step) + ": " + e.what());
  }
}

}  // namespace

FitReport fit_full(const std::vector<PathLossSample>& samples,
                   const PathLossParams& base) {
  std::vector<PathLossSample> wall_free;
  for (const auto& s : samples)
    if (s.walls == 0) wall_free.push_back(s);

  FitReport report;
  report.params = base;
  report.sample_count = samples.size();

  LogDistanceFit line = fit_step("fit_log_distance", [&] {
    if (wall_free.empty())
      throw DataError("no wall-free samples in the input");
    return fit_log_distance(wall_free);
  });
  report.params.l0_db = line.l0_db;
  report.params.gamma = line.gamma;

  KScan scan = fit_step("fit_wall_k", [&] {
    return scan_wall_k(samples, line.l0_db, line.gamma);
  });
  report.params.k_db_per_wall = scan.best_k_db;
  report.k_trace = std::move(scan.trace);

  report.params.wbar_walls_per_m = fit_step("compute_wbar", [&] {
    std::vector<LinkGeometry> geoms;
    geoms.reserve(samples.size());
    for (const auto& s : samples) geoms.push_back({s.distance_m, s.walls, 0});
    return compute_wbar(geoms);
  });

  for (Model m : kAllModels)
    report.rmse_db[m] =
        fit_step("rmse", [&] { return rmse(m, samples, report.params); });
  return report;
}

std::string serialize_report(const FitReport& report) {
  std::string out = serialize_params(report.params);
  out += "sample_count = " + std::to_string(report.sample_count) + "\n";
  for (const auto& [m, value] : report.rmse_db) {
    out += "rmse.";
    out += model_name(m);
    out += " = ";
    out += detail::canon(value);
    out += '\n';
  }
  return out;
}

std::string serialize_k_trace(const std::vector<KScanPoint>& trace) {
  std::string out = "k_db,rmse_db\n";
  for (const auto& p : trace) {
    out += detail::canon(p.k_db);
    out += ',';
    out += detail::canon(p.rmse_db);
    out += '\n';
  }
  return out;
}

}  // namespace tmb
