#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tmb/errors.hpp"
#include "tmb/pathloss.hpp"

namespace tmb {

// One aggregated measurement point: mean path loss at a surveyed location.
struct PathLossSample {
  std::string location_id;
  double distance_m = 0.0;
  int walls = 0;
  double pl_db = 0.0;
  std::size_t records = 0;  // capture records behind the mean
};

struct LogDistanceFit {
  double l0_db = 0.0;
  double gamma = 0.0;
};

// Robust line fit of pl against 10*log10(d): IRLS with Tukey bisquare
// (c = 4.685), scale = 1.4826 * MAD of the residuals, at most 50 iterations,
// stop when no coefficient moves more than 1e-8. Samples must be wall-free;
// needs at least two distinct distances.
LogDistanceFit fit_log_distance(const std::vector<PathLossSample>& samples);

struct KScanPoint {
  double k_db = 0.0;
  double rmse_db = 0.0;
};

struct KScan {
  double best_k_db = 0.0;
  std::vector<KScanPoint> trace;  // the full grid, k = 0.00, 0.01, .. 10.00
};

// Exhaustive grid search of the per-wall attenuation over [0, 10] dB in
// 0.01 steps, minimizing RMSE over all samples; ties resolve toward the
// smaller k. Needs at least one walled sample.
KScan scan_wall_k(const std::vector<PathLossSample>& samples, double l0_db,
                  double gamma);
double fit_wall_k(const std::vector<PathLossSample>& samples, double l0_db,
                  double gamma);

// Mean wall density: (1/N) * sum(walls_i / distance_i) over all locations,
// zero-wall locations included.
double compute_wbar(const std::vector<LinkGeometry>& geometries);

// Root mean square error of a model against aggregated samples (floors = 0).
double rmse(Model m, const std::vector<PathLossSample>& samples,
            const PathLossParams& p);

struct FitReport {
  PathLossParams params;
  std::map<Model, double> rmse_db;  // one entry per model
  std::size_t sample_count = 0;
  std::vector<KScanPoint> k_trace;
};

// Full pipeline: line fit on the wall-free subset, k grid search over all
// samples, wall density over the distinct geometries, then RMSE per model.
// Non-fitted parameters (fc, n, lf) come from `base`. Sub-step failures are
// rethrown with the step name prefixed.
FitReport fit_full(const std::vector<PathLossSample>& samples,
                   const PathLossParams& base = {});

// Same key-value dialect as serialize_params plus sample_count and one
// rmse.<model> line per model.
std::string serialize_report(const FitReport& report);
// CSV trace of the k search: k_db,rmse_db.
std::string serialize_k_trace(const std::vector<KScanPoint>& trace);

}  // namespace tmb
