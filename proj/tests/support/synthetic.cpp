#include "support/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace testsupport {

// SplitMix64 step; fixed algorithm keeps seeded fixtures portable.
std::uint32_t Rng::next_word() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return static_cast<std::uint32_t>(z >> 32);
}

double Rng::uniform() {
  return (static_cast<double>(next_word()) + 0.5) * (1.0 / 4294967296.0);
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint32_t>(hi - lo + 1);
  return lo + static_cast<int>(next_word() % span);
}

double Rng::gaussian() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<tmb::PacketRecord> synthetic_records(
    const tmb::LocationRegistry& registry, const tmb::PathLossParams& truth,
    int records_per_location, double sigma_db, double ptx_dbm,
    std::uint32_t seed) {
  Rng rng(seed);
  std::vector<tmb::PacketRecord> records;
  records.reserve(registry.entries().size() *
                  static_cast<std::size_t>(records_per_location));
  double timestamp = 0.0;
  for (const auto& entry : registry.entries()) {
    const double pl_true =
        tmb::pl_wall_factor(entry.geom.distance_m, entry.geom.walls,
                            truth.l0_db, truth.gamma, truth.k_db_per_wall);
    for (int i = 0; i < records_per_location; ++i) {
      tmb::PacketRecord rec;
      rec.timestamp_s = timestamp;
      timestamp += 0.1;
      rec.location_id = entry.id;
      rec.rssi_dbm = ptx_dbm - (pl_true + sigma_db * rng.gaussian());
      rec.mcs = 4;
      rec.nss = 1;
      rec.bw_mhz = 20;
      rec.ptx_dbm = ptx_dbm;
      rec.channel = 36;
      records.push_back(rec);
    }
  }
  return records;
}

std::vector<tmb::PathLossSample> synthetic_samples(
    const tmb::LocationRegistry& registry, const tmb::PathLossParams& truth,
    double sigma_db, std::uint32_t seed) {
  Rng rng(seed);
  std::vector<tmb::PathLossSample> samples;
  samples.reserve(registry.entries().size());
  for (const auto& entry : registry.entries()) {
    tmb::PathLossSample sample;
    sample.location_id = entry.id;
    sample.distance_m = entry.geom.distance_m;
    sample.walls = entry.geom.walls;
    sample.pl_db =
        tmb::pl_wall_factor(entry.geom.distance_m, entry.geom.walls,
                            truth.l0_db, truth.gamma, truth.k_db_per_wall) +
        sigma_db * rng.gaussian();
    sample.records = 1;
    samples.push_back(sample);
  }
  return samples;
}

OlsLine ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("ols needs two matched vectors");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsLine line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  return line;
}

OlsLine ols_log_distance(const std::vector<tmb::PathLossSample>& samples) {
  std::vector<double> x, y;
  x.reserve(samples.size());
  y.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(10.0 * std::log10(s.distance_m));
    y.push_back(s.pl_db);
  }
  // x is 10*log10(d), so the slope is gamma directly.
  return ols(x, y);
}

}  // namespace testsupport
