#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmb/errors.hpp"
#include "tmb/measurements.hpp"
#include "tmb/pathloss.hpp"

namespace tmb {

enum class Gi { Long, Short };  // 4.0 us / 3.6 us OFDM symbol

// VHT data rate in Mbps. DomainError on invalid combinations: mcs outside
// [0, 9], nss outside {1, 2}, bw outside {20, 40, 80}, and mcs 9 at 20 MHz.
double phy_rate(int mcs, int nss, int bw_mhz, Gi gi = Gi::Long);

struct RssiBin {
  double lower_dbm = 0.0;  // inclusive; the bin covers [lower, lower + 5)
  static constexpr double kWidthDb = 5.0;
  double upper_dbm() const { return lower_dbm + kWidthDb; }
};

// Bins tile [-97, -22) in 5 dB steps.
inline constexpr double kBinFloorDbm = -97.0;
inline constexpr double kBinCeilingDbm = -22.0;

std::optional<RssiBin> bin_for_rssi(double rssi_dbm);

struct McsEntry {
  int mcs = 0;
  int nss = 1;
  double probability = 0.0;
};

struct CellKey {
  double rssi_bin_low = 0.0;
  int bw_mhz = 20;
  double ptx_dbm = 0.0;
  auto operator<=>(const CellKey&) const = default;
};

struct CellDistribution {
  std::vector<McsEntry> entries;  // sorted by (mcs, nss); probabilities sum to 1
  std::size_t samples = 0;
};

struct McsDistributionTable {
  std::map<CellKey, CellDistribution> cells;
  std::size_t out_of_range = 0;  // records outside [-97, -22), not binned
  std::size_t excluded = 0;      // records claiming mcs 9 at 20 MHz

  const CellDistribution* find(const CellKey& key) const;
};

// Empirical distribution per (bin, bw, ptx) cell. Out-of-range and
// hardware-impossible records are counted, never silently dropped.
McsDistributionTable build_table(const std::vector<PacketRecord>& records);

// CSV with header rssi_bin_low,bw_mhz,ptx_dbm,mcs,nss,probability,samples;
// canonical numbers, so export/import round-trips bit-identically.
std::string serialize_table(const McsDistributionTable& table);
McsDistributionTable parse_table(std::istream& in);

struct RatePrediction {
  double rssi_dbm = 0.0;
  RssiBin bin;                      // bin the RSSI falls in
  bool borrowed = false;            // distribution taken from an adjacent bin
  RssiBin source_bin;               // == bin unless borrowed
  McsEntry mode;                    // ties: lower mcs, then lower nss
  double expected_rate_mbps = 0.0;  // probability-weighted phy rate
  std::size_t samples = 0;
  std::vector<McsEntry> distribution;
};

// Empty cells borrow the nearest non-empty adjacent bin (lower RSSI wins the
// tie) and the result is flagged borrowed; DataError when the cell and both
// adjacent bins are empty or the RSSI is outside the tiled range.
RatePrediction query_by_rssi(const McsDistributionTable& table,
                             double rssi_dbm, int bw_mhz, double ptx_dbm,
                             Gi gi = Gi::Long);

// Predicts RSSI with the given model first, then queries the table.
RatePrediction query_by_distance(const McsDistributionTable& table, Model m,
                                 const LinkGeometry& g,
                                 const PathLossParams& p, int bw_mhz,
                                 double ptx_dbm, Gi gi = Gi::Long);

// Reference table from the measurement campaign. Each published cell pins the
// modal (mcs, nss) and its share; the remainder is spread deterministically
// over the nearest same-nss MCS indexes, each strictly below the mode, out of
// 10000 virtual samples per cell.
struct ReferenceCellMode {
  int rssi_bin_low;
  int bw_mhz;
  int ptx_dbm;
  int mcs;
  int nss;
  double percent;
};
const std::vector<ReferenceCellMode>& reference_modes();
const McsDistributionTable& reference_table();

}  // namespace tmb
