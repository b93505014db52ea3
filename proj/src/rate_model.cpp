#include "tmb/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>

#include "textio.hpp"

namespace tmb {

namespace {

int data_subcarriers(int bw_mhz) {
  switch (bw_mhz) {
    case 20: return 52;
    case 40: return 108;
    case 80: return 234;
  }
  throw DomainError("bandwidth must be 20, 40, or 80 MHz, got " +
                    std::to_string(bw_mhz));
}

struct McsScheme {
  int bits;      // bits per subcarrier per symbol
  int code_num;  // coding rate numerator / denominator
  int code_den;
};

constexpr McsScheme kMcsSchemes[] = {
    {1, 1, 2},  // 0: BPSK 1/2
    {2, 1, 2},  // 1: QPSK 1/2
    {2, 3, 4},  // 2: QPSK 3/4
    {4, 1, 2},  // 3: 16-QAM 1/2
    {4, 3, 4},  // 4: 16-QAM 3/4
    {6, 2, 3},  // 5: 64-QAM 2/3
    {6, 3, 4},  // 6: 64-QAM 3/4
    {6, 5, 6},  // 7: 64-QAM 5/6
    {8, 3, 4},  // 8: 256-QAM 3/4
    {8, 5, 6},  // 9: 256-QAM 5/6
};

}  // namespace

double phy_rate(int mcs, int nss, int bw_mhz, Gi gi) {
  if (mcs < 0 || mcs > 9)
    throw DomainError("mcs must be in [0, 9], got " + std::to_string(mcs));
  if (nss != 1 && nss != 2)
    throw DomainError("nss must be 1 or 2, got " + std::to_string(nss));
  int nsd = data_subcarriers(bw_mhz);
  if (mcs == 9 && bw_mhz == 20)
    throw DomainError("mcs 9 is invalid at 20 MHz");
  const McsScheme& s = kMcsSchemes[mcs];
  double symbol_us = gi == Gi::Short ? 3.6 : 4.0;
  // Data bits per OFDM symbol divided by the symbol time gives Mbps.
  return static_cast<double>(nss * nsd * s.bits * s.code_num) /
         (static_cast<double>(s.code_den) * symbol_us);
}

std::optional<RssiBin> bin_for_rssi(double rssi_dbm) {
  if (rssi_dbm < kBinFloorDbm || rssi_dbm >= kBinCeilingDbm)
    return std::nullopt;
  double n = std::floor((rssi_dbm - kBinFloorDbm) / RssiBin::kWidthDb);
  return RssiBin{kBinFloorDbm + n * RssiBin::kWidthDb};
}

const CellDistribution* McsDistributionTable::find(const CellKey& key) const {
  auto it = cells.find(key);
  return it == cells.end() ? nullptr : &it->second;
}

McsDistributionTable build_table(const std::vector<PacketRecord>& records) {
  std::map<CellKey, std::map<std::pair<int, int>, std::size_t>> counts;
  McsDistributionTable table;
  for (const auto& r : records) {
    if (r.mcs < 0 || r.mcs > 9)
      throw DomainError("record mcs must be in [0, 9], got " +
                        std::to_string(r.mcs));
    if (r.nss != 1 && r.nss != 2)
      throw DomainError("record nss must be 1 or 2, got " +
                        std::to_string(r.nss));
    data_subcarriers(r.bw_mhz);  // validates the bandwidth
    if (r.mcs == 9 && r.bw_mhz == 20) {
      ++table.excluded;
      continue;
    }
    auto bin = bin_for_rssi(r.rssi_dbm);
    if (!bin) {
      ++table.out_of_range;
      continue;
    }
    ++counts[{bin->lower_dbm, r.bw_mhz, r.ptx_dbm}][{r.mcs, r.nss}];
  }
  for (const auto& [key, cell_counts] : counts) {
    CellDistribution cell;
    std::size_t total = 0;
    for (const auto& [_, count] : cell_counts) total += count;
    cell.samples = total;
    for (const auto& [mcs_nss, count] : cell_counts)
      cell.entries.push_back({mcs_nss.first, mcs_nss.second,
                              static_cast<double>(count) /
                                  static_cast<double>(total)});
    table.cells.emplace(key, std::move(cell));
  }
  return table;
}

namespace {

McsEntry cell_mode(const CellDistribution& cell) {
  // Entries are sorted by (mcs, nss), so a strict comparison resolves ties
  // toward the lower mcs and then the lower nss.
  const McsEntry* best = &cell.entries.front();
  for (const auto& e : cell.entries)
    if (e.probability > best->probability) best = &e;
  return *best;
}

double expected_rate(const CellDistribution& cell, int bw_mhz, Gi gi) {
  double sum = 0.0;
  for (const auto& e : cell.entries)
    sum += e.probability * phy_rate(e.mcs, e.nss, bw_mhz, gi);
  return sum;
}

}  // namespace

RatePrediction query_by_rssi(const McsDistributionTable& table,
                             double rssi_dbm, int bw_mhz, double ptx_dbm,
                             Gi gi) {
  auto bin = bin_for_rssi(rssi_dbm);
  if (!bin)
    throw DataError("rssi " + detail::canon(rssi_dbm) +
                    " dBm is outside the table range [-97, -22)");
  RatePrediction prediction;
  prediction.rssi_dbm = rssi_dbm;
  prediction.bin = *bin;
  prediction.source_bin = *bin;

  const CellDistribution* cell =
      table.find({bin->lower_dbm, bw_mhz, ptx_dbm});
  if (!cell) {
    // Borrow the nearest adjacent bin; the lower-RSSI neighbour wins a tie.
    double low = bin->lower_dbm - RssiBin::kWidthDb;
    double high = bin->lower_dbm + RssiBin::kWidthDb;
    if (low >= kBinFloorDbm) cell = table.find({low, bw_mhz, ptx_dbm});
    if (cell) {
      prediction.source_bin = RssiBin{low};
    } else if (high < kBinCeilingDbm) {
      cell = table.find({high, bw_mhz, ptx_dbm});
      if (cell) prediction.source_bin = RssiBin{high};
    }
    if (!cell)
      throw DataError("no data for bin [" + detail::canon(bin->lower_dbm) +
                      ", " + detail::canon(bin->upper_dbm()) + ") at bw=" +
                      std::to_string(bw_mhz) + " MHz ptx=" +
                      detail::canon(ptx_dbm) + " dBm, nor in adjacent bins");
    prediction.borrowed = true;
  }

  prediction.mode = cell_mode(*cell);
  prediction.expected_rate_mbps = expected_rate(*cell, bw_mhz, gi);
  prediction.samples = cell->samples;
  prediction.distribution = cell->entries;
  return prediction;
}

RatePrediction query_by_distance(const McsDistributionTable& table, Model m,
                                 const LinkGeometry& g,
                                 const PathLossParams& p, int bw_mhz,
                                 double ptx_dbm, Gi gi) {
  return query_by_rssi(table, rssi_at(m, g, p, ptx_dbm), bw_mhz, ptx_dbm, gi);
}

std::string serialize_table(const McsDistributionTable& table) {
  std::string out = "rssi_bin_low,bw_mhz,ptx_dbm,mcs,nss,probability,samples\n";
  for (const auto& [key, cell] : table.cells) {
    for (const auto& e : cell.entries) {
      out += detail::canon(key.rssi_bin_low);
      out += ',';
      out += std::to_string(key.bw_mhz);
      out += ',';
      out += detail::canon(key.ptx_dbm);
      out += ',';
      out += std::to_string(e.mcs);
      out += ',';
      out += std::to_string(e.nss);
      out += ',';
      out += detail::canon(e.probability);
      out += ',';
      out += std::to_string(cell.samples);
      out += '\n';
    }
  }
  return out;
}

McsDistributionTable parse_table(std::istream& in) {
  std::string line;
  constexpr std::string_view kHeader =
      "rssi_bin_low,bw_mhz,ptx_dbm,mcs,nss,probability,samples";
  if (!std::getline(in, line))
    throw ParseError("table document is empty, expected header '" +
                     std::string(kHeader) + "'");
  if (detail::trim(line) != kHeader)
    throw ParseError("table header mismatch, expected '" + std::string(kHeader) +
                     "'");
  McsDistributionTable table;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    auto fields = detail::split_csv(row);
    auto fail = [&](std::string_view message) -> ParseError {
      return ParseError("line " + std::to_string(lineno) + ": " +
                        std::string(message));
    };
    if (fields.size() != 7)
      throw fail("expected 7 fields, got " + std::to_string(fields.size()));
    auto bin_low = detail::parse_double(fields[0]);
    auto bw = detail::parse_int(fields[1]);
    auto ptx = detail::parse_double(fields[2]);
    auto mcs = detail::parse_int(fields[3]);
    auto nss = detail::parse_int(fields[4]);
    auto probability = detail::parse_double(fields[5]);
    auto samples = detail::parse_int(fields[6]);
    if (!bin_low) throw fail("rssi_bin_low: not a number");
    if (!bw) throw fail("bw_mhz: not an integer");
    if (!ptx) throw fail("ptx_dbm: not a number");
    if (!mcs) throw fail("mcs: not an integer");
    if (!nss) throw fail("nss: not an integer");
    if (!probability) throw fail("probability: not a number");
    if (!samples) throw fail("samples: not an integer");
    if (!bin_for_rssi(*bin_low) || *bin_low != bin_for_rssi(*bin_low)->lower_dbm)
      throw fail("rssi_bin_low: not a bin boundary in [-97, -22)");
    if (*bw != 20 && *bw != 40 && *bw != 80)
      throw fail("bw_mhz: must be 20, 40, or 80");
    if (*mcs < 0 || *mcs > 9) throw fail("mcs: out of range [0, 9]");
    if (*nss != 1 && *nss != 2) throw fail("nss: must be 1 or 2");
    if (*mcs == 9 && *bw == 20) throw fail("mcs: mcs 9 is invalid at 20 MHz");
    if (!(*probability >= 0.0 && *probability <= 1.0))
      throw fail("probability: must be in [0, 1]");
    if (*samples < 0) throw fail("samples: must be non-negative");

    CellKey key{*bin_low, static_cast<int>(*bw), *ptx};
    auto& cell = table.cells[key];
    if (cell.entries.empty()) {
      cell.samples = static_cast<std::size_t>(*samples);
    } else if (cell.samples != static_cast<std::size_t>(*samples)) {
      throw fail("samples: differs from earlier rows of the same cell");
    }
    for (const auto& e : cell.entries)
      if (e.mcs == *mcs && e.nss == *nss)
        throw fail("duplicate (mcs, nss) entry in cell");
    cell.entries.push_back({static_cast<int>(*mcs), static_cast<int>(*nss),
                            *probability});
  }
  for (auto& [key, cell] : table.cells) {
    std::sort(cell.entries.begin(), cell.entries.end(),
              [](const McsEntry& a, const McsEntry& b) {
                return std::pair{a.mcs, a.nss} < std::pair{b.mcs, b.nss};
              });
    double sum = 0.0;
    for (const auto& e : cell.entries) sum += e.probability;
    if (std::abs(sum - 1.0) > 1e-9)
      throw ParseError("cell at bin " + detail::canon(key.rssi_bin_low) +
                       " bw=" + std::to_string(key.bw_mhz) + " ptx=" +
                       detail::canon(key.ptx_dbm) +
                       ": probabilities sum to " + detail::canon(sum));
  }
  return table;
}

const std::vector<ReferenceCellMode>& reference_modes() {
  // Modal (MCS, NSS) and its appearance share per (bin, bw, ptx) cell of the
  // measurement campaign. Cells absent here had no traffic.
  static const std::vector<ReferenceCellMode> modes = {
      {-97, 20, 4, 0, 1, 82.42},  {-97, 20, 10, 3, 1, 54.57},
      {-92, 20, 4, 2, 1, 31.62},  {-92, 20, 10, 3, 1, 74.76},
      {-92, 40, 4, 0, 1, 51.24},  {-92, 40, 10, 1, 1, 51.41},
      {-92, 80, 4, 1, 1, 57.61},  {-92, 80, 10, 0, 1, 46.37},
      {-92, 80, 23, 1, 1, 100.00},
      {-87, 20, 4, 4, 1, 33.10},  {-87, 20, 10, 3, 1, 55.00},
      {-87, 20, 23, 5, 1, 42.86}, {-87, 40, 4, 1, 1, 69.45},
      {-87, 40, 10, 1, 1, 34.75}, {-87, 40, 23, 3, 1, 99.33},
      {-87, 80, 4, 1, 1, 48.37},  {-87, 80, 10, 2, 1, 54.91},
      {-87, 80, 23, 1, 1, 43.62},
      {-82, 20, 4, 5, 1, 45.33},  {-82, 20, 10, 6, 1, 27.27},
      {-82, 20, 23, 3, 2, 29.33}, {-82, 40, 4, 4, 1, 54.72},
      {-82, 40, 10, 3, 1, 60.33}, {-82, 40, 23, 5, 1, 31.47},
      {-82, 80, 4, 3, 1, 82.68},  {-82, 80, 10, 4, 1, 31.15},
      {-82, 80, 23, 3, 1, 57.37},
      {-77, 20, 4, 4, 1, 35.76},  {-77, 20, 10, 5, 1, 29.85},
      {-77, 20, 23, 5, 1, 30.89}, {-77, 40, 4, 4, 1, 45.90},
      {-77, 40, 10, 6, 1, 17.61}, {-77, 40, 23, 5, 1, 45.14},
      {-77, 80, 4, 4, 1, 81.67},  {-77, 80, 10, 6, 1, 49.59},
      {-77, 80, 23, 4, 2, 35.14},
      {-72, 20, 4, 7, 2, 44.44},  {-72, 20, 10, 6, 2, 36.17},
      {-72, 20, 23, 7, 2, 37.24}, {-72, 40, 4, 4, 2, 34.29},
      {-72, 40, 10, 7, 1, 47.03}, {-72, 40, 23, 6, 1, 41.91},
      {-72, 80, 4, 7, 1, 40.04},  {-72, 80, 10, 7, 1, 67.49},
      {-72, 80, 23, 8, 1, 47.39},
      {-67, 20, 4, 8, 2, 77.39},  {-67, 20, 10, 6, 2, 54.10},
      {-67, 20, 23, 5, 2, 28.45}, {-67, 40, 4, 8, 2, 48.93},
      {-67, 40, 10, 7, 2, 45.38}, {-67, 40, 23, 4, 2, 44.30},
      {-67, 80, 4, 7, 2, 58.14},  {-67, 80, 10, 4, 2, 42.02},
      {-67, 80, 23, 5, 2, 61.79},
      {-62, 20, 4, 8, 2, 60.70},  {-62, 20, 10, 8, 2, 86.00},
      {-62, 20, 23, 7, 2, 71.37}, {-62, 40, 4, 9, 2, 51.95},
      {-62, 40, 10, 9, 2, 65.36}, {-62, 40, 23, 9, 2, 55.56},
      {-62, 80, 4, 7, 2, 62.26},  {-62, 80, 10, 9, 2, 63.79},
      {-62, 80, 23, 8, 2, 45.01},
      {-57, 20, 4, 8, 2, 50.33},  {-57, 20, 10, 8, 2, 99.13},
      {-57, 20, 23, 8, 2, 66.46}, {-57, 40, 4, 8, 2, 60.79},
      {-57, 40, 10, 9, 2, 93.40}, {-57, 40, 23, 8, 2, 52.76},
      {-57, 80, 4, 7, 2, 68.81},  {-57, 80, 10, 9, 2, 74.51},
      {-52, 20, 4, 8, 2, 97.92},  {-52, 20, 10, 8, 2, 95.97},
      {-52, 20, 23, 8, 2, 99.12}, {-52, 40, 4, 9, 2, 53.30},
      {-52, 40, 10, 9, 2, 93.35}, {-52, 40, 23, 9, 2, 95.55},
      {-52, 80, 4, 9, 2, 94.86},  {-52, 80, 10, 7, 2, 57.39},
      {-52, 80, 23, 9, 2, 96.58},
      {-47, 20, 4, 8, 2, 98.51},  {-47, 20, 10, 8, 2, 97.89},
      {-47, 20, 23, 8, 2, 99.07}, {-47, 40, 4, 9, 2, 95.37},
      {-47, 40, 10, 9, 2, 52.91}, {-47, 40, 23, 9, 2, 95.82},
      {-47, 80, 4, 9, 2, 97.69},  {-47, 80, 10, 9, 2, 93.71},
      {-47, 80, 23, 9, 2, 91.60},
      {-42, 20, 10, 8, 2, 97.25}, {-42, 20, 23, 8, 2, 96.00},
      {-42, 40, 4, 9, 2, 99.58},  {-42, 40, 10, 9, 2, 98.58},
      {-42, 40, 23, 9, 2, 85.96}, {-42, 80, 10, 9, 2, 97.35},
      {-42, 80, 23, 9, 2, 87.26},
      {-37, 20, 23, 8, 2, 99.55}, {-37, 40, 10, 9, 2, 99.12},
      {-37, 40, 23, 9, 2, 90.21},
      {-32, 20, 23, 8, 2, 64.42}, {-32, 40, 23, 9, 2, 97.21},
      {-32, 80, 23, 9, 2, 98.16},
      {-27, 20, 23, 8, 2, 97.82},
  };
  return modes;
}

const McsDistributionTable& reference_table() {
  static const McsDistributionTable table = [] {
    constexpr std::size_t kVirtualSamples = 10000;
    McsDistributionTable t;
    for (const auto& m : reference_modes()) {
      std::size_t mode_count = static_cast<std::size_t>(
          std::llround(m.percent * 100.0));
      std::size_t remainder = kVirtualSamples - mode_count;
      std::map<std::pair<int, int>, std::size_t> counts;
      counts[{m.mcs, m.nss}] = mode_count;

      // Spread the rest over MCS indexes nearest the mode, same stream
      // count, each strictly below the mode so it stays the unique maximum.
      int max_mcs = m.bw_mhz == 20 ? 8 : 9;
      std::vector<int> candidates;
      for (int offset = 1; offset <= max_mcs; ++offset) {
        if (m.mcs - offset >= 0) candidates.push_back(m.mcs - offset);
        if (m.mcs + offset <= max_mcs) candidates.push_back(m.mcs + offset);
      }
      std::size_t cap = mode_count - 1;
      for (int mcs : candidates) {
        if (remainder == 0) break;
        std::size_t take = std::min(cap, remainder);
        counts[{mcs, m.nss}] = take;
        remainder -= take;
      }
      if (remainder != 0)
        throw Error("reference cell mode share too small to fill");

      CellDistribution cell;
      cell.samples = kVirtualSamples;
      for (const auto& [mcs_nss, count] : counts)
        cell.entries.push_back({mcs_nss.first, mcs_nss.second,
                                static_cast<double>(count) /
                                    static_cast<double>(kVirtualSamples)});
      t.cells.emplace(
          CellKey{static_cast<double>(m.rssi_bin_low), m.bw_mhz,
                  static_cast<double>(m.ptx_dbm)},
          std::move(cell));
    }
    return t;
  }();
  return table;
}

}  // namespace tmb
