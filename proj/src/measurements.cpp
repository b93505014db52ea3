#include "tmb/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>

#include "textio.hpp"

namespace tmb {

namespace {

constexpr std::string_view kCaptureHeader =
    "timestamp_s,location_id,rssi_dbm,mcs,nss,bw_mhz,ptx_dbm,channel";
constexpr std::string_view kRegistryHeader =
    "location_id,distance_m,walls,floors,height_m";

// Sorting before the reduction makes every aggregate independent of record
// order, so shuffled captures produce bit-identical statistics.
double canonical_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(std::vector<double> values) {
  double mean = canonical_mean(values);
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) {
    double d = v - mean;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(values.size()));
}

std::string field_error(std::string_view field, std::string_view problem) {
  return std::string(field) + ": " + std::string(problem);
}

}  // namespace

CaptureParseResult parse_capture(std::istream& in) {
  CaptureParseResult result;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("capture document is empty, expected header '" +
                     std::string(kCaptureHeader) + "'");
  if (detail::trim(line) != kCaptureHeader)
    throw ParseError("capture header mismatch, expected '" +
                     std::string(kCaptureHeader) + "'");

  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    auto fields = detail::split_csv(row);
    auto reject = [&](std::string message) {
      result.errors.push_back({lineno, std::move(message)});
    };
    if (fields.size() != 8) {
      reject("expected 8 fields, got " + std::to_string(fields.size()));
      continue;
    }
    PacketRecord r;
    auto ts = detail::parse_double(fields[0]);
    auto rssi = detail::parse_double(fields[2]);
    auto mcs = detail::parse_int(fields[3]);
    auto nss = detail::parse_int(fields[4]);
    auto bw = detail::parse_int(fields[5]);
    auto ptx = detail::parse_double(fields[6]);
    auto channel = detail::parse_int(fields[7]);
    if (!ts) { reject(field_error("timestamp_s", "not a number")); continue; }
    if (fields[1].empty()) { reject(field_error("location_id", "empty")); continue; }
    if (!rssi) { reject(field_error("rssi_dbm", "not a number")); continue; }
    if (!mcs) { reject(field_error("mcs", "not an integer")); continue; }
    if (!nss) { reject(field_error("nss", "not an integer")); continue; }
    if (!bw) { reject(field_error("bw_mhz", "not an integer")); continue; }
    if (!ptx) { reject(field_error("ptx_dbm", "not a number")); continue; }
    if (!channel) { reject(field_error("channel", "not an integer")); continue; }
    if (*mcs < 0 || *mcs > 9) {
      reject(field_error("mcs", "out of range [0, 9], got " + std::to_string(*mcs)));
      continue;
    }
    if (*nss < 1 || *nss > 2) {
      reject(field_error("nss", "must be 1 or 2, got " + std::to_string(*nss)));
      continue;
    }
    if (*bw != 20 && *bw != 40 && *bw != 80) {
      reject(field_error("bw_mhz", "must be 20, 40, or 80, got " + std::to_string(*bw)));
      continue;
    }
    if (*mcs == 9 && *bw == 20) {
      reject(field_error("mcs", "mcs 9 is invalid at 20 MHz"));
      continue;
    }
    if (*channel <= 0) {
      reject(field_error("channel", "must be positive, got " + std::to_string(*channel)));
      continue;
    }
    if (!(*rssi < *ptx)) {
      reject(field_error("rssi_dbm", "must be below ptx_dbm (" +
                         detail::canon(*rssi) + " >= " + detail::canon(*ptx) + ")"));
      continue;
    }
    r.timestamp_s = *ts;
    r.location_id = std::string(fields[1]);
    r.rssi_dbm = *rssi;
    r.mcs = static_cast<int>(*mcs);
    r.nss = static_cast<int>(*nss);
    r.bw_mhz = static_cast<int>(*bw);
    r.ptx_dbm = *ptx;
    r.channel = static_cast<int>(*channel);
    result.records.push_back(std::move(r));
  }
  return result;
}

std::string serialize_capture(const std::vector<PacketRecord>& records) {
  std::string out{kCaptureHeader};
  out += '\n';
  for (const auto& r : records) {
    out += detail::canon(r.timestamp_s);
    out += ',';
    out += r.location_id;
    out += ',';
    out += detail::canon(r.rssi_dbm);
    out += ',';
    out += std::to_string(r.mcs);
    out += ',';
    out += std::to_string(r.nss);
    out += ',';
    out += std::to_string(r.bw_mhz);
    out += ',';
    out += detail::canon(r.ptx_dbm);
    out += ',';
    out += std::to_string(r.channel);
    out += '\n';
  }
  return out;
}

void LocationRegistry::add(RegistryEntry entry) {
  if (entry.id.empty()) throw DataError("location id must not be empty");
  if (!(entry.geom.distance_m > 0.0))
    throw DomainError("location '" + entry.id + "': distance must be positive");
  if (entry.geom.walls < 0 || entry.geom.floors < 0)
    throw DomainError("location '" + entry.id +
                      "': wall and floor counts must be non-negative");
  auto [it, inserted] = index_.emplace(entry.id, entries_.size());
  if (!inserted) throw DataError("duplicate location id '" + entry.id + "'");
  entries_.push_back(std::move(entry));
}

const RegistryEntry* LocationRegistry::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<LinkGeometry> LocationRegistry::geometries() const {
  std::vector<LinkGeometry> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.geom);
  return out;
}

const LocationRegistry& LocationRegistry::reference() {
  static const LocationRegistry registry = [] {
    // Surveyed office floor: receiver height, distance to the AP, and wall
    // count per location. Single floor, so floors = 0 everywhere.
    struct Row { const char* id; double height, distance; int walls; };
    constexpr Row rows[] = {
        {"0", 0.740, 1.000, 0},  {"1", 0.505, 0.934, 0},
        {"2", 0.740, 3.084, 0},  {"3", 0.740, 4.266, 0},
        {"4", 1.680, 2.717, 0},  {"5", 1.970, 2.879, 0},
        {"6", 1.680, 3.995, 0},  {"7", 0.740, 2.945, 0},
        {"8", 0.505, 5.778, 2},  {"9", 1.800, 9.286, 1},
        {"10", 0.740, 11.141, 4}, {"11", 1.970, 10.669, 3},
        {"12", 1.970, 13.884, 4}, {"13", 0.740, 15.801, 4},
        {"14", 1.970, 17.579, 5}, {"15", 1.800, 18.508, 3},
        {"16", 0.000, 22.020, 2}, {"17", 0.505, 24.304, 2},
        {"18", 0.740, 8.975, 3},  {"19", 1.970, 7.267, 2},
        {"20", 0.740, 4.623, 1},
    };
    LocationRegistry r;
    for (const Row& row : rows)
      r.add({row.id, {row.distance, row.walls, 0}, row.height});
    return r;
  }();
  return registry;
}

LocationRegistry LocationRegistry::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("registry document is empty, expected header '" +
                     std::string(kRegistryHeader) + "'");
  if (detail::trim(line) != kRegistryHeader)
    throw ParseError("registry header mismatch, expected '" +
                     std::string(kRegistryHeader) + "'");
  LocationRegistry registry;
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
    if (fields.size() != 5)
      throw fail("expected 5 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) throw fail("location_id: empty");
    auto distance = detail::parse_double(fields[1]);
    auto walls = detail::parse_int(fields[2]);
    auto floors = detail::parse_int(fields[3]);
    auto height = detail::parse_double(fields[4]);
    if (!distance) throw fail("distance_m: not a number");
    if (!walls) throw fail("walls: not an integer");
    if (!floors) throw fail("floors: not an integer");
    if (!height) throw fail("height_m: not a number");
    try {
      registry.add({std::string(fields[0]),
                    {*distance, static_cast<int>(*walls),
                     static_cast<int>(*floors)},
                    *height});
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return registry;
}

std::string LocationRegistry::to_csv() const {
  std::string out{kRegistryHeader};
  out += '\n';
  for (const auto& e : entries_) {
    out += e.id;
    out += ',';
    out += detail::canon(e.geom.distance_m);
    out += ',';
    out += std::to_string(e.geom.walls);
    out += ',';
    out += std::to_string(e.geom.floors);
    out += ',';
    out += detail::canon(e.height_m);
    out += '\n';
  }
  return out;
}

std::vector<PathLossSample> aggregate_path_loss(
    const std::vector<PacketRecord>& records,
    const LocationRegistry& registry) {
  std::map<std::string, std::vector<double>, std::less<>> by_location;
  for (const auto& r : records)
    by_location[r.location_id].push_back(r.ptx_dbm - r.rssi_dbm);

  std::set<std::string> unknown;
  for (const auto& [id, _] : by_location)
    if (!registry.find(id)) unknown.insert(id);
  if (!unknown.empty()) {
    std::string ids;
    for (const auto& id : unknown) {
      if (!ids.empty()) ids += ", ";
      ids += '\'' + id + '\'';
    }
    throw DataError("records name locations missing from the registry: " + ids);
  }

  std::vector<PathLossSample> samples;
  for (const auto& entry : registry.entries()) {
    auto it = by_location.find(entry.id);
    if (it == by_location.end()) continue;
    samples.push_back({entry.id, entry.geom.distance_m, entry.geom.walls,
                       canonical_mean(it->second), it->second.size()});
  }
  return samples;
}

std::vector<VarianceReport::Entry> VarianceReport::exceeding(
    double threshold_db) const {
  std::vector<Entry> out;
  for (const auto& e : entries)
    if (std::abs(e.value_db) > threshold_db) out.push_back(e);
  return out;
}

VarianceReport time_variance(const std::vector<PacketRecord>& records) {
  std::map<std::string, std::vector<double>> by_location;
  for (const auto& r : records) by_location[r.location_id].push_back(r.rssi_dbm);

  VarianceReport report;
  report.kind = VarianceReport::Kind::TimeStd;
  for (auto& [id, values] : by_location) {
    if (values.size() < 2) {
      report.warnings.push_back("location '" + id +
                                "' has fewer than 2 records, omitted");
      continue;
    }
    report.entries.push_back({VarianceReport::Kind::TimeStd, id, std::nullopt,
                              population_std(std::move(values))});
  }
  return report;
}

VarianceReport grid_variance(
    const std::vector<PacketRecord>& records,
    const std::map<std::string, std::string>& grid_map) {
  std::map<std::string, std::vector<double>> by_location;
  for (const auto& r : records) by_location[r.location_id].push_back(r.rssi_dbm);

  std::map<std::string, double> mean_by_location;
  for (auto& [id, values] : by_location)
    mean_by_location[id] = canonical_mean(std::move(values));

  VarianceReport report;
  report.kind = VarianceReport::Kind::GridMaxAbsDiff;
  std::map<std::string, double> max_by_center;
  for (const auto& [point, center] : grid_map) {
    auto center_mean = mean_by_location.find(center);
    if (center_mean == mean_by_location.end())
      throw DataError("grid center '" + center + "' has no records");
    max_by_center.try_emplace(center, 0.0);
    auto point_mean = mean_by_location.find(point);
    if (point_mean == mean_by_location.end()) {
      report.warnings.push_back("grid point '" + point +
                                "' has no records, skipped");
      continue;
    }
    double diff = std::abs(point_mean->second - center_mean->second);
    max_by_center[center] = std::max(max_by_center[center], diff);
  }
  for (const auto& [center, value] : max_by_center)
    report.entries.push_back(
        {VarianceReport::Kind::GridMaxAbsDiff, center, std::nullopt, value});
  return report;
}

VarianceReport channel_variance(const std::vector<PacketRecord>& records,
                                int reference_channel) {
  std::map<std::pair<std::string, int>, std::vector<double>> by_cell;
  for (const auto& r : records)
    by_cell[{r.location_id, r.channel}].push_back(r.rssi_dbm);

  std::map<std::pair<std::string, int>, double> means;
  for (auto& [key, values] : by_cell)
    means[key] = canonical_mean(std::move(values));

  VarianceReport report;
  report.kind = VarianceReport::Kind::ChannelDelta;
  for (const auto& [key, mean] : means) {
    const auto& [location, channel] = key;
    auto ref = means.find({location, reference_channel});
    if (ref == means.end())
      throw DataError("reference channel " + std::to_string(reference_channel) +
                      " has no records at location '" + location + "'");
    report.entries.push_back({VarianceReport::Kind::ChannelDelta, location,
                              channel, mean - ref->second});
  }
  return report;
}

namespace {

std::string_view kind_name(VarianceReport::Kind kind) {
  switch (kind) {
    case VarianceReport::Kind::TimeStd: return "time_std";
    case VarianceReport::Kind::GridMaxAbsDiff: return "grid_max_abs_diff";
    case VarianceReport::Kind::ChannelDelta: return "channel_delta";
  }
  return "unknown";
}

}  // namespace

std::string serialize_variance(const std::vector<VarianceReport>& reports) {
  std::string out = "kind,location_id,channel,value_db\n";
  for (const auto& report : reports) {
    for (const auto& e : report.entries) {
      out += kind_name(e.kind);
      out += ',';
      out += e.location_id;
      out += ',';
      if (e.channel) out += std::to_string(*e.channel);
      out += ',';
      out += detail::fixed(e.value_db, 3);
      out += '\n';
    }
  }
  return out;
}

}  // namespace tmb
