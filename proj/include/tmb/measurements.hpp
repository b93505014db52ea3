#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmb/errors.hpp"
#include "tmb/fitting.hpp"
#include "tmb/pathloss.hpp"

namespace tmb {

// One captured frame as reported by the sniffer.
struct PacketRecord {
  double timestamp_s = 0.0;
  std::string location_id;
  double rssi_dbm = 0.0;
  int mcs = 0;
  int nss = 1;
  int bw_mhz = 20;
  double ptx_dbm = 0.0;
  int channel = 36;
};

struct RowError {
  std::size_t line = 0;  // 1-based physical line; the header is line 1
  std::string message;
};

struct CaptureParseResult {
  std::vector<PacketRecord> records;
  std::vector<RowError> errors;  // rejected rows, never silently dropped
};

// Capture CSV with exact header
// timestamp_s,location_id,rssi_dbm,mcs,nss,bw_mhz,ptx_dbm,channel.
// Rows violating the record invariants (mcs in [0,9], nss in {1,2},
// bw in {20,40,80}, rssi < ptx, mcs 9 invalid at 20 MHz) are collected as
// RowErrors; a missing or wrong header raises ParseError.
CaptureParseResult parse_capture(std::istream& in);

// Canonical form: shortest round-trip numbers; parse(serialize(r)) == r.
std::string serialize_capture(const std::vector<PacketRecord>& records);

struct RegistryEntry {
  std::string id;
  LinkGeometry geom;
  double height_m = 0.0;
};

// Surveyed locations, unique ids, insertion order kept for export.
class LocationRegistry {
 public:
  void add(RegistryEntry entry);  // DataError on duplicate id
  const RegistryEntry* find(std::string_view id) const;
  const std::vector<RegistryEntry>& entries() const { return entries_; }
  std::vector<LinkGeometry> geometries() const;

  // The 21-location reference registry of the measurement campaign.
  static const LocationRegistry& reference();

  // CSV with header location_id,distance_m,walls,floors,height_m.
  static LocationRegistry from_csv(std::istream& in);
  std::string to_csv() const;

 private:
  std::vector<RegistryEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// One aggregated sample per location present in the records, in registry
// order. Path loss is computed per record (ptx - rssi) before averaging so
// mixed transmit powers stay correct; the reduction is order-independent.
// Records naming a location missing from the registry raise DataError
// listing the offending ids.
std::vector<PathLossSample> aggregate_path_loss(
    const std::vector<PacketRecord>& records, const LocationRegistry& registry);

struct VarianceReport {
  enum class Kind { TimeStd, GridMaxAbsDiff, ChannelDelta };

  struct Entry {
    Kind kind = Kind::TimeStd;
    std::string location_id;           // grid rows carry the center id
    std::optional<int> channel;        // channel rows only
    double value_db = 0.0;
  };

  Kind kind = Kind::TimeStd;
  std::vector<Entry> entries;          // sorted by (location_id, channel)
  std::vector<std::string> warnings;   // omitted locations / dataless points

  // Entries whose |value| exceeds the threshold (default: the 5 dB
  // shadow-fading acceptance bound).
  std::vector<Entry> exceeding(double threshold_db = 5.0) const;
};

// Population standard deviation of RSSI per location. Locations with fewer
// than two records are omitted with a warning.
VarianceReport time_variance(const std::vector<PacketRecord>& records);

// grid_map: measurement point id -> grid center id. Reports, per center, the
// maximum absolute difference between any mapped point's mean RSSI and the
// center's mean RSSI. A center without records raises DataError naming it;
// mapped points without records are skipped with a warning.
VarianceReport grid_variance(const std::vector<PacketRecord>& records,
                             const std::map<std::string, std::string>& grid_map);

// Mean RSSI delta of every (location, channel) pair against the reference
// channel at the same location. The reference channel must have records at
// every reported location, else DataError naming the location.
VarianceReport channel_variance(const std::vector<PacketRecord>& records,
                                int reference_channel);

// CSV with header kind,location_id,channel,value_db; values in dB with three
// decimals; kind is time_std, grid_max_abs_diff, or channel_delta.
std::string serialize_variance(const std::vector<VarianceReport>& reports);

}  // namespace tmb
