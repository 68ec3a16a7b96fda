#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/meshnet/reading.hpp"

namespace ghsim::gw {

using mesh::Reading;
using mesh::SensorKind;

struct RollupRecord {
  Period period = Period::Hour;
  SimTime period_start = 0;
  int node_id = 0;
  SensorKind kind = SensorKind::SoilMoisture;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t count = 0;

  bool operator==(const RollupRecord&) const = default;
};

/// Stored values keep millivalue resolution, the precision of the CSV export.
inline double quantize_value(double v) {
  const double q = std::round(v * 1000.0) / 1000.0;
  return q == 0.0 ? 0.0 : q;
}

/// Aggregates raw rows with timestamp in [start, end); one record per (node, kind)
/// present in the window, ordered by (node, kind).
inline std::vector<RollupRecord> compute_rollups(std::span<const Reading> rows, Period period, SimTime start,
                                                 SimTime end) {
  struct Acc {
    double sum = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::uint64_t count = 0;
  };
  std::map<std::pair<int, SensorKind>, Acc> acc;
  const auto lo = std::lower_bound(rows.begin(), rows.end(), start,
                                   [](const Reading& r, SimTime t) { return r.timestamp < t; });
  for (auto it = lo; it != rows.end() && it->timestamp < end; ++it) {
    Acc& a = acc[{it->node_id, it->kind}];
    if (a.count == 0) {
      a.min = a.max = it->value;
    } else {
      a.min = std::min(a.min, it->value);
      a.max = std::max(a.max, it->value);
    }
    a.sum += it->value;
    ++a.count;
  }
  std::vector<RollupRecord> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    out.push_back(RollupRecord{period, start, key.first, key.second, a.sum / static_cast<double>(a.count), a.min,
                               a.max, a.count});
  }
  return out;
}

enum class IngestStatus { Stored, Duplicate, Quarantined };

struct QuarantinedReading {
  Reading reading;
  std::string reason;
};

/// Append-only raw rows (kept in timestamp order) plus derived rollup tables.
class SeriesStore {
 public:
  IngestStatus ingest(Reading r) {
    const std::uint64_t key = dedup_key(r.node_id, r.seq);
    if (seen_.contains(key)) return IngestStatus::Duplicate;
    const auto& si = mesh::info(r.kind);
    if (!std::isfinite(r.value) || !si.in_range(r.value) || r.port < 1 || r.port > 4) {
      quarantine_.push_back({r, fmt::format("{} value {} outside [{}, {}]", si.name, r.value, si.min, si.max)});
      seen_.insert(key);
      return IngestStatus::Quarantined;
    }
    seen_.insert(key);
    r.value = quantize_value(r.value);
    if (raw_.empty() || raw_.back().timestamp <= r.timestamp) {
      raw_.push_back(r);
    } else {
      const auto pos = std::upper_bound(raw_.begin(), raw_.end(), r.timestamp,
                                        [](SimTime t, const Reading& x) { return t < x.timestamp; });
      raw_.insert(pos, r);
    }
    return IngestStatus::Stored;
  }

  std::span<const Reading> raw() const { return raw_; }
  const std::vector<QuarantinedReading>& quarantine() const { return quarantine_; }

  std::vector<RollupRecord> compute(Period p, SimTime start, SimTime end) const {
    return compute_rollups(raw_, p, start, end);
  }

  void add_rollups(const std::vector<RollupRecord>& recs) {
    for (const auto& r : recs) rollups_[index(r.period)].push_back(r);
  }
  const std::vector<RollupRecord>& rollups(Period p) const { return rollups_[index(p)]; }
  void clear_rollups() {
    for (auto& t : rollups_) t.clear();
  }

  /// Single-file persistence: a raw section followed by the derived rollup section.
  void save(const std::string& path, const Calendar& cal) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write store file " + path);
    out << "ghsim-store 1\n";
    out << "epoch " << cal.iso(0) << "\n";
    out << "[raw]\n";
    for (const auto& r : raw_) {
      out << fmt::format("{} {} {} {} {} {:.3f}\n", r.timestamp, r.node_id, r.port, static_cast<int>(r.kind), r.seq,
                         r.value);
    }
    out << "[rollup]\n";
    for (const auto& table : rollups_) {
      for (const auto& r : table) {
        out << fmt::format("{} {} {} {} {} {:.17g} {:.17g} {:.17g}\n", to_string(r.period), r.period_start, r.node_id,
                           static_cast<int>(r.kind), r.count, r.mean, r.min, r.max);
      }
    }
  }

  /// Loads a store file; returns the calendar recorded in it.
  static SeriesStore load(const std::string& path, Calendar* cal_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read store file " + path);
    SeriesStore s;
    std::string line;
    int lineno = 0;
    enum { Header, Raw, Rollup } section = Header;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(fmt::format("{}:{}: {}", path, lineno, why));
    };
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line == "[raw]") { section = Raw; continue; }
      if (line == "[rollup]") { section = Rollup; continue; }
      std::istringstream ls(line);
      if (section == Header) {
        std::string key, value;
        ls >> key >> value;
        if (key == "epoch" && cal_out) *cal_out = Calendar::from_iso(value);
        else if (key != "epoch" && key != "ghsim-store") fail("unexpected header line");
      } else if (section == Raw) {
        Reading r;
        int kind = 0;
        if (!(ls >> r.timestamp >> r.node_id >> r.port >> kind >> r.seq >> r.value)) fail("malformed raw row");
        const auto k = mesh::kind_from_code(static_cast<std::uint8_t>(kind));
        if (!k) fail("unknown sensor code");
        r.kind = *k;
        s.ingest(r);
      } else {
        std::string period;
        RollupRecord r;
        int kind = 0;
        if (!(ls >> period >> r.period_start >> r.node_id >> kind >> r.count >> r.mean >> r.min >> r.max))
          fail("malformed rollup row");
        r.period = period == "hour" ? Period::Hour : period == "day" ? Period::Day : Period::Month;
        r.kind = static_cast<SensorKind>(kind);
        s.rollups_[index(r.period)].push_back(r);
      }
    }
    return s;
  }

 private:
  static std::uint64_t dedup_key(int node, std::uint64_t seq) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(node)) << 40) ^ seq;
  }
  static std::size_t index(Period p) { return static_cast<std::size_t>(p); }

  std::vector<Reading> raw_;
  std::unordered_set<std::uint64_t> seen_;
  std::vector<QuarantinedReading> quarantine_;
  std::array<std::vector<RollupRecord>, 3> rollups_;
};

}  // namespace ghsim::gw
