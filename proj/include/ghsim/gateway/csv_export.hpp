#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/meshnet/reading.hpp"

namespace ghsim::gw {

inline constexpr std::string_view kCsvHeader = "timestamp,node_id,port,sensor,value,unit";

struct ExportQuery {
  SimTime from = 0;
  SimTime to = 0;  // inclusive
  std::set<int> nodes;                 // empty = all
  std::set<mesh::SensorKind> kinds;    // empty = all
};

/// Shortest decimal with at most three fractional digits: 12.500 -> "12.5", 3.000 -> "3".
inline std::string format_csv_value(double v) {
  std::string s = fmt::format("{:.3f}", v);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

/// Rows are sorted by (timestamp, node_id, port); channels sharing a port
/// follow sensor code order.
inline std::string export_csv(std::span<const mesh::Reading> rows, const Calendar& cal, const ExportQuery& q) {
  if (q.from > q.to) throw std::invalid_argument("export range: from is after to");
  std::vector<const mesh::Reading*> sel;
  for (const auto& r : rows) {
    if (r.timestamp < q.from || r.timestamp > q.to) continue;
    if (!q.nodes.empty() && !q.nodes.contains(r.node_id)) continue;
    if (!q.kinds.empty() && !q.kinds.contains(r.kind)) continue;
    sel.push_back(&r);
  }
  std::stable_sort(sel.begin(), sel.end(), [](const mesh::Reading* a, const mesh::Reading* b) {
    return std::tie(a->timestamp, a->node_id, a->port, a->kind) < std::tie(b->timestamp, b->node_id, b->port, b->kind);
  });
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto* r : sel) {
    const auto& si = mesh::info(r->kind);
    out += fmt::format("{},{},{},{},{},{}\n", cal.iso(r->timestamp), r->node_id, r->port, si.name,
                       format_csv_value(r->value), si.unit);
  }
  return out;
}

struct CsvRow {
  SimTime timestamp = 0;
  int node_id = 0;
  int port = 0;
  mesh::SensorKind kind = mesh::SensorKind::SoilMoisture;
  double value = 0.0;

  bool operator==(const CsvRow&) const = default;
};

/// Parses a document produced by export_csv.
inline std::vector<CsvRow> parse_csv(std::string_view doc, const Calendar& cal) {
  std::vector<CsvRow> rows;
  std::istringstream in{std::string(doc)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kCsvHeader) throw std::invalid_argument("unexpected CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument(fmt::format("CSV line {}: expected 6 fields", lineno));
    const auto kind = mesh::kind_from_name(f[3]);
    if (!kind) throw std::invalid_argument(fmt::format("CSV line {}: unknown sensor '{}'", lineno, f[3]));
    if (mesh::info(*kind).unit != f[5]) throw std::invalid_argument(fmt::format("CSV line {}: unit mismatch", lineno));
    rows.push_back(CsvRow{cal.parse(f[0]), std::stoi(f[1]), std::stoi(f[2]), *kind, std::stod(f[4])});
  }
  if (lineno == 0) throw std::invalid_argument("empty CSV document");
  return rows;
}

}  // namespace ghsim::gw
