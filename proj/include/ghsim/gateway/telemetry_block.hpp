#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/meshnet/sensor_kind.hpp"

namespace ghsim::gw {

/// Freshest value of one (node, kind) channel and how old it is.
struct TelemetryEntry {
  int node_id = 0;
  mesh::SensorKind kind = mesh::SensorKind::SoilMoisture;
  double value = 0.0;
  SimTime age = 0;  // seconds

  bool operator==(const TelemetryEntry&) const = default;
};

/// Snapshot handed to the fieldbus; entries sorted by (node_id, kind).
struct TelemetryBlock {
  std::vector<TelemetryEntry> entries;

  bool empty() const { return entries.empty(); }

  std::optional<TelemetryEntry> find(int node_id, mesh::SensorKind kind) const {
    for (const auto& e : entries) {
      if (e.node_id == node_id && e.kind == kind) return e;
    }
    return std::nullopt;
  }

  /// The same block seen `dt` seconds later.
  TelemetryBlock aged(SimTime dt) const {
    TelemetryBlock b = *this;
    for (auto& e : b.entries) e.age += dt;
    return b;
  }

  int node_count() const {
    std::vector<int> ids;
    for (const auto& e : entries) ids.push_back(e.node_id);
    std::sort(ids.begin(), ids.end());
    return static_cast<int>(std::unique(ids.begin(), ids.end()) - ids.begin());
  }

  bool operator==(const TelemetryBlock&) const = default;
};

}  // namespace ghsim::gw
