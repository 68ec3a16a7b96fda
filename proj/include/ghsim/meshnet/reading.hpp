#pragma once

#include <cstdint>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/meshnet/sensor_kind.hpp"

namespace ghsim::mesh {

/// One timestamped measurement from a node port. `seq` counts readings per
/// node and is strictly increasing, so gaps at the base reveal losses.
struct Reading {
  int node_id = 0;
  int port = 1;
  SensorKind kind = SensorKind::SoilMoisture;
  double value = 0.0;
  SimTime timestamp = 0;
  std::uint64_t seq = 0;

  bool operator==(const Reading&) const = default;
};

}  // namespace ghsim::mesh
