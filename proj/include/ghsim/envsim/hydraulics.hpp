#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

namespace ghsim::env {

enum class TankId { Buffer, Upper };

inline const char* to_string(TankId id) { return id == TankId::Buffer ? "buffer" : "upper"; }

struct LevelThresholds {
  double min = 0.0;
  double middle = 0.0;
  double max = 0.0;

  bool operator==(const LevelThresholds&) const = default;
};

struct TankState {
  TankId id = TankId::Buffer;
  double volume = 0.0;    // liters
  double capacity = 0.0;  // liters
  LevelThresholds thresholds;
  /// Buffer only: the float engages once water reaches `float_level`, which
  /// stops the mains fill.
  double float_level = 0.0;
  bool float_switch_engaged = false;

  double fill_fraction() const { return capacity > 0.0 ? volume / capacity : 0.0; }
  bool operator==(const TankState&) const = default;
};

/// Physical actuator states after the slave applied them.
/// The mains valve is normally-open: energizing `mains_close` blocks the supply.
/// Feed and irrigation valves are normally-closed: they pass only when energized.
struct ActuatorPhys {
  bool mains_close = false;
  bool feed_valve = false;
  bool irrigation_valve = false;
  bool pump = false;
  bool lamp = false;

  bool mains_passes() const { return !mains_close; }
  bool operator==(const ActuatorPhys&) const = default;
};

struct HydraulicsParams {
  double mains_rate = 0.05;    // L/s
  double pump_rate = 0.2;      // L/s
  double gravity_rate = 0.1;   // L/s

  bool operator==(const HydraulicsParams&) const = default;
};

struct LevelFlags {
  bool min = false;
  bool middle = false;
  bool max = false;

  bool monotone() const { return (!max || middle) && (!middle || min); }
  bool operator==(const LevelFlags&) const = default;
};

/// Stuck-at overrides injected by faults, one slot per flag (min, middle, max).
using LevelOverrides = std::array<std::optional<bool>, 3>;

inline LevelFlags read_level_sensors(const TankState& tank, const LevelOverrides& stuck = {}) {
  LevelFlags f{tank.volume >= tank.thresholds.min, tank.volume >= tank.thresholds.middle,
               tank.volume >= tank.thresholds.max};
  if (stuck[0]) f.min = *stuck[0];
  if (stuck[1]) f.middle = *stuck[1];
  if (stuck[2]) f.max = *stuck[2];
  return f;
}

/// Water moved during one step, all in liters.
struct HydraulicsStep {
  TankState buffer;
  TankState upper;
  std::vector<double> zone_inflow;
  double mains_in = 0.0;
  double pumped = 0.0;
  double delivered = 0.0;
  double overflow = 0.0;
  bool buffer_overflowed = false;
  bool upper_overflowed = false;

  /// buffer delta + upper delta + delivered + overflow - mains in; zero when mass is conserved.
  double residual(const TankState& buffer_before, const TankState& upper_before) const {
    return (buffer.volume - buffer_before.volume) + (upper.volume - upper_before.volume) + delivered + overflow - mains_in;
  }
};

/// `float_stuck_demanding` models a float switch jammed in the "fill" position.
inline HydraulicsStep advance_hydraulics(const HydraulicsParams& p, double dt, TankState buffer, TankState upper,
                                         const ActuatorPhys& act, std::size_t zones,
                                         bool float_stuck_demanding = false) {
  HydraulicsStep s;

  buffer.float_switch_engaged = !float_stuck_demanding && buffer.volume >= buffer.float_level;
  if (act.mains_passes() && !buffer.float_switch_engaged) {
    s.mains_in = p.mains_rate * dt;
    buffer.volume += s.mains_in;
    if (buffer.volume > buffer.capacity) {
      s.overflow += buffer.volume - buffer.capacity;
      buffer.volume = buffer.capacity;
      s.buffer_overflowed = true;
    }
  }

  if (act.pump && act.feed_valve && buffer.volume > 0.0) {
    s.pumped = std::min(p.pump_rate * dt, buffer.volume);
    buffer.volume -= s.pumped;
    upper.volume += s.pumped;
    if (upper.volume > upper.capacity) {
      s.overflow += upper.volume - upper.capacity;
      upper.volume = upper.capacity;
      s.upper_overflowed = true;
    }
  }

  if (act.irrigation_valve && upper.volume > 0.0) {
    s.delivered = std::min(p.gravity_rate * dt, upper.volume);
    upper.volume -= s.delivered;
  }

  s.zone_inflow.assign(zones, zones > 0 ? s.delivered / static_cast<double>(zones) : 0.0);
  buffer.volume = std::clamp(buffer.volume, 0.0, buffer.capacity);
  upper.volume = std::clamp(upper.volume, 0.0, upper.capacity);
  buffer.float_switch_engaged = !float_stuck_demanding && buffer.volume >= buffer.float_level;
  s.buffer = buffer;
  s.upper = upper;
  return s;
}

}  // namespace ghsim::env
