#pragma once

#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/sim_time.hpp"

namespace ghsim::plc {

enum class LevelMark { Min, Middle, Max };

inline const char* to_string(LevelMark m) {
  switch (m) {
    case LevelMark::Min: return "min";
    case LevelMark::Middle: return "middle";
    case LevelMark::Max: return "max";
  }
  return "?";
}

inline std::optional<LevelMark> level_mark_from(const std::string& s) {
  if (s == "min") return LevelMark::Min;
  if (s == "middle") return LevelMark::Middle;
  if (s == "max") return LevelMark::Max;
  return std::nullopt;
}

/// Operator-settable control parameters. Defaults are calibration values.
struct ControlParams {
  double dry_limit = 60.0;          // cbar: start irrigation at or above
  double wet_limit = 30.0;          // cbar: never start below
  SimTime irrigation_duration = 300;
  SimTime lockout = 3600;
  LevelMark pump_start = LevelMark::Min;  // fill when the upper tank drops below this flag
  LevelMark pump_stop = LevelMark::Max;   // stop filling once this flag is reached
  double lamp_on_solar = 20.0;      // W/m2
  double lamp_off_solar = 50.0;     // W/m2
  SimTime staleness_limit = 2700;
  SimTime watchdog_timeout = 3;
  SimTime scan_period = 1;

  /// Name of the first violated field, or nullopt when valid.
  std::optional<std::string> violation() const {
    if (!(dry_limit >= 0.0 && dry_limit <= 240.0)) return "dry_limit";
    if (!(wet_limit >= 0.0 && wet_limit <= 240.0)) return "wet_limit";
    if (!(wet_limit < dry_limit)) return "wet_limit";
    if (irrigation_duration <= 0) return "irrigation_duration";
    if (lockout < 0) return "lockout";
    if (!(lamp_on_solar >= 0.0)) return "lamp_on_solar";
    if (!(lamp_off_solar > lamp_on_solar)) return "lamp_off_solar";
    if (staleness_limit <= 0) return "staleness_limit";
    if (watchdog_timeout <= 0) return "watchdog_timeout";
    if (scan_period <= 0) return "scan_period";
    if (static_cast<int>(pump_stop) <= static_cast<int>(pump_start)) return "pump_stop";
    return std::nullopt;
  }

  bool operator==(const ControlParams&) const = default;
};

/// Partial parameter update; unset fields keep their current value.
struct ParamsPatch {
  std::optional<double> dry_limit;
  std::optional<double> wet_limit;
  std::optional<SimTime> irrigation_duration;
  std::optional<SimTime> lockout;
  std::optional<LevelMark> pump_start;
  std::optional<LevelMark> pump_stop;
  std::optional<double> lamp_on_solar;
  std::optional<double> lamp_off_solar;
  std::optional<SimTime> staleness_limit;
  std::optional<SimTime> watchdog_timeout;

  ControlParams applied_to(ControlParams p) const {
    if (dry_limit) p.dry_limit = *dry_limit;
    if (wet_limit) p.wet_limit = *wet_limit;
    if (irrigation_duration) p.irrigation_duration = *irrigation_duration;
    if (lockout) p.lockout = *lockout;
    if (pump_start) p.pump_start = *pump_start;
    if (pump_stop) p.pump_stop = *pump_stop;
    if (lamp_on_solar) p.lamp_on_solar = *lamp_on_solar;
    if (lamp_off_solar) p.lamp_off_solar = *lamp_off_solar;
    if (staleness_limit) p.staleness_limit = *staleness_limit;
    if (watchdog_timeout) p.watchdog_timeout = *watchdog_timeout;
    return p;
  }

  bool operator==(const ParamsPatch&) const = default;
};

/// "dry_limit 60 -> 70, lockout 3600 -> 1800"
inline std::string describe_changes(const ControlParams& a, const ControlParams& b) {
  std::vector<std::string> parts;
  auto num = [&](const char* name, auto x, auto y) {
    if (x != y) parts.push_back(fmt::format("{} {} -> {}", name, x, y));
  };
  num("dry_limit", a.dry_limit, b.dry_limit);
  num("wet_limit", a.wet_limit, b.wet_limit);
  num("irrigation_duration", a.irrigation_duration, b.irrigation_duration);
  num("lockout", a.lockout, b.lockout);
  if (a.pump_start != b.pump_start) parts.push_back(fmt::format("pump_start {} -> {}", to_string(a.pump_start), to_string(b.pump_start)));
  if (a.pump_stop != b.pump_stop) parts.push_back(fmt::format("pump_stop {} -> {}", to_string(a.pump_stop), to_string(b.pump_stop)));
  num("lamp_on_solar", a.lamp_on_solar, b.lamp_on_solar);
  num("lamp_off_solar", a.lamp_off_solar, b.lamp_off_solar);
  num("staleness_limit", a.staleness_limit, b.staleness_limit);
  num("watchdog_timeout", a.watchdog_timeout, b.watchdog_timeout);
  if (parts.empty()) return "no change";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

}  // namespace ghsim::plc
