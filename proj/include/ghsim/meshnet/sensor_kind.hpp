#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ghsim::mesh {

/// Channels an eKo node can report. The numeric value doubles as the wire
/// code in telemetry payloads, so it must never be renumbered.
enum class SensorKind : std::uint8_t {
  SoilMoisture = 1,
  SoilTemperature = 2,
  SoilWaterContent = 3,
  LeafWetness = 4,
  AmbientHumidity = 5,
  AmbientTemperature = 6,
  DewPoint = 7,
  SolarRadiation = 8,
};

struct SensorInfo {
  SensorKind kind;
  std::string_view name;
  std::string_view acronym;
  std::string_view unit;
  double min;
  double max;

  double span() const { return max - min; }
  bool in_range(double v) const { return v >= min && v <= max; }
};

inline constexpr std::array<SensorInfo, 8> kSensorTable{{
    {SensorKind::SoilMoisture, "SoilMoisture", "Mo", "cbar", 0.0, 240.0},
    {SensorKind::SoilTemperature, "SoilTemperature", "Te", "degC", -40.0, 65.0},
    {SensorKind::SoilWaterContent, "SoilWaterContent", "WaCo", "%wfv", 0.0, 100.0},
    {SensorKind::LeafWetness, "LeafWetness", "LeWe", "CntS", 0.0, 1024.0},
    {SensorKind::AmbientHumidity, "AmbientHumidity", "Hu", "%", 0.0, 100.0},
    {SensorKind::AmbientTemperature, "AmbientTemperature", "Te", "degC", -40.0, 65.0},
    {SensorKind::DewPoint, "DewPoint", "DwPo", "degC", -10.0, 50.0},
    {SensorKind::SolarRadiation, "SolarRadiation", "SoRa", "W/m2", 0.0, 1800.0},
}};

inline const SensorInfo& info(SensorKind k) { return kSensorTable[static_cast<std::size_t>(k) - 1]; }

inline std::string_view to_string(SensorKind k) { return info(k).name; }

inline std::optional<SensorKind> kind_from_code(std::uint8_t code) {
  if (code < 1 || code > kSensorTable.size()) return std::nullopt;
  return static_cast<SensorKind>(code);
}

inline std::optional<SensorKind> kind_from_name(std::string_view name) {
  for (const auto& s : kSensorTable) {
    if (s.name == name) return s.kind;
  }
  return std::nullopt;
}

}  // namespace ghsim::mesh
