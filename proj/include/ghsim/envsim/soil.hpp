#pragma once

#include <algorithm>

#include "ghsim/envsim/climate.hpp"

namespace ghsim::env {

struct PlantZone {
  int zone_id = 0;
  double tension = 10.0;        // cbar, 0..240
  double soil_temp = 20.0;      // degC
  double water_content = 40.0;  // %wfv
  double leaf_wetness = 0.0;    // counts, 0..1024

  bool operator==(const PlantZone&) const = default;
};

/// First-order drying/wetting coefficients. Defaults give an unirrigated
/// zone roughly 10 cbar/day of drying under the default climate.
struct SoilParams {
  /// cbar per second per kW/m2 of solar radiation.
  double k_solar = 2.6e-4;
  /// cbar per second per degC above temp_base.
  double k_temp = 2.0e-5;
  double temp_base = 20.0;
  /// cbar removed per liter of irrigation water reaching the zone.
  double k_irrigation = 1.6;
  /// Irrigation alone never pushes tension below this floor.
  double field_capacity = 5.0;
  /// Soil temperature lag behind air temperature, seconds.
  double soil_temp_lag = 6.0 * 3600.0;
  double leaf_wetness_lag = 1800.0;
  /// Water content at zero tension and the tension at which it halves.
  double saturated_water_content = 45.0;
  double half_content_tension = 50.0;

  bool operator==(const SoilParams&) const = default;
};

inline double water_content_from_tension(const SoilParams& p, double tension) {
  return std::clamp(p.saturated_water_content / (1.0 + tension / p.half_content_tension), 0.0, 100.0);
}

/// Advances one zone by `dt` seconds.
/// `exposure` scales the drying rate for this zone's position in the house.
inline PlantZone advance_soil(const SoilParams& p, double exposure, double dt, PlantZone zone,
                              double irrigation_inflow, const Climate& climate) {
  const double inflow = std::max(0.0, irrigation_inflow);
  const double drying =
      exposure * (p.k_solar * climate.solar / 1000.0 + p.k_temp * std::max(0.0, climate.ambient_temp - p.temp_base)) * dt;
  double tension = zone.tension + drying;
  if (inflow > 0.0) {
    const double floor = std::min(tension, p.field_capacity);
    tension = std::max(floor, tension - p.k_irrigation * inflow);
  }
  zone.tension = std::clamp(tension, 0.0, 240.0);
  zone.water_content = water_content_from_tension(p, zone.tension);

  const double a_temp = std::min(1.0, dt / p.soil_temp_lag);
  zone.soil_temp = std::clamp(zone.soil_temp + (climate.ambient_temp - zone.soil_temp) * a_temp, -40.0, 65.0);

  // Leaves wet up near saturation humidity and when watered.
  const double target = inflow > 0.0 ? 1024.0 : std::clamp((climate.humidity - 75.0) / 20.0, 0.0, 1.0) * 1024.0;
  const double a_leaf = std::min(1.0, dt / p.leaf_wetness_lag);
  zone.leaf_wetness = std::clamp(zone.leaf_wetness + (target - zone.leaf_wetness) * a_leaf, 0.0, 1024.0);
  return zone;
}

}  // namespace ghsim::env
