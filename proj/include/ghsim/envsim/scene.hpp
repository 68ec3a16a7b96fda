#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ghsim/envsim/climate.hpp"
#include "ghsim/envsim/hydraulics.hpp"
#include "ghsim/envsim/soil.hpp"

namespace ghsim::env {

struct SceneInputs {
  std::string time;
  const TankState* buffer = nullptr;
  const TankState* upper = nullptr;
  LevelFlags buffer_flags;
  LevelFlags upper_flags;
  const ActuatorPhys* actuators = nullptr;
  const std::vector<PlantZone>* zones = nullptr;
  const Climate* climate = nullptr;
};

/// Machine-readable process picture that stands in for the webcam pane.
/// Valve entries report what the valve physically does, so a de-energized
/// normally-open mains valve shows as open.
inline nlohmann::json render_snapshot(const SceneInputs& in) {
  using nlohmann::json;
  auto tank = [](const TankState& t, const LevelFlags& f) {
    json j{{"id", to_string(t.id)},
           {"volume_l", t.volume},
           {"capacity_l", t.capacity},
           {"fill_fraction", t.fill_fraction()},
           {"levels", {{"min", f.min}, {"middle", f.middle}, {"max", f.max}}}};
    if (t.id == TankId::Buffer) j["float_switch_engaged"] = t.float_switch_engaged;
    return j;
  };
  const ActuatorPhys& a = *in.actuators;
  json valves = json::array({
      {{"id", "mains"}, {"type", "NO"}, {"energized", a.mains_close}, {"open", a.mains_passes()}},
      {{"id", "feed"}, {"type", "NC"}, {"energized", a.feed_valve}, {"open", a.feed_valve}},
      {{"id", "irrigation"}, {"type", "NC"}, {"energized", a.irrigation_valve}, {"open", a.irrigation_valve}},
  });
  json zones = json::array();
  for (const auto& z : *in.zones) {
    zones.push_back({{"zone_id", z.zone_id},
                     {"tension_cbar", z.tension},
                     {"water_content", z.water_content},
                     {"soil_temp", z.soil_temp},
                     {"leaf_wetness", z.leaf_wetness}});
  }
  json doc{{"time", in.time},
           {"tanks", json::array({tank(*in.buffer, in.buffer_flags), tank(*in.upper, in.upper_flags)})},
           {"valves", valves},
           {"pump", {{"on", a.pump}}},
           {"lamp", {{"on", a.lamp}}},
           {"zones", zones}};
  if (in.climate) {
    doc["climate"] = {{"ambient_temp", in.climate->ambient_temp},
                      {"humidity", in.climate->humidity},
                      {"solar", in.climate->solar},
                      {"dew_point", in.climate->dew_point}};
  }
  return doc;
}

}  // namespace ghsim::env
