#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/envsim/climate.hpp"
#include "ghsim/envsim/hydraulics.hpp"
#include "ghsim/envsim/soil.hpp"
#include "ghsim/gateway/alerts.hpp"
#include "ghsim/meshnet/mesh_network.hpp"
#include "ghsim/plc/master.hpp"
#include "ghsim/plc/params.hpp"

namespace ghsim::sim {

/// Parse or validation failure. `line` is 1-based, 0 when not tied to a line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, std::string field, const std::string& what)
      : std::runtime_error(line > 0 ? fmt::format("line {}: {}: {}", line, field, what)
                                    : fmt::format("{}: {}", field, what)),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct ZoneSpec {
  int id = 0;
  double tension = 10.0;
  double soil_temp = 20.0;
  /// Drying-rate multiplier for the zone's spot in the house.
  double exposure = 1.0;

  bool operator==(const ZoneSpec&) const = default;
};

struct TankSpec {
  double capacity = 0.0;
  env::LevelThresholds thresholds;
  double float_level = 0.0;  // buffer only
  double initial = 0.0;

  bool operator==(const TankSpec&) const = default;
};

enum class FaultType { BusFault, LevelStuck, FloatStuck, NodeSilent, FrameCorrupt };

inline const char* to_string(FaultType f) {
  switch (f) {
    case FaultType::BusFault: return "bus-fault";
    case FaultType::LevelStuck: return "level-stuck";
    case FaultType::FloatStuck: return "float-stuck";
    case FaultType::NodeSilent: return "node-silent";
    case FaultType::FrameCorrupt: return "frame-corrupt";
  }
  return "?";
}

inline std::optional<FaultType> fault_type_from(const std::string& s) {
  for (auto f : {FaultType::BusFault, FaultType::LevelStuck, FaultType::FloatStuck, FaultType::NodeSilent,
                 FaultType::FrameCorrupt}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

/// One scheduled injection. `duration` 0 means it never clears.
struct FaultSpec {
  SimTime at = 0;
  FaultType type = FaultType::BusFault;
  SimTime duration = 0;
  int node = 0;                                 // node-silent
  env::TankId tank = env::TankId::Buffer;       // level-stuck
  plc::LevelMark flag = plc::LevelMark::Min;    // level-stuck
  bool value = false;                           // level-stuck

  std::string describe() const {
    switch (type) {
      case FaultType::NodeSilent: return fmt::format("{} node {}", to_string(type), node);
      case FaultType::LevelStuck:
        return fmt::format("{} {}.{}={}", to_string(type), env::to_string(tank), plc::to_string(flag), value);
      default: return to_string(type);
    }
  }
  bool operator==(const FaultSpec&) const = default;
};

struct ScheduledCommand {
  SimTime at = 0;
  plc::Command command;

  bool operator==(const ScheduledCommand&) const = default;
};

struct Scenario {
  std::uint64_t seed = 42;
  std::string epoch = "2010-05-17T00:00:00Z";
  SimTime duration = 14 * kDay;
  SimTime tick = 1;
  double speed = 0.0;

  mesh::MeshParams mesh;
  std::vector<mesh::NodeSpec> nodes;
  std::vector<ZoneSpec> zones;

  TankSpec buffer;
  TankSpec upper;
  env::HydraulicsParams hydraulics;
  env::SoilParams soil;
  env::ClimateParams climate;

  plc::ControlParams control;
  plc::Mode initial_mode = plc::Mode::Stop;
  plc::Actuation initial_actuation = plc::Actuation::Auto;

  std::vector<ScheduledCommand> commands;
  std::vector<FaultSpec> faults;
  std::vector<gw::AlertRule> alerts;

  Calendar calendar() const { return Calendar::from_iso(epoch); }

  /// Six nodes around the base radio; node 6 sits beyond radio range and
  /// reaches the base through node 2. Stop for the first week, Run after.
  static Scenario defaults() {
    Scenario s;
    using K = mesh::SensorKind;
    const mesh::Position positions[6] = {{10, 0}, {20, 0}, {0, 15}, {15, 15}, {25, 10}, {45, 5}};
    const double tensions[6] = {5.0, 5.6, 4.4, 5.2, 4.8, 5.0};
    const double exposures[6] = {1.0, 0.99, 1.01, 0.995, 1.005, 1.0};
    for (int i = 0; i < 6; ++i) {
      mesh::NodeSpec n;
      n.id = i + 1;
      n.position = positions[i];
      n.zone = i + 1;
      n.ports[0] = {K::SoilMoisture, K::SoilTemperature};
      n.ports[1] = {K::SoilWaterContent};
      n.ports[2] = {K::LeafWetness};
      if (n.id == 1) n.ports[3] = {K::AmbientHumidity, K::AmbientTemperature, K::DewPoint};
      if (n.id == 2) n.ports[3] = {K::SolarRadiation};
      s.nodes.push_back(n);
      s.zones.push_back(ZoneSpec{i + 1, tensions[i], 20.0, exposures[i]});
    }
    s.buffer = TankSpec{300.0, {60.0, 150.0, 270.0}, 250.0, 250.0};
    s.upper = TankSpec{200.0, {40.0, 100.0, 180.0}, 0.0, 150.0};
    s.commands.push_back(ScheduledCommand{7 * kDay, plc::Command::plc(plc::Command::Kind::Run, "schedule")});
    s.alerts.push_back(gw::AlertRule{"dry-soil", K::SoilMoisture, 0, gw::Comparator::Above, 100.0});
    s.alerts.push_back(gw::AlertRule{"frost", K::AmbientTemperature, 0, gw::Comparator::Below, 2.0});
    return s;
  }

  /// Throws ScenarioError naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& what) { throw ScenarioError(0, field, what); };
    if (nodes.empty()) fail("nodes", "node count must be >= 1");
    if (tick <= 0) fail("tick", "must be > 0");
    if (duration < 0) fail("duration", "must be >= 0");
    if (speed < 0.0) fail("speed", "must be >= 0");
    try {
      (void)calendar();
    } catch (const std::exception& e) {
      fail("epoch", e.what());
    }
    if (mesh.sample_period <= 0 || mesh.sample_period % tick != 0) fail("mesh.sample_period", "must be a positive multiple of tick");
    if (!(mesh.p_loss >= 0.0 && mesh.p_loss < 1.0)) fail("mesh.p_loss", "must be in [0, 1)");
    if (mesh.max_retries < 0) fail("mesh.max_retries", "must be >= 0");
    if (!(mesh.radio_range > 0.0)) fail("mesh.radio_range", "must be > 0");

    std::set<int> zone_ids;
    for (const auto& z : zones) {
      if (!zone_ids.insert(z.id).second) fail("zones", fmt::format("duplicate zone id {}", z.id));
      if (!(z.tension >= 0.0 && z.tension <= 240.0)) fail("zones.tension", fmt::format("zone {} outside 0..240", z.id));
      if (!(z.exposure > 0.0)) fail("zones.exposure", fmt::format("zone {} must be > 0", z.id));
    }
    std::set<int> node_ids;
    for (const auto& n : nodes) {
      if (n.id <= mesh::kBaseId || n.id > 255) fail("nodes.id", fmt::format("node id {} must be in 1..255", n.id));
      if (!node_ids.insert(n.id).second) fail("nodes.id", fmt::format("duplicate node id {}", n.id));
      if (!zone_ids.contains(n.zone)) fail("nodes.zone", fmt::format("node {} references unknown zone {}", n.id, n.zone));
      if (!(n.battery >= 0.0 && n.battery <= 1.0)) fail("nodes.battery", fmt::format("node {} outside 0..1", n.id));
    }

    auto tank = [&](const TankSpec& t, const char* name, bool with_float) {
      const std::string f = name;
      if (!(t.capacity > 0.0)) fail(f + ".capacity", "must be > 0");
      const auto& th = t.thresholds;
      if (!(0.0 < th.min && th.min < th.middle && th.middle < th.max && th.max <= t.capacity))
        fail(f + ".levels", "need 0 < min < middle < max <= capacity");
      if (!(t.initial >= 0.0 && t.initial <= t.capacity)) fail(f + ".initial", "must be within 0..capacity");
      if (with_float && !(t.float_level > 0.0 && t.float_level <= t.capacity)) fail(f + ".float_level", "must be within 0..capacity");
    };
    tank(buffer, "buffer", true);
    tank(upper, "upper", false);
    if (!(hydraulics.mains_rate >= 0.0 && hydraulics.pump_rate >= 0.0 && hydraulics.gravity_rate >= 0.0))
      fail("hydraulics", "rates must be >= 0");

    if (auto bad = control.violation()) fail("control." + *bad, "violates parameter invariants");
    if (control.scan_period != tick) fail("control.scan_period", "must equal tick");

    for (const auto& c : commands) {
      if (c.at < 0) fail("commands.at", "must be >= 0");
      if (c.command.kind == plc::Command::Kind::SetParams) {
        if (auto bad = c.command.params.applied_to(control).violation()) fail("commands.params." + *bad, "invalid");
      }
    }
    for (const auto& f : faults) {
      if (f.at < 0) fail("faults.at", "must be >= 0");
      if (f.duration < 0) fail("faults.duration", "must be >= 0");
      if (f.type == FaultType::NodeSilent && !node_ids.contains(f.node))
        fail("faults.node", fmt::format("unknown node {}", f.node));
    }
    for (const auto& a : alerts) {
      try {
        a.validate();
      } catch (const std::exception& e) {
        fail("alerts", e.what());
      }
      if (a.node != 0 && !node_ids.contains(a.node)) fail("alerts.node", fmt::format("unknown node {}", a.node));
    }
  }

  bool operator==(const Scenario&) const = default;
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(line_of(n), field, "wrong type");
  }
}

inline SimTime duration_of(const YAML::Node& n, const std::string& field) {
  try {
    return parse_duration(n.as<std::string>());
  } catch (const std::exception& e) {
    throw ScenarioError(line_of(n), field, e.what());
  }
}

/// Reads `key` from `map` into `out` when present. Unknown keys are an error, so
/// every consumed key is recorded.
class Fields {
 public:
  Fields(const YAML::Node& map, std::string prefix) : map_(map), prefix_(std::move(prefix)) {
    if (map_ && !map_.IsMap()) throw ScenarioError(line_of(map_), prefix_.empty() ? "document" : prefix_, "expected a mapping");
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    return map_ ? map_[key] : YAML::Node();
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (auto n = get(key)) out = scalar<T>(n, name(key));
  }
  void read_duration(const std::string& key, SimTime& out) {
    if (auto n = get(key)) out = duration_of(n, name(key));
  }

  void finish() const {
    if (!map_) return;
    for (const auto& kv : map_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key)) throw ScenarioError(line_of(kv.first), name(key), "unknown field");
    }
  }

 private:
  YAML::Node map_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline plc::Command command_of(const YAML::Node& n, const std::string& field) {
  Fields f(n, field);
  plc::Command c;
  c.origin = "schedule";
  std::string verb;
  f.read("command", verb);
  if (verb == "run") c.kind = plc::Command::Kind::Run;
  else if (verb == "stop") c.kind = plc::Command::Kind::Stop;
  else if (verb == "auto") c.kind = plc::Command::Kind::Auto;
  else if (verb == "manual") c.kind = plc::Command::Kind::Manual;
  else if (verb == "ack-faults") c.kind = plc::Command::Kind::AckFaults;
  else if (verb == "set") {
    c.kind = plc::Command::Kind::SetActuator;
    std::string act;
    f.read("actuator", act);
    const auto a = plc::actuator_from(act);
    if (!a) throw ScenarioError(line_of(n), field + ".actuator", "unknown actuator '" + act + "'");
    c.actuator = *a;
    f.read("on", c.on);
  } else if (verb == "params") {
    c.kind = plc::Command::Kind::SetParams;
    Fields p(f.get("params"), field + ".params");
    auto& q = c.params;
    auto opt = [&](const char* key, auto& slot) {
      using V = typename std::remove_reference_t<decltype(slot)>::value_type;
      V v{};
      if (auto node = p.get(key)) {
        v = scalar<V>(node, p.name(key));
        slot = v;
      }
    };
    opt("dry_limit", q.dry_limit);
    opt("wet_limit", q.wet_limit);
    opt("irrigation_duration", q.irrigation_duration);
    opt("lockout", q.lockout);
    opt("lamp_on_solar", q.lamp_on_solar);
    opt("lamp_off_solar", q.lamp_off_solar);
    opt("staleness_limit", q.staleness_limit);
    opt("watchdog_timeout", q.watchdog_timeout);
    for (const char* key : {"pump_start", "pump_stop"}) {
      if (auto node = p.get(key)) {
        const auto m = plc::level_mark_from(scalar<std::string>(node, p.name(key)));
        if (!m) throw ScenarioError(line_of(node), p.name(key), "expected min|middle|max");
        (std::string(key) == "pump_start" ? q.pump_start : q.pump_stop) = *m;
      }
    }
    p.finish();
  } else {
    throw ScenarioError(line_of(n), field + ".command", "unknown command '" + verb + "'");
  }
  f.finish();
  return c;
}

inline void read_tank(const YAML::Node& n, const std::string& field, TankSpec& t, bool with_float) {
  Fields f(n, field);
  f.read("capacity", t.capacity);
  f.read("min", t.thresholds.min);
  f.read("middle", t.thresholds.middle);
  f.read("max", t.thresholds.max);
  if (with_float) f.read("float_level", t.float_level);
  f.read("initial", t.initial);
  f.finish();
}

}  // namespace detail

/// Parses scenario text. Missing fields keep the values of Scenario::defaults(),
/// except that listing `nodes` or `zones` replaces the whole default list.
inline Scenario parse_scenario(const std::string& text) {
  using detail::Fields;
  using detail::line_of;
  using detail::scalar;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(e.mark.line + 1, "document", e.msg);
  }
  Scenario s = Scenario::defaults();
  if (!root || root.IsNull()) {
    s.validate();
    return s;
  }
  Fields top(root, "");
  top.read("seed", s.seed);
  top.read("epoch", s.epoch);
  top.read_duration("duration", s.duration);
  top.read_duration("tick", s.tick);
  top.read("speed", s.speed);
  s.control.scan_period = s.tick;

  if (auto n = top.get("mesh")) {
    Fields f(n, "mesh");
    f.read("radio_range", s.mesh.radio_range);
    f.read("p_loss", s.mesh.p_loss);
    f.read("max_retries", s.mesh.max_retries);
    f.read_duration("sample_period", s.mesh.sample_period);
    f.read("noise_fraction", s.mesh.noise_fraction);
    if (auto b = f.get("base")) {
      if (!b.IsSequence() || b.size() != 2) throw ScenarioError(line_of(b), "mesh.base", "expected [x, y]");
      s.mesh.base = {scalar<double>(b[0], "mesh.base"), scalar<double>(b[1], "mesh.base")};
    }
    if (auto e = f.get("energy")) {
      Fields g(e, "mesh.energy");
      g.read("idle_drain", s.mesh.energy.idle_drain);
      g.read("tx_cost", s.mesh.energy.tx_cost);
      g.read("relay_cost", s.mesh.energy.relay_cost);
      g.read("solar_gain", s.mesh.energy.solar_gain);
      g.finish();
    }
    f.finish();
  }

  if (auto list = top.get("nodes")) {
    if (!list.IsSequence()) throw ScenarioError(line_of(list), "nodes", "expected a list");
    s.nodes.clear();
    for (const auto& item : list) {
      Fields f(item, "nodes");
      mesh::NodeSpec n;
      f.read("id", n.id);
      n.zone = n.id;
      f.read("zone", n.zone);
      f.read("battery", n.battery);
      if (auto p = f.get("position")) {
        if (!p.IsSequence() || p.size() != 2) throw ScenarioError(line_of(p), "nodes.position", "expected [x, y]");
        n.position = {scalar<double>(p[0], "nodes.position"), scalar<double>(p[1], "nodes.position")};
      }
      if (auto ports = f.get("ports")) {
        Fields pf(ports, "nodes.ports");
        for (int port = 1; port <= mesh::kPortCount; ++port) {
          auto kinds = pf.get(std::to_string(port));
          if (!kinds) continue;
          if (!kinds.IsSequence()) throw ScenarioError(line_of(kinds), "nodes.ports", "expected a list of sensors");
          for (const auto& k : kinds) {
            const auto name = scalar<std::string>(k, "nodes.ports");
            const auto kind = mesh::kind_from_name(name);
            if (!kind) throw ScenarioError(line_of(k), "nodes.ports", "unknown sensor '" + name + "'");
            n.ports[port - 1].push_back(*kind);
          }
        }
        pf.finish();
      }
      f.finish();
      s.nodes.push_back(n);
    }
  }

  if (auto list = top.get("zones")) {
    if (!list.IsSequence()) throw ScenarioError(line_of(list), "zones", "expected a list");
    s.zones.clear();
    for (const auto& item : list) {
      Fields f(item, "zones");
      ZoneSpec z;
      f.read("id", z.id);
      f.read("tension", z.tension);
      f.read("soil_temp", z.soil_temp);
      f.read("exposure", z.exposure);
      f.finish();
      s.zones.push_back(z);
    }
  }

  if (auto n = top.get("tanks")) {
    Fields f(n, "tanks");
    if (auto b = f.get("buffer")) detail::read_tank(b, "tanks.buffer", s.buffer, true);
    if (auto u = f.get("upper")) detail::read_tank(u, "tanks.upper", s.upper, false);
    f.finish();
  }
  if (auto n = top.get("hydraulics")) {
    Fields f(n, "hydraulics");
    f.read("mains_rate", s.hydraulics.mains_rate);
    f.read("pump_rate", s.hydraulics.pump_rate);
    f.read("gravity_rate", s.hydraulics.gravity_rate);
    f.finish();
  }
  if (auto n = top.get("soil")) {
    Fields f(n, "soil");
    f.read("k_solar", s.soil.k_solar);
    f.read("k_temp", s.soil.k_temp);
    f.read("temp_base", s.soil.temp_base);
    f.read("k_irrigation", s.soil.k_irrigation);
    f.read("field_capacity", s.soil.field_capacity);
    f.read("soil_temp_lag", s.soil.soil_temp_lag);
    f.read("leaf_wetness_lag", s.soil.leaf_wetness_lag);
    f.read("saturated_water_content", s.soil.saturated_water_content);
    f.read("half_content_tension", s.soil.half_content_tension);
    f.finish();
  }
  if (auto n = top.get("climate")) {
    Fields f(n, "climate");
    f.read("temp_mean", s.climate.temp_mean);
    f.read("temp_amplitude", s.climate.temp_amplitude);
    f.read("temp_peak_hour", s.climate.temp_peak_hour);
    f.read("humidity_mean", s.climate.humidity_mean);
    f.read("humidity_per_degree", s.climate.humidity_per_degree);
    f.read("solar_peak", s.climate.solar_peak);
    f.read("sunrise_hour", s.climate.sunrise_hour);
    f.read("sunset_hour", s.climate.sunset_hour);
    f.read("temp_noise", s.climate.temp_noise);
    f.read("humidity_noise", s.climate.humidity_noise);
    f.finish();
  }
  if (auto n = top.get("control")) {
    Fields f(n, "control");
    auto& c = s.control;
    f.read("dry_limit", c.dry_limit);
    f.read("wet_limit", c.wet_limit);
    f.read_duration("irrigation_duration", c.irrigation_duration);
    f.read_duration("lockout", c.lockout);
    f.read("lamp_on_solar", c.lamp_on_solar);
    f.read("lamp_off_solar", c.lamp_off_solar);
    f.read_duration("staleness_limit", c.staleness_limit);
    f.read_duration("watchdog_timeout", c.watchdog_timeout);
    for (const char* key : {"pump_start", "pump_stop"}) {
      if (auto v = f.get(key)) {
        const auto m = plc::level_mark_from(scalar<std::string>(v, f.name(key)));
        if (!m) throw ScenarioError(line_of(v), f.name(key), "expected min|middle|max");
        (std::string(key) == "pump_start" ? c.pump_start : c.pump_stop) = *m;
      }
    }
    std::string mode;
    if (auto v = f.get("mode")) {
      mode = scalar<std::string>(v, "control.mode");
      if (mode == "run") s.initial_mode = plc::Mode::Run;
      else if (mode == "stop") s.initial_mode = plc::Mode::Stop;
      else throw ScenarioError(line_of(v), "control.mode", "expected run|stop");
    }
    if (auto v = f.get("actuation")) {
      const auto a = scalar<std::string>(v, "control.actuation");
      if (a == "auto") s.initial_actuation = plc::Actuation::Auto;
      else if (a == "manual") s.initial_actuation = plc::Actuation::Manual;
      else throw ScenarioError(line_of(v), "control.actuation", "expected auto|manual");
    }
    f.finish();
  }

  if (auto list = top.get("commands")) {
    if (!list.IsSequence()) throw ScenarioError(line_of(list), "commands", "expected a list");
    s.commands.clear();
    for (const auto& item : list) {
      if (!item.IsMap()) throw ScenarioError(line_of(item), "commands", "expected a mapping");
      YAML::Node rest = YAML::Clone(item);
      if (!rest["at"]) throw ScenarioError(line_of(item), "commands.at", "missing");
      ScheduledCommand sc;
      sc.at = detail::duration_of(rest["at"], "commands.at");
      rest.remove("at");
      sc.command = detail::command_of(rest, "commands");
      s.commands.push_back(sc);
    }
  }

  if (auto list = top.get("faults")) {
    if (!list.IsSequence()) throw ScenarioError(line_of(list), "faults", "expected a list");
    s.faults.clear();
    for (const auto& item : list) {
      Fields f(item, "faults");
      FaultSpec fs;
      f.read_duration("at", fs.at);
      f.read_duration("duration", fs.duration);
      std::string kind;
      const auto kind_node = f.get("kind");
      if (!kind_node) throw ScenarioError(line_of(item), "faults.kind", "missing");
      kind = scalar<std::string>(kind_node, "faults.kind");
      const auto type = fault_type_from(kind);
      if (!type) throw ScenarioError(line_of(kind_node), "faults.kind", "unknown fault kind '" + kind + "'");
      fs.type = *type;
      f.read("node", fs.node);
      if (auto t = f.get("tank")) {
        const auto name = scalar<std::string>(t, "faults.tank");
        if (name == "buffer") fs.tank = env::TankId::Buffer;
        else if (name == "upper") fs.tank = env::TankId::Upper;
        else throw ScenarioError(line_of(t), "faults.tank", "expected buffer|upper");
      }
      if (auto fl = f.get("flag")) {
        const auto m = plc::level_mark_from(scalar<std::string>(fl, "faults.flag"));
        if (!m) throw ScenarioError(line_of(fl), "faults.flag", "expected min|middle|max");
        fs.flag = *m;
      }
      f.read("value", fs.value);
      f.finish();
      s.faults.push_back(fs);
    }
  }

  if (auto list = top.get("alerts")) {
    if (!list.IsSequence()) throw ScenarioError(line_of(list), "alerts", "expected a list");
    s.alerts.clear();
    for (const auto& item : list) {
      Fields f(item, "alerts");
      gw::AlertRule r;
      f.read("id", r.rule_id);
      std::string sensor;
      f.read("sensor", sensor);
      const auto kind = mesh::kind_from_name(sensor);
      if (!kind) throw ScenarioError(line_of(item), "alerts.sensor", "unknown sensor '" + sensor + "'");
      r.kind = *kind;
      f.read("node", r.node);
      auto above = f.get("above");
      auto below = f.get("below");
      if (static_cast<bool>(above) == static_cast<bool>(below))
        throw ScenarioError(line_of(item), "alerts", "exactly one of above/below is required");
      r.comparator = above ? gw::Comparator::Above : gw::Comparator::Below;
      r.threshold = scalar<double>(above ? above : below, above ? "alerts.above" : "alerts.below");
      f.finish();
      s.alerts.push_back(r);
    }
  }
  top.finish();
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(0, "file", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

}  // namespace ghsim::sim
