#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/envsim/hydraulics.hpp"
#include "ghsim/fieldbus/asi.hpp"
#include "ghsim/gateway/telemetry_block.hpp"
#include "ghsim/plc/params.hpp"

namespace ghsim::plc {

enum class Mode { Stop, Run };
enum class Actuation { Auto, Manual };
enum class IrrigationPhase { Idle, Watering, Lockout };
enum class PumpPhase { Off, Filling };

enum class FaultKind {
  StaleTelemetry,
  LevelInconsistencyBuffer,
  LevelInconsistencyUpper,
  PumpDryRun,
  OverflowRisk,
  BusTimeout,
};

enum class Actuator { Pump, FeedValve, IrrigationValve, Lamp, MainsClose };

inline const char* to_string(Mode m) { return m == Mode::Run ? "Run" : "Stop"; }
inline const char* to_string(Actuation a) { return a == Actuation::Auto ? "Auto" : "Manual"; }
inline const char* to_string(IrrigationPhase p) {
  switch (p) {
    case IrrigationPhase::Idle: return "Idle";
    case IrrigationPhase::Watering: return "Watering";
    case IrrigationPhase::Lockout: return "Lockout";
  }
  return "?";
}
inline const char* to_string(PumpPhase p) { return p == PumpPhase::Off ? "Off" : "Filling"; }
inline const char* to_string(FaultKind f) {
  switch (f) {
    case FaultKind::StaleTelemetry: return "StaleTelemetry";
    case FaultKind::LevelInconsistencyBuffer: return "LevelInconsistency(buffer)";
    case FaultKind::LevelInconsistencyUpper: return "LevelInconsistency(upper)";
    case FaultKind::PumpDryRun: return "PumpDryRun";
    case FaultKind::OverflowRisk: return "OverflowRisk";
    case FaultKind::BusTimeout: return "BusTimeout";
  }
  return "?";
}
inline const char* to_string(Actuator a) {
  switch (a) {
    case Actuator::Pump: return "pump";
    case Actuator::FeedValve: return "feed_valve";
    case Actuator::IrrigationValve: return "irrigation_valve";
    case Actuator::Lamp: return "lamp";
    case Actuator::MainsClose: return "mains_close";
  }
  return "?";
}
inline std::optional<Actuator> actuator_from(const std::string& s) {
  for (auto a : {Actuator::Pump, Actuator::FeedValve, Actuator::IrrigationValve, Actuator::Lamp, Actuator::MainsClose}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

/// A latched fault. It stays in the set until acknowledged after its condition resolved.
struct FaultRecord {
  SimTime first_seen = 0;
  bool condition_active = true;
};

struct ManualDemand {
  bool pump = false;
  bool feed_valve = false;
  bool irrigation_valve = false;
  bool lamp = false;
  bool mains_close = false;

  bool& operator[](Actuator a) {
    switch (a) {
      case Actuator::Pump: return pump;
      case Actuator::FeedValve: return feed_valve;
      case Actuator::IrrigationValve: return irrigation_valve;
      case Actuator::Lamp: return lamp;
      case Actuator::MainsClose: return mains_close;
    }
    return pump;
  }
};

struct ControlState {
  Mode mode = Mode::Stop;
  Actuation actuation = Actuation::Auto;
  IrrigationPhase irrigation = IrrigationPhase::Idle;
  SimTime irrigation_remaining = 0;
  PumpPhase pump = PumpPhase::Off;
  std::map<FaultKind, FaultRecord> faults;
  std::optional<double> last_avg_tension;
  ManualDemand manual;

  bool has_fault(FaultKind k) const { return faults.contains(k); }
};

/// Everything the master reads at the start of a scan.
struct PlcInputs {
  gw::TelemetryBlock telemetry;  // ages as of this scan
  env::LevelFlags buffer;
  env::LevelFlags upper;
  bool float_demanding_fill = false;
  std::optional<bus::InputWord> input;
};

struct Command {
  enum class Kind { Run, Stop, Auto, Manual, AckFaults, SetActuator, SetParams };
  Kind kind = Kind::Run;
  Actuator actuator = Actuator::Pump;
  bool on = false;
  ParamsPatch params;
  std::string origin = "operator";

  bool operator==(const Command&) const = default;

  static Command plc(Kind k, std::string origin = "operator") {
    Command c;
    c.kind = k;
    c.origin = std::move(origin);
    return c;
  }
  static Command set(Actuator a, bool on, std::string origin = "operator") {
    Command c;
    c.kind = Kind::SetActuator;
    c.actuator = a;
    c.on = on;
    c.origin = std::move(origin);
    return c;
  }
  static Command set_params(ParamsPatch p, std::string origin = "operator") {
    Command c;
    c.kind = Kind::SetParams;
    c.params = std::move(p);
    c.origin = std::move(origin);
    return c;
  }
  std::string describe() const {
    switch (kind) {
      case Kind::Run: return "run";
      case Kind::Stop: return "stop";
      case Kind::Auto: return "auto";
      case Kind::Manual: return "manual";
      case Kind::AckFaults: return "ack-faults";
      case Kind::SetActuator: return fmt::format("{} {}", to_string(actuator), on ? "on" : "off");
      case Kind::SetParams: return "set params";
    }
    return "?";
  }
};

struct CommandOutcome {
  bool accepted = false;
  std::string reason;  // rejection reason, e.g. "ModeIsAuto"

  static CommandOutcome ok() { return {true, {}}; }
  static CommandOutcome rejected(std::string why) { return {false, std::move(why)}; }
};

/// Mean soil-moisture tension over channels no older than the staleness limit.
inline std::optional<double> average_tension(const gw::TelemetryBlock& block, SimTime staleness_limit) {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : block.entries) {
    if (e.kind == mesh::SensorKind::SoilMoisture && e.age <= staleness_limit) {
      sum += e.value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline bool flag_at(const env::LevelFlags& f, LevelMark m) {
  switch (m) {
    case LevelMark::Min: return f.min;
    case LevelMark::Middle: return f.middle;
    case LevelMark::Max: return f.max;
  }
  return false;
}

/// The master controller program. Each scan runs, in order: command intake,
/// fault detection, tank FSM, irrigation FSM, output assembly.
class MasterPlc {
 public:
  explicit MasterPlc(ControlParams params = {}, Mode mode = Mode::Stop, Actuation actuation = Actuation::Auto)
      : params_(params) {
    state_.mode = mode;
    state_.actuation = actuation;
  }

  const ControlParams& params() const { return params_; }
  const ControlState& state() const { return state_; }
  const bus::OutputWord& output() const { return output_; }

  std::vector<CommandOutcome> scan(SimTime now, const PlcInputs& in, std::span<const Command> commands,
                                   EventSink& ev) {
    if (!first_scan_) first_scan_ = now;
    if (in.input) last_input_ = now;

    std::vector<CommandOutcome> outcomes;
    outcomes.reserve(commands.size());
    for (const auto& c : commands) outcomes.push_back(apply(c, in, ev));

    detect_faults(now, in, ev);
    const bool automatic = state_.mode == Mode::Run && state_.actuation == Actuation::Auto;
    tank_control(in, automatic, now, ev);
    irrigation_control(in, automatic, ev);
    assemble_outputs(now, in, ev);
    return outcomes;
  }

  /// Fault-set delta for a scan, without running the rest of the program.
  void detect_faults(SimTime now, const PlcInputs& in, EventSink& ev) {
    state_.last_avg_tension = average_tension(in.telemetry, params_.staleness_limit);
    update_fault(FaultKind::StaleTelemetry, !state_.last_avg_tension.has_value(), now, ev);
    update_fault(FaultKind::LevelInconsistencyBuffer, !in.buffer.monotone(), now, ev);
    update_fault(FaultKind::LevelInconsistencyUpper, !in.upper.monotone(), now, ev);
    update_fault(FaultKind::OverflowRisk, in.buffer.max && in.float_demanding_fill, now, ev);
    const SimTime since = now - last_input_.value_or(first_scan_.value_or(now));
    update_fault(FaultKind::BusTimeout, since > params_.watchdog_timeout, now, ev);
    // PumpDryRun is raised by the tank logic; here only its condition is tracked.
    if (auto it = state_.faults.find(FaultKind::PumpDryRun); it != state_.faults.end()) {
      set_condition(it->first, it->second, !in.buffer.min, ev);
    }
  }

 private:
  CommandOutcome apply(const Command& c, const PlcInputs& in, EventSink& ev) {
    CommandOutcome r = apply_inner(c, in, ev);
    ev.emit(r.accepted ? Severity::Info : Severity::Warn, "plc.cmd",
            fmt::format("{} from {}: {}", c.describe(), c.origin, r.accepted ? "accepted" : "rejected (" + r.reason + ")"));
    return r;
  }

  CommandOutcome apply_inner(const Command& c, const PlcInputs& in, EventSink& ev) {
    using K = Command::Kind;
    switch (c.kind) {
      case K::Run:
        if (state_.mode != Mode::Run) ev.info("plc", "mode Stop -> Run");
        state_.mode = Mode::Run;
        return CommandOutcome::ok();
      case K::Stop:
        if (state_.mode != Mode::Stop) ev.info("plc", "mode Run -> Stop");
        state_.mode = Mode::Stop;
        state_.manual = {};
        return CommandOutcome::ok();
      case K::Auto:
        if (state_.actuation != Actuation::Auto) ev.info("plc", "actuation Manual -> Auto");
        state_.actuation = Actuation::Auto;
        state_.manual = {};
        return CommandOutcome::ok();
      case K::Manual:
        if (state_.actuation != Actuation::Manual) ev.info("plc", "actuation Auto -> Manual");
        state_.actuation = Actuation::Manual;
        state_.manual = {};
        return CommandOutcome::ok();
      case K::AckFaults: {
        for (auto it = state_.faults.begin(); it != state_.faults.end();) {
          if (!it->second.condition_active) {
            ev.info("plc", fmt::format("fault {} acknowledged and cleared", to_string(it->first)));
            it = state_.faults.erase(it);
          } else {
            ++it;
          }
        }
        return CommandOutcome::ok();
      }
      case K::SetActuator: {
        if (state_.mode == Mode::Stop) return CommandOutcome::rejected("PlcStopped");
        if (state_.actuation == Actuation::Auto) return CommandOutcome::rejected("ModeIsAuto");
        if (c.actuator == Actuator::Pump && c.on) {
          if (!in.buffer.min) {
            raise(FaultKind::PumpDryRun, ev.now(), true, ev);
            return CommandOutcome::rejected("PumpDryRun");
          }
          if (state_.has_fault(FaultKind::PumpDryRun)) return CommandOutcome::rejected("PumpDryRun");
        }
        state_.manual[c.actuator] = c.on;
        return CommandOutcome::ok();
      }
      case K::SetParams: {
        const ControlParams next = c.params.applied_to(params_);
        if (auto bad = next.violation()) return CommandOutcome::rejected("InvalidParams: " + *bad);
        ev.info("plc", "params changed: " + describe_changes(params_, next));
        params_ = next;
        return CommandOutcome::ok();
      }
    }
    return CommandOutcome::rejected("UnknownCommand");
  }

  void raise(FaultKind k, SimTime now, bool condition, EventSink& ev) {
    auto [it, inserted] = state_.faults.try_emplace(k, FaultRecord{now, condition});
    if (inserted) {
      ev.fault("plc", fmt::format("fault raised: {}", to_string(k)));
      if (k == FaultKind::OverflowRisk) ev.warn("plc", "corrective measure: mains supply closed");
    } else {
      set_condition(k, it->second, condition, ev);
    }
  }

  void set_condition(FaultKind k, FaultRecord& rec, bool condition, EventSink& ev) {
    if (rec.condition_active && !condition) {
      ev.info("plc", fmt::format("fault {} condition resolved, awaiting acknowledgement", to_string(k)));
    } else if (!rec.condition_active && condition) {
      ev.fault("plc", fmt::format("fault {} condition active again", to_string(k)));
    }
    rec.condition_active = condition;
  }

  void update_fault(FaultKind k, bool condition, SimTime now, EventSink& ev) {
    if (condition) {
      raise(k, now, true, ev);
    } else if (auto it = state_.faults.find(k); it != state_.faults.end()) {
      set_condition(k, it->second, false, ev);
    }
  }

  bool level_fault() const {
    return state_.has_fault(FaultKind::LevelInconsistencyBuffer) || state_.has_fault(FaultKind::LevelInconsistencyUpper);
  }

  void tank_control(const PlcInputs& in, bool automatic, SimTime now, EventSink& ev) {
    if (!automatic) {
      if (state_.pump == PumpPhase::Filling) ev.info("plc", "tank FSM Filling -> Off (not in Run/Auto)");
      state_.pump = PumpPhase::Off;
      return;
    }
    if (state_.pump == PumpPhase::Off) {
      if (!flag_at(in.upper, params_.pump_start) && in.buffer.min && !state_.has_fault(FaultKind::PumpDryRun) &&
          !level_fault()) {
        state_.pump = PumpPhase::Filling;
        ev.info("plc", "tank FSM Off -> Filling (upper tank low)");
      }
      return;
    }
    if (!in.buffer.min) {
      state_.pump = PumpPhase::Off;
      raise(FaultKind::PumpDryRun, now, true, ev);
      ev.warn("plc", "tank FSM Filling -> Off (buffer below min, protective stop)");
    } else if (flag_at(in.upper, params_.pump_stop)) {
      state_.pump = PumpPhase::Off;
      ev.info("plc", "tank FSM Filling -> Off (upper tank full)");
    } else if (level_fault()) {
      state_.pump = PumpPhase::Off;
      ev.warn("plc", "tank FSM Filling -> Off (level sensor fault)");
    }
  }

  void irrigation_control(const PlcInputs& in, bool automatic, EventSink& ev) {
    bool just_closed = false;
    if (state_.irrigation == IrrigationPhase::Watering) {
      if (!automatic) {
        state_.irrigation = IrrigationPhase::Idle;
        state_.irrigation_remaining = 0;
        ev.warn("plc", "irrigation aborted (left Run/Auto)");
        return;
      }
      state_.irrigation_remaining -= params_.scan_period;
      if (state_.irrigation_remaining <= 0) {
        just_closed = true;
        if (params_.lockout > 0) {
          state_.irrigation = IrrigationPhase::Lockout;
          state_.irrigation_remaining = params_.lockout;
        } else {
          state_.irrigation = IrrigationPhase::Idle;
          state_.irrigation_remaining = 0;
        }
        ev.info("plc", fmt::format("irrigation Watering -> {} (duration elapsed, valve closed)",
                                   to_string(state_.irrigation)));
      }
    } else if (state_.irrigation == IrrigationPhase::Lockout) {
      state_.irrigation_remaining -= params_.scan_period;
      if (state_.irrigation_remaining <= 0) {
        state_.irrigation = IrrigationPhase::Idle;
        state_.irrigation_remaining = 0;
        ev.info("plc", "irrigation Lockout -> Idle");
      }
    }
    if (!automatic || just_closed || state_.irrigation != IrrigationPhase::Idle) return;
    const auto& avg = state_.last_avg_tension;
    if (avg && *avg >= params_.dry_limit && *avg >= params_.wet_limit && in.upper.min &&
        !state_.has_fault(FaultKind::LevelInconsistencyUpper)) {
      state_.irrigation = IrrigationPhase::Watering;
      state_.irrigation_remaining = params_.irrigation_duration;
      ev.info("plc", fmt::format("irrigation Idle -> Watering ({} s, avg tension {:.1f} cbar)",
                                 params_.irrigation_duration, *avg));
    }
  }

  void assemble_outputs(SimTime now, const PlcInputs& in, EventSink& ev) {
    bus::OutputWord w;
    if (state_.mode == Mode::Run) {
      const bool overflow = state_.has_fault(FaultKind::OverflowRisk);
      if (state_.actuation == Actuation::Auto) {
        const bool filling = state_.pump == PumpPhase::Filling;
        w.set1(bus::addr1_bit::pump, filling);
        w.set1(bus::addr1_bit::feed_valve, filling);
        w.set1(bus::addr1_bit::irrigation_valve, state_.irrigation == IrrigationPhase::Watering);
        w.set2(bus::addr2_bit::mains_close, overflow);
      } else {
        if (state_.manual.pump && !in.buffer.min) {
          state_.manual.pump = false;
          raise(FaultKind::PumpDryRun, now, true, ev);
          ev.warn("plc", "manual pump stopped (buffer below min)");
        }
        w.set1(bus::addr1_bit::pump, state_.manual.pump);
        w.set1(bus::addr1_bit::feed_valve, state_.manual.feed_valve);
        w.set1(bus::addr1_bit::irrigation_valve, state_.manual.irrigation_valve);
        w.set1(bus::addr1_bit::lamp, state_.manual.lamp);
        w.set2(bus::addr2_bit::mains_close, state_.manual.mains_close || overflow);
      }
      // Dry-run interlock: final word never runs the pump without water.
      if (!in.buffer.min || state_.has_fault(FaultKind::PumpDryRun)) w.set1(bus::addr1_bit::pump, false);
    }
    toggle_ = !toggle_;
    w.set2(bus::addr2_bit::watchdog_toggle, toggle_);
    log_bit_changes(output_, w, ev);
    output_ = w;
  }

  static void log_bit_changes(const bus::OutputWord& before, const bus::OutputWord& after, EventSink& ev) {
    auto check = [&](bool a, bool b, const char* name) {
      if (a != b) ev.info("plc.out", fmt::format("{} {}", name, b ? "ON" : "OFF"));
    };
    check(before.pump(), after.pump(), "pump");
    check(before.feed_valve(), after.feed_valve(), "feed_valve");
    check(before.irrigation_valve(), after.irrigation_valve(), "irrigation_valve");
    check(before.lamp(), after.lamp(), "lamp");
    check(before.mains_close(), after.mains_close(), "mains_close");
  }

  ControlParams params_;
  ControlState state_;
  bus::OutputWord output_;
  bool toggle_ = false;
  std::optional<SimTime> last_input_;
  std::optional<SimTime> first_scan_;
};

}  // namespace ghsim::plc
