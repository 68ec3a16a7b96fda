#pragma once

#include <optional>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/envsim/hydraulics.hpp"
#include "ghsim/fieldbus/asi.hpp"

namespace ghsim::plc {

/// The slave actuator controller. Applies the master's command bits verbatim,
/// runs the local lamp rule and de-energizes everything when the watchdog
/// toggle stops arriving.
class SlavePlc {
 public:
  SlavePlc(double lamp_on_solar = 20.0, double lamp_off_solar = 50.0, SimTime watchdog_timeout = 3, SimTime cycle = 1)
      : lamp_on_(lamp_on_solar), lamp_off_(lamp_off_solar), timeout_(watchdog_timeout), cycle_(cycle) {}

  void set_lamp_thresholds(double on, double off) {
    lamp_on_ = on;
    lamp_off_ = off;
  }
  void set_watchdog_timeout(SimTime t) { timeout_ = t; }

  /// One slave cycle. `rx` is empty when the bus carried nothing this cycle.
  std::optional<bus::InputWord> cycle(SimTime now, std::optional<bus::OutputWord> rx, double solar, EventSink& ev) {
    if (!local_lamp_ && solar < lamp_on_) {
      local_lamp_ = true;
    } else if (local_lamp_ && solar > lamp_off_) {
      local_lamp_ = false;
    }

    // The reply confirms what was applied before this word takes effect.
    bus::InputWord reply{applied_word_};

    if (rx) {
      const bool toggle = rx->watchdog_toggle();
      if (!last_toggle_ || *last_toggle_ != toggle) {
        last_valid_toggle_ = now;
        last_toggle_ = toggle;
      }
    }
    const bool alive = last_valid_toggle_ && now - *last_valid_toggle_ < timeout_ + cycle_;
    if (!alive) {
      if (!tripped_ && last_valid_toggle_) {
        ev.fault("slave", "watchdog expired, all outputs de-energized");
      }
      tripped_ = last_valid_toggle_.has_value();
      applied_word_ = {};
    } else {
      if (tripped_) {
        ev.info("slave", "watchdog toggle restored, outputs follow master again");
        tripped_ = false;
      }
      if (rx) applied_word_ = *rx;
    }

    applied_.pump = alive && applied_word_.pump();
    applied_.feed_valve = alive && applied_word_.feed_valve();
    applied_.irrigation_valve = alive && applied_word_.irrigation_valve();
    applied_.mains_close = alive && applied_word_.mains_close();
    const bool lamp = alive ? (applied_word_.lamp() || local_lamp_) : false;
    if (lamp != applied_.lamp) ev.info("slave", fmt::format("lamp {}", lamp ? "on" : "off"));
    applied_.lamp = lamp;

    if (!rx) return std::nullopt;
    return reply;
  }

  const env::ActuatorPhys& applied() const { return applied_; }
  bool watchdog_tripped() const { return tripped_; }
  bool local_lamp() const { return local_lamp_; }

 private:
  double lamp_on_;
  double lamp_off_;
  SimTime timeout_;
  SimTime cycle_;
  bool local_lamp_ = false;
  bool tripped_ = false;
  std::optional<bool> last_toggle_;
  std::optional<SimTime> last_valid_toggle_;
  bus::OutputWord applied_word_;
  env::ActuatorPhys applied_;
};

}  // namespace ghsim::plc
