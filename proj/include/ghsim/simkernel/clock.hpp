#pragma once

#include <stdexcept>

#include "ghsim/core/sim_time.hpp"

namespace ghsim::sim {

/// Fixed-step simulated clock. `now` is always a non-negative multiple of `tick`.
class SimClock {
 public:
  explicit SimClock(SimTime tick = 1, double speed = 0.0) : tick_(tick), speed_(speed) {
    if (tick <= 0) throw std::invalid_argument("tick must be > 0");
    if (speed < 0.0) throw std::invalid_argument("speed must be >= 0");
  }

  SimTime now() const { return now_; }
  SimTime tick() const { return tick_; }
  /// Sim-seconds per wall-second; 0 runs as fast as possible.
  double speed() const { return speed_; }
  void set_speed(double s) {
    if (s < 0.0) throw std::invalid_argument("speed must be >= 0");
    speed_ = s;
  }

  void advance() { now_ += tick_; }

  bool is_multiple_of(SimTime period) const { return period > 0 && now_ % period == 0; }

 private:
  SimTime now_ = 0;
  SimTime tick_;
  double speed_;
};

}  // namespace ghsim::sim
