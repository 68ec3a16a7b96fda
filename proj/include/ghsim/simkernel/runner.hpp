#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ghsim/simkernel/world.hpp"

namespace ghsim::sim {

/// Drives a Simulation on its own thread with wall-clock pacing.
/// Pacing only changes how fast steps happen, never what they compute.
class Runner {
 public:
  explicit Runner(Simulation& sim, bool stop_at_duration = false)
      : sim_(sim), stop_at_duration_(stop_at_duration), speed_(sim.scenario().speed) {
    sim_.set_auto_publish(true);
    sim_.publish();
  }
  ~Runner() { stop(); }

  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  void start() {
    if (thread_.joinable()) return;
    running_ = true;
    thread_ = std::thread([this] { loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      running_ = false;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

  void pause() {
    std::lock_guard lock(mu_);
    paused_ = true;
  }

  void resume() {
    {
      std::lock_guard lock(mu_);
      paused_ = false;
      rebase_ = true;
    }
    cv_.notify_all();
  }

  /// Sim-seconds per wall-second; 0 runs as fast as possible.
  void set_speed(double s) {
    if (s < 0.0) throw std::invalid_argument("speed must be >= 0");
    {
      std::lock_guard lock(mu_);
      speed_ = s;
      rebase_ = true;
    }
    cv_.notify_all();
  }

  bool paused() const {
    std::lock_guard lock(mu_);
    return paused_;
  }
  double speed() const {
    std::lock_guard lock(mu_);
    return speed_;
  }
  bool running() const { return running_; }

 private:
  using WallClock = std::chrono::steady_clock;

  void loop() {
    WallClock::time_point wall0 = WallClock::now();
    SimTime sim0 = sim_.now();
    while (true) {
      double speed = 0.0;
      {
        std::unique_lock lock(mu_);
        if (!running_) break;
        if (paused_) {
          lock.unlock();
          sim_.drain_tasks();
          lock.lock();
          cv_.wait_for(lock, std::chrono::milliseconds(20), [this] { return !running_ || !paused_; });
          continue;
        }
        if (rebase_) {
          rebase_ = false;
          wall0 = WallClock::now();
          sim0 = sim_.now();
        }
        speed = speed_;
      }
      if (stop_at_duration_ && sim_.finished()) {
        sim_.drain_tasks();
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, std::chrono::milliseconds(20), [this] { return !running_; });
        continue;
      }
      sim_.step();
      if (speed > 0.0) {
        const double sim_elapsed = static_cast<double>(sim_.now() - sim0);
        const auto due = wall0 + std::chrono::duration_cast<WallClock::duration>(
                                     std::chrono::duration<double>(sim_elapsed / speed));
        std::unique_lock lock(mu_);
        cv_.wait_until(lock, due, [this] { return !running_ || rebase_ || paused_; });
      }
    }
    sim_.flush_event_log();
  }

  Simulation& sim_;
  bool stop_at_duration_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  bool paused_ = false;
  bool rebase_ = true;
  double speed_;
};

}  // namespace ghsim::sim
