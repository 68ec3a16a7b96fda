#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/core/rng.hpp"
#include "ghsim/envsim/climate.hpp"
#include "ghsim/envsim/hydraulics.hpp"
#include "ghsim/envsim/scene.hpp"
#include "ghsim/envsim/soil.hpp"
#include "ghsim/fieldbus/asi.hpp"
#include "ghsim/fieldbus/mpi_link.hpp"
#include "ghsim/gateway/gateway.hpp"
#include "ghsim/meshnet/mesh_network.hpp"
#include "ghsim/plc/master.hpp"
#include "ghsim/plc/slave.hpp"
#include "ghsim/simkernel/clock.hpp"
#include "ghsim/simkernel/scenario.hpp"

namespace ghsim::sim {

/// Immutable picture of the plant published after a step, for concurrent readers.
struct StatusSnapshot {
  SimTime now = 0;
  std::string time;
  plc::ControlState control;
  plc::ControlParams params;
  bus::OutputWord output;
  std::optional<bus::InputWord> input;
  env::ActuatorPhys applied;
  env::TankState buffer;
  env::TankState upper;
  env::LevelFlags buffer_flags;
  env::LevelFlags upper_flags;
  std::vector<env::PlantZone> zones;
  env::Climate climate;
  gw::TelemetryBlock latest;
  std::vector<mesh::NodeState> nodes;
  bool bus_faulted = false;
  bool watchdog_tripped = false;
  std::uint64_t event_count = 0;

  nlohmann::json scene() const {
    env::SceneInputs in;
    in.time = time;
    in.buffer = &buffer;
    in.upper = &upper;
    in.buffer_flags = buffer_flags;
    in.upper_flags = upper_flags;
    in.actuators = &applied;
    in.zones = &zones;
    in.climate = &climate;
    return env::render_snapshot(in);
  }
};

/// The whole plant. One step advances every module once, in the fixed order
/// envsim, meshnet, gateway, fieldbus, plc, then moves the clock on by one tick.
class Simulation {
 public:
  explicit Simulation(Scenario scenario)
      : sc_(std::move(scenario)),
        cal_(sc_.calendar()),
        clock_(sc_.tick, sc_.speed),
        climate_rng_(sc_.seed, "climate-noise"),
        mesh_(sc_.mesh, sc_.nodes, sc_.seed),
        gateway_(cal_, sc_.alerts),
        link_(sc_.seed),
        master_(sc_.control, sc_.initial_mode, sc_.initial_actuation),
        slave_(sc_.control.lamp_on_solar, sc_.control.lamp_off_solar, sc_.control.watchdog_timeout, sc_.tick) {
    sc_.validate();
    for (const auto& z : sc_.zones) {
      env::PlantZone pz;
      pz.zone_id = z.id;
      pz.tension = z.tension;
      pz.soil_temp = z.soil_temp;
      pz.water_content = env::water_content_from_tension(sc_.soil, z.tension);
      zones_.push_back(pz);
      exposure_.push_back(z.exposure);
    }
    buffer_ = make_tank(env::TankId::Buffer, sc_.buffer);
    upper_ = make_tank(env::TankId::Upper, sc_.upper);
    buffer_.float_switch_engaged = buffer_.volume >= buffer_.float_level;
    climate_ = env::advance_climate(sc_.climate, cal_, 0, climate_rng_);
    buffer_flags_ = env::read_level_sensors(buffer_, {});
    upper_flags_ = env::read_level_sensors(upper_, {});
    fault_started_.assign(sc_.faults.size(), false);
    fault_ended_.assign(sc_.faults.size(), false);
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Scenario& scenario() const { return sc_; }
  const Calendar& calendar() const { return cal_; }
  SimTime now() const { return clock_.now(); }
  SimTime tick() const { return clock_.tick(); }
  bool finished() const { return clock_.now() >= sc_.duration; }

  const std::vector<env::PlantZone>& zones() const { return zones_; }
  const env::Climate& climate() const { return climate_; }
  const env::TankState& buffer() const { return buffer_; }
  const env::TankState& upper() const { return upper_; }
  const env::LevelFlags& buffer_flags() const { return buffer_flags_; }
  const env::LevelFlags& upper_flags() const { return upper_flags_; }
  const env::HydraulicsStep& last_hydraulics() const { return last_hyd_; }
  const mesh::MeshNetwork& mesh() const { return mesh_; }
  const gw::Gateway& gateway() const { return gateway_; }
  gw::Gateway& gateway() { return gateway_; }
  const bus::MpiLink& mpi() const { return link_; }
  const bus::AsiBus& asi() const { return asi_; }
  const plc::MasterPlc& master() const { return master_; }
  const plc::SlavePlc& slave() const { return slave_; }
  const std::optional<bus::InputWord>& last_input() const { return input_; }
  /// Largest per-tick water balance residual seen so far, liters.
  double max_mass_residual() const { return max_residual_; }

  /// Enqueues a command for the next scan. Safe from any thread.
  std::future<plc::CommandOutcome> submit(plc::Command c) {
    std::promise<plc::CommandOutcome> p;
    auto f = p.get_future();
    std::lock_guard lock(queue_mu_);
    queue_.push_back({std::move(c), std::move(p)});
    return f;
  }

  /// Runs `fn` on the simulation thread at the next step boundary.
  void post_task(std::function<void()> fn) {
    std::lock_guard lock(queue_mu_);
    tasks_.push_back(std::move(fn));
  }

  /// Runs posted tasks now; for a driver that is not stepping (paused).
  void drain_tasks() {
    std::deque<std::function<void()>> tasks;
    {
      std::lock_guard lock(queue_mu_);
      tasks.swap(tasks_);
    }
    for (auto& t : tasks) t();
  }

  /// The gateway pushes its freshest block to the master on the next step.
  void request_poll() { poll_requested_ = true; }

  /// Appends every event line to `path` from now on (the file is truncated).
  void set_event_log_file(const std::string& path) {
    log_file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*log_file_) throw std::runtime_error("cannot open event log '" + path + "'");
    for (const auto& e : events_) *log_file_ << format_event_line(cal_, e) << '\n';
  }
  void flush_event_log() {
    if (log_file_) log_file_->flush();
  }

  /// Publish a snapshot after every step (needed when other threads read status).
  void set_auto_publish(bool on) { auto_publish_ = on; }

  std::vector<Event> step() {
    drain_tasks();
    const SimTime now = clock_.now();
    EventSink ev(now);
    apply_fault_schedule(now, ev);

    step_envsim(now);
    const auto packets = step_meshnet(now, ev);
    step_gateway(now, packets, ev);
    step_fieldbus(now, ev);
    step_plc(now, ev);

    std::vector<Event> out = ev.take();
    {
      std::lock_guard lock(events_mu_);
      for (auto& e : out) {
        e.seq = next_event_seq_++;
        events_.push_back(e);
      }
    }
    if (log_file_) {
      for (const auto& e : out) *log_file_ << format_event_line(cal_, e) << '\n';
    }
    clock_.advance();
    if (auto_publish_) publish();
    return out;
  }

  /// Steps until `now() >= t`.
  void run_until(SimTime t) {
    while (clock_.now() < t) step();
  }

  void run_to_end() { run_until(sc_.duration); }

  void publish() {
    auto s = std::make_shared<StatusSnapshot>();
    s->now = clock_.now();
    s->time = cal_.iso(s->now);
    s->control = master_.state();
    s->params = master_.params();
    s->output = master_.output();
    s->input = input_;
    s->applied = slave_.applied();
    s->buffer = buffer_;
    s->upper = upper_;
    s->buffer_flags = buffer_flags_;
    s->upper_flags = upper_flags_;
    s->zones = zones_;
    s->climate = climate_;
    s->latest = gateway_.latest_block(s->now);
    s->nodes = mesh_.nodes();
    s->bus_faulted = asi_.faulted();
    s->watchdog_tripped = slave_.watchdog_tripped();
    {
      std::lock_guard lock(events_mu_);
      s->event_count = events_.size();
    }
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(s);
  }

  std::shared_ptr<const StatusSnapshot> snapshot() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

  /// Newest first, at most `limit`. Safe from any thread.
  std::vector<Event> recent_events(std::size_t limit) const {
    std::lock_guard lock(events_mu_);
    const std::size_t n = std::min(limit, events_.size());
    return std::vector<Event>(events_.rbegin(), events_.rbegin() + static_cast<std::ptrdiff_t>(n));
  }

  std::size_t event_count() const {
    std::lock_guard lock(events_mu_);
    return events_.size();
  }

  /// Whole log; call from the simulation thread only.
  const std::vector<Event>& events() const { return events_; }

  std::string event_log_text() const {
    std::string out;
    for (const auto& e : events_) out += format_event_line(cal_, e) + '\n';
    return out;
  }

 private:
  struct Pending {
    plc::Command command;
    std::promise<plc::CommandOutcome> promise;
  };

  static env::TankState make_tank(env::TankId id, const TankSpec& spec) {
    env::TankState t;
    t.id = id;
    t.capacity = spec.capacity;
    t.thresholds = spec.thresholds;
    t.float_level = spec.float_level;
    t.volume = spec.initial;
    return t;
  }

  void apply_fault_schedule(SimTime now, EventSink& ev) {
    for (std::size_t i = 0; i < sc_.faults.size(); ++i) {
      const FaultSpec& f = sc_.faults[i];
      if (!fault_started_[i] && now >= f.at) {
        fault_started_[i] = true;
        set_fault(f, true);
        ev.warn("sim", fmt::format("fault injected: {}{}", f.describe(),
                                   f.duration > 0 ? fmt::format(" for {} s", f.duration) : std::string()));
      }
      if (fault_started_[i] && !fault_ended_[i] && f.duration > 0 && now >= f.at + f.duration) {
        fault_ended_[i] = true;
        set_fault(f, false);
        ev.info("sim", fmt::format("fault cleared: {}", f.describe()));
      }
    }
  }

  void set_fault(const FaultSpec& f, bool on) {
    const int d = on ? 1 : -1;
    switch (f.type) {
      case FaultType::BusFault:
        bus_faults_ += d;
        asi_.set_faulted(bus_faults_ > 0);
        break;
      case FaultType::FrameCorrupt:
        corrupt_faults_ += d;
        link_.set_corrupting(corrupt_faults_ > 0);
        break;
      case FaultType::FloatStuck: float_stuck_ += d; break;
      case FaultType::NodeSilent: mesh_.set_silenced(f.node, on); break;
      case FaultType::LevelStuck: {
        auto& slots = f.tank == env::TankId::Buffer ? buffer_stuck_ : upper_stuck_;
        slots[static_cast<std::size_t>(f.flag)] = on ? std::optional<bool>(f.value) : std::nullopt;
        break;
      }
    }
  }

  void step_envsim(SimTime now) {
    const double dt = static_cast<double>(clock_.tick());
    climate_ = env::advance_climate(sc_.climate, cal_, now, climate_rng_);
    const env::TankState b0 = buffer_;
    const env::TankState u0 = upper_;
    last_hyd_ = env::advance_hydraulics(sc_.hydraulics, dt, buffer_, upper_, slave_.applied(), zones_.size(),
                                        float_stuck_ > 0);
    buffer_ = last_hyd_.buffer;
    upper_ = last_hyd_.upper;
    max_residual_ = std::max(max_residual_, std::abs(last_hyd_.residual(b0, u0)));
    for (std::size_t i = 0; i < zones_.size(); ++i) {
      zones_[i] = env::advance_soil(sc_.soil, exposure_[i], dt, zones_[i], last_hyd_.zone_inflow[i], climate_);
    }
    buffer_flags_ = env::read_level_sensors(buffer_, buffer_stuck_);
    upper_flags_ = env::read_level_sensors(upper_, upper_stuck_);
  }

  std::vector<mesh::MeshPacket> step_meshnet(SimTime now, EventSink& ev) {
    const mesh::GroundTruth truth{climate_, zones_};
    return mesh_.step(now, static_cast<double>(clock_.tick()), truth, ev);
  }

  void step_gateway(SimTime now, const std::vector<mesh::MeshPacket>& packets, EventSink& ev) {
    if (!packets.empty()) gateway_.ingest(packets, ev);
    gateway_.roll(now);
  }

  void step_fieldbus(SimTime now, EventSink& ev) {
    const bool sample_instant = now % sc_.mesh.sample_period == 0;
    if (sample_instant || poll_requested_) {
      poll_requested_ = false;
      const gw::TelemetryBlock block = gateway_.latest_block(now);
      if (!block.empty()) {
        if (auto got = link_.push(block, ev)) {
          plc_block_ = std::move(*got);
          plc_block_time_ = now;
        }
      }
    }
    input_ = asi_.cyclic_exchange(master_.output(), slave_, now, climate_.solar, ev);
  }

  void step_plc(SimTime now, EventSink& ev) {
    std::vector<plc::Command> commands;
    for (const auto& sc : sc_.commands) {
      if (sc.at == now || (sc.at < now && sc.at > now - clock_.tick())) commands.push_back(sc.command);
    }
    std::vector<Pending> external;
    {
      std::lock_guard lock(queue_mu_);
      while (!queue_.empty()) {
        external.push_back(std::move(queue_.front()));
        queue_.pop_front();
      }
    }
    const std::size_t scheduled = commands.size();
    for (const auto& p : external) commands.push_back(p.command);

    plc::PlcInputs in;
    in.telemetry = plc_block_.aged(now - plc_block_time_);
    in.buffer = buffer_flags_;
    in.upper = upper_flags_;
    in.float_demanding_fill = !buffer_.float_switch_engaged;
    in.input = input_;
    const auto outcomes = master_.scan(now, in, commands, ev);

    const auto& p = master_.params();
    slave_.set_lamp_thresholds(p.lamp_on_solar, p.lamp_off_solar);
    slave_.set_watchdog_timeout(p.watchdog_timeout);
    for (std::size_t i = 0; i < external.size(); ++i) external[i].promise.set_value(outcomes[scheduled + i]);
  }

  Scenario sc_;
  Calendar cal_;
  SimClock clock_;
  RngStream climate_rng_;
  env::Climate climate_;
  std::vector<env::PlantZone> zones_;
  std::vector<double> exposure_;
  env::TankState buffer_;
  env::TankState upper_;
  env::LevelFlags buffer_flags_;
  env::LevelFlags upper_flags_;
  env::LevelOverrides buffer_stuck_{};
  env::LevelOverrides upper_stuck_{};
  env::HydraulicsStep last_hyd_;
  double max_residual_ = 0.0;

  mesh::MeshNetwork mesh_;
  gw::Gateway gateway_;
  bus::MpiLink link_;
  bus::AsiBus asi_;
  plc::MasterPlc master_;
  plc::SlavePlc slave_;
  gw::TelemetryBlock plc_block_;
  SimTime plc_block_time_ = 0;
  std::optional<bus::InputWord> input_;
  bool poll_requested_ = false;

  std::vector<bool> fault_started_;
  std::vector<bool> fault_ended_;
  int bus_faults_ = 0;
  int corrupt_faults_ = 0;
  int float_stuck_ = 0;

  mutable std::mutex queue_mu_;
  std::deque<Pending> queue_;
  std::deque<std::function<void()>> tasks_;

  mutable std::mutex events_mu_;
  std::vector<Event> events_;
  std::uint64_t next_event_seq_ = 1;
  std::unique_ptr<std::ofstream> log_file_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const StatusSnapshot> snapshot_;
  bool auto_publish_ = false;
};

}  // namespace ghsim::sim
