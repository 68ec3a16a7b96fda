#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "ghsim/fieldbus/crc16.hpp"
#include "ghsim/fieldbus/frame.hpp"
#include "ghsim/fieldbus/mpi_link.hpp"
#include "ghsim/opsvc/service.hpp"
#include "ghsim/simkernel/scenario.hpp"
#include "ghsim/simkernel/world.hpp"

namespace ghsim::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::string format_result(const CriterionResult& r) {
  return fmt::format("[{}] criterion {}: {} -- {}", r.pass ? "PASS" : "FAIL", r.id, r.name, r.detail);
}

namespace oracle {

/// Bit-at-a-time CRC-16/CCITT-FALSE, kept apart from the table-driven codec.
inline std::uint16_t crc16_bitwise(const std::vector<std::uint8_t>& data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    for (int i = 7; i >= 0; --i) {
      const bool in = (byte >> i) & 1;
      const bool top = (crc >> 15) & 1;
      crc = static_cast<std::uint16_t>(crc << 1);
      if (in != top) crc ^= 0x1021;
    }
  }
  return crc;
}

/// Start of the next window after `start`, computed with the C library calendar.
inline std::int64_t next_window_unix(Period p, std::int64_t start_unix) {
  if (p == Period::Hour) return start_unix + 3600;
  if (p == Period::Day) return start_unix + 86400;
  std::time_t t = static_cast<std::time_t>(start_unix);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::int64_t u = start_unix;
  const int month = tm.tm_mon;
  while (true) {
    u += 86400;
    std::time_t tt = static_cast<std::time_t>(u);
    std::tm next{};
    gmtime_r(&tt, &next);
    if (next.tm_mon != month) return u - (next.tm_mday - 1) * 86400LL - next.tm_hour * 3600LL;
  }
}

struct BruteRollup {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t count = 0;
};

/// Straight scan over one channel's rows; no sorting assumptions, no shared code with the store.
inline BruteRollup brute_force(const std::vector<mesh::Reading>& rows, SimTime from, SimTime to) {
  BruteRollup b;
  long double sum = 0.0L;
  for (const auto& r : rows) {
    if (r.timestamp < from || r.timestamp >= to) continue;
    if (b.count == 0 || r.value < b.min) b.min = r.value;
    if (b.count == 0 || r.value > b.max) b.max = r.value;
    sum += r.value;
    ++b.count;
  }
  if (b.count) b.mean = static_cast<double>(sum / static_cast<long double>(b.count));
  return b;
}

}  // namespace oracle

namespace detail {

inline double p2p(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Per-tick water balance measured from outside the hydraulics code.
class MassAudit {
 public:
  void before(const sim::Simulation& s) {
    b0_ = s.buffer().volume;
    u0_ = s.upper().volume;
  }
  void after(const sim::Simulation& s) {
    const auto& h = s.last_hydraulics();
    const double r = (s.buffer().volume - b0_) + (s.upper().volume - u0_) + h.delivered + h.overflow - h.mains_in;
    worst_ = std::max(worst_, std::abs(r));
  }
  double worst() const { return worst_; }

 private:
  double b0_ = 0.0;
  double u0_ = 0.0;
  double worst_ = 0.0;
};

inline sim::Scenario short_scenario(SimTime duration) {
  sim::Scenario s = sim::Scenario::defaults();
  s.duration = duration;
  s.commands.clear();
  s.initial_mode = plc::Mode::Run;
  return s;
}

}  // namespace detail

/// Default scenario, 14 days: Stop for days 1-7, Run for days 8-14.
inline CriterionResult criterion_moisture_variability() {
  CriterionResult res{1, "moisture variability under control", false, {}};
  const auto t0 = std::chrono::steady_clock::now();
  const sim::Scenario sc = sim::Scenario::defaults();
  sim::Simulation s(sc);
  const std::size_t zn = s.zones().size();
  std::vector<std::vector<double>> stop(zn), run(zn);
  std::map<int, std::vector<double>> m_stop, m_run;
  const SimTime split = 7 * kDay;
  while (!s.finished()) {
    const SimTime t = s.now();
    s.step();
    if (t % sc.mesh.sample_period != 0) continue;
    for (std::size_t i = 0; i < zn; ++i) (t < split ? stop : run)[i].push_back(s.zones()[i].tension);
  }
  for (const auto& r : s.gateway().store().raw()) {
    if (r.kind == mesh::SensorKind::SoilMoisture) (r.timestamp < split ? m_stop : m_run)[r.node_id].push_back(r.value);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = secs < 60.0;
  double worst_ratio = 0.0, lo_mean = 1e9, hi_mean = -1e9, worst_measured = 0.0;
  for (std::size_t i = 0; i < zn; ++i) {
    const double ratio = detail::p2p(run[i]) / detail::p2p(stop[i]);
    const double m = detail::mean(run[i]);
    worst_ratio = std::max(worst_ratio, ratio);
    lo_mean = std::min(lo_mean, m);
    hi_mean = std::max(hi_mean, m);
    ok = ok && ratio <= 0.5 && m >= sc.control.wet_limit && m <= sc.control.dry_limit;
  }
  for (const auto& [node, v] : m_stop) worst_measured = std::max(worst_measured, detail::p2p(m_run[node]) / detail::p2p(v));
  res.pass = ok;
  res.detail = fmt::format(
      "worst p2p ratio {:.3f} (limit 0.5), run-period means {:.1f}..{:.1f} cbar (band {}..{}), "
      "sensor-side worst ratio {:.3f}, {:.1f} s wall",
      worst_ratio, lo_mean, hi_mean, sc.control.wet_limit, sc.control.dry_limit, worst_measured, secs);
  return res;
}

/// 30 days of rollups against a brute-force pass over raw rows.
inline CriterionResult criterion_rollup_oracle() {
  CriterionResult res{2, "rollup oracle equivalence", false, {}};
  sim::Scenario sc = sim::Scenario::defaults();
  sc.duration = 30 * kDay;
  sim::Simulation s(sc);
  s.run_to_end();
  s.gateway().roll(s.now());
  const auto& store = s.gateway().store();
  const std::vector<mesh::Reading> rows(store.raw().begin(), store.raw().end());
  std::map<std::pair<int, mesh::SensorKind>, std::vector<mesh::Reading>> channel;
  for (const auto& r : rows) channel[{r.node_id, r.kind}].push_back(r);
  const Calendar& cal = s.calendar();

  std::size_t checked = 0, mismatches = 0, missing = 0;
  double worst = 0.0;
  std::map<std::tuple<int, mesh::SensorKind, SimTime>, std::uint64_t> hour_counts_by_day;
  for (auto p : {Period::Hour, Period::Day, Period::Month}) {
    std::set<std::tuple<int, mesh::SensorKind, SimTime>> seen;
    for (const auto& rec : store.rollups(p)) {
      const SimTime end = cal.from_unix(oracle::next_window_unix(p, cal.to_unix(rec.period_start)));
      const auto b = oracle::brute_force(channel[{rec.node_id, rec.kind}], rec.period_start, end);
      const double d = std::max({std::abs(b.mean - rec.mean), std::abs(b.min - rec.min), std::abs(b.max - rec.max)});
      worst = std::max(worst, d);
      if (d > 1e-9 || b.count != rec.count) ++mismatches;
      ++checked;
      seen.insert({rec.node_id, rec.kind, rec.period_start});
      if (p == Period::Hour) {
        const SimTime day = rec.period_start - static_cast<SimTime>(cal.second_of_day(rec.period_start));
        hour_counts_by_day[{rec.node_id, rec.kind, day}] += rec.count;
      }
    }
    // Every (node, kind, window) with raw data and a closed window has a record.
    for (const auto& r : rows) {
      std::int64_t u = cal.to_unix(r.timestamp);
      std::int64_t start = 0;
      if (p == Period::Hour) start = u - ((u % 3600) + 3600) % 3600;
      else if (p == Period::Day) start = u - ((u % 86400) + 86400) % 86400;
      else {
        std::time_t t = static_cast<std::time_t>(u);
        std::tm tm{};
        gmtime_r(&t, &tm);
        start = u - (tm.tm_mday - 1) * 86400LL - tm.tm_hour * 3600LL - tm.tm_min * 60LL - tm.tm_sec;
      }
      if (oracle::next_window_unix(p, start) > cal.to_unix(s.now())) continue;
      if (!seen.contains({r.node_id, r.kind, cal.from_unix(start)})) ++missing;
    }
  }
  std::size_t day_sum_mismatch = 0;
  for (const auto& rec : store.rollups(Period::Day)) {
    if (hour_counts_by_day[{rec.node_id, rec.kind, rec.period_start}] != rec.count) ++day_sum_mismatch;
  }
  res.pass = checked > 0 && mismatches == 0 && missing == 0 && day_sum_mismatch == 0 &&
             !store.rollups(Period::Month).empty();
  res.detail = fmt::format("{} records checked ({} hour, {} day, {} month), max |delta| {:.2e}, {} mismatches, "
                           "{} missing, {} day/hour count mismatches",
                           checked, store.rollups(Period::Hour).size(), store.rollups(Period::Day).size(),
                           store.rollups(Period::Month).size(), worst, mismatches, missing, day_sum_mismatch);
  return res;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Two runs of one scenario must write byte-identical event logs and CSV exports.
inline CriterionResult criterion_determinism(const std::filesystem::path& workdir) {
  CriterionResult res{3, "determinism", false, {}};
  sim::Scenario sc = sim::Scenario::defaults();
  sc.faults.push_back({3 * kDay, sim::FaultType::NodeSilent, 6 * kHour, 3});
  sc.faults.push_back({8 * kDay, sim::FaultType::BusFault, 10});
  sc.faults.push_back({9 * kDay, sim::FaultType::FrameCorrupt, 2 * kHour});
  std::filesystem::create_directories(workdir);
  std::string logs[2], csvs[2];
  for (int i = 0; i < 2; ++i) {
    const auto log = workdir / fmt::format("run{}-events.log", i);
    const auto csv = workdir / fmt::format("run{}-export.csv", i);
    {
      sim::Simulation s(sc);
      s.set_event_log_file(log.string());
      s.run_to_end();
      s.flush_event_log();
      std::ofstream(csv, std::ios::binary) << s.gateway().export_csv(
          gw::ExportQuery{std::numeric_limits<SimTime>::min(), std::numeric_limits<SimTime>::max(), {}, {}});
    }
    logs[i] = slurp(log);
    csvs[i] = slurp(csv);
  }
  res.pass = !logs[0].empty() && !csvs[0].empty() && logs[0] == logs[1] && csvs[0] == csvs[1];
  res.detail = fmt::format("event log {} bytes ({}), CSV {} bytes ({})", logs[0].size(),
                           logs[0] == logs[1] ? "identical" : "DIFFERENT", csvs[0].size(),
                           csvs[0] == csvs[1] ? "identical" : "DIFFERENT");
  return res;
}

/// 7 days on the default topology with lossy links.
inline CriterionResult criterion_mesh_delivery() {
  CriterionResult res{4, "mesh delivery", false, {}};
  sim::Scenario sc = sim::Scenario::defaults();
  sc.duration = 7 * kDay;
  sc.mesh.p_loss = 0.2;
  sc.mesh.max_retries = 3;
  sim::Simulation s(sc);
  s.run_to_end();
  std::uint64_t emitted = 0;
  for (const auto& [id, st] : s.mesh().stats()) emitted += st.emitted_readings;
  const std::size_t stored = s.gateway().store().raw().size();
  const double ratio = emitted ? static_cast<double>(stored) / static_cast<double>(emitted) : 0.0;

  // Nodes with no direct radio path to the base.
  std::vector<int> far;
  double bound = 1.0;
  const double per_hop = 1.0 - std::pow(sc.mesh.p_loss, sc.mesh.max_retries + 1);
  for (const auto& n : sc.nodes) {
    if (mesh::distance(n.position, sc.mesh.base) > sc.mesh.radio_range) far.push_back(n.id);
    const auto it = s.mesh().topology().routes.find(n.id);
    if (it != s.mesh().topology().routes.end()) bound = std::min(bound, std::pow(per_hop, it->second.size()));
  }
  bool far_ok = !far.empty();
  std::string far_desc;
  for (int id : far) {
    const auto it = s.mesh().stats().find(id);
    const bool ok = it != s.mesh().stats().end() && it->second.delivered_readings > 0 && it->second.min_hops >= 2;
    far_ok = far_ok && ok;
    far_desc += fmt::format(" node {} hops {}..{}", id, it == s.mesh().stats().end() ? 0 : it->second.min_hops,
                            it == s.mesh().stats().end() ? 0 : it->second.max_hops);
  }
  res.pass = ratio >= 0.99 && far_ok;
  res.detail = fmt::format("{}/{} readings stored = {:.4f} (limit 0.99, closed-form worst-route bound {:.4f});{}",
                           stored, emitted, ratio, bound, far_desc);
  return res;
}

/// Watering spans in a long run, and watchdog de-energization on a bus fault.
inline CriterionResult criterion_valve_timing() {
  CriterionResult res{5, "valve timing and NC safety", false, {}};
  const sim::Scenario sc = sim::Scenario::defaults();
  sim::Simulation s(sc);
  std::vector<SimTime> spans;
  SimTime run_len = 0;
  while (!s.finished()) {
    s.step();
    if (s.slave().applied().irrigation_valve) {
      run_len += s.tick();
    } else if (run_len > 0) {
      spans.push_back(run_len);
      run_len = 0;
    }
  }
  if (run_len > 0) spans.push_back(run_len);
  SimTime worst_dev = 0;
  for (SimTime span : spans) worst_dev = std::max(worst_dev, std::abs(span - sc.control.irrigation_duration));
  const bool timing_ok = !spans.empty() && worst_dev <= sc.control.scan_period;

  // Manual mode with pump, feed and irrigation energized, then a 10 s bus fault.
  sim::Scenario bf = detail::short_scenario(200);
  const SimTime fault_at = 100;
  bf.faults.push_back({fault_at, sim::FaultType::BusFault, 10});
  bf.commands.push_back({0, plc::Command::plc(plc::Command::Kind::Manual, "schedule")});
  for (auto a : {plc::Actuator::Pump, plc::Actuator::FeedValve, plc::Actuator::IrrigationValve})
    bf.commands.push_back({1, plc::Command::set(a, true, "schedule")});
  sim::Simulation b(bf);
  bool energized_before = false;
  std::optional<SimTime> all_off_at;
  bool stayed_off = true;
  const SimTime limit = fault_at + sc.control.watchdog_timeout + bf.tick;
  while (!b.finished()) {
    const SimTime t = b.now();
    b.step();
    const auto& a = b.slave().applied();
    const bool any = a.pump || a.feed_valve || a.irrigation_valve;
    if (t == fault_at - 1) energized_before = a.pump && a.feed_valve && a.irrigation_valve;
    if (t >= fault_at && !any && !all_off_at) all_off_at = t;
    if (all_off_at && t < fault_at + 10 && any) stayed_off = false;
  }
  const bool wd_ok = energized_before && all_off_at && *all_off_at <= limit && stayed_off;
  res.pass = timing_ok && wd_ok;
  res.detail = fmt::format("{} watering episodes, worst |span - {} s| = {} s; bus fault at t={} -> all off at t={} "
                           "(deadline t={}){}",
                           spans.size(), sc.control.irrigation_duration, worst_dev, fault_at,
                           all_off_at ? fmt::format("{}", *all_off_at) : std::string("never"), limit,
                           energized_before ? "" : ", outputs were not energized before the fault");
  return res;
}

/// Level inconsistency, pump dry-run protection and overflow response.
inline CriterionResult criterion_fault_detection() {
  CriterionResult res{6, "fault detection", false, {}};
  std::vector<std::string> notes;
  bool ok = true;

  {  // (true, false, true) on the buffer flags
    sim::Scenario sc = detail::short_scenario(120);
    sc.buffer.initial = 280.0;
    sc.faults.push_back({50, sim::FaultType::LevelStuck, 0, 0, env::TankId::Buffer, plc::LevelMark::Middle, false});
    sim::Simulation s(sc);
    std::optional<SimTime> raised;
    while (!s.finished()) {
      const SimTime t = s.now();
      s.step();
      if (!raised && s.master().state().has_fault(plc::FaultKind::LevelInconsistencyBuffer)) raised = t;
    }
    const bool pass = raised && *raised == 50;
    ok = ok && pass;
    notes.push_back(fmt::format("flags (T,F,T) injected at t=50, LevelInconsistency at t={}",
                                raised ? fmt::format("{}", *raised) : std::string("never")));
  }
  {  // manual pump-on with the buffer below min
    sim::Scenario sc = detail::short_scenario(60);
    sc.buffer.initial = 30.0;
    sc.initial_actuation = plc::Actuation::Manual;
    sim::Simulation s(sc);
    s.run_until(10);
    auto f = s.submit(plc::Command::set(plc::Actuator::Pump, true, "verify"));
    s.step();
    const auto out = f.get();
    s.run_until(20);
    const bool pass = !out.accepted && out.reason == "PumpDryRun" &&
                      s.master().state().has_fault(plc::FaultKind::PumpDryRun) && !s.master().output().pump();
    ok = ok && pass && !s.slave().applied().pump;
    notes.push_back(fmt::format("manual pump-on below min -> {}", out.accepted ? "accepted" : "rejected(" + out.reason + ")"));
  }
  {  // automatic filling drains the buffer below min
    sim::Scenario sc = detail::short_scenario(600);
    sc.buffer.initial = 70.0;
    sc.upper.initial = 10.0;
    sim::Simulation s(sc);
    bool filled = false, unsafe = false;
    std::optional<SimTime> stopped;
    while (!s.finished()) {
      const SimTime t = s.now();
      s.step();
      filled = filled || s.master().state().pump == plc::PumpPhase::Filling;
      if (!s.buffer_flags().min && s.master().output().pump()) unsafe = true;
      if (!s.buffer_flags().min && s.slave().applied().pump && s.buffer().volume < sc.buffer.thresholds.min - 1.0) unsafe = true;
      if (!stopped && filled && s.master().state().has_fault(plc::FaultKind::PumpDryRun)) stopped = t;
    }
    const bool pass = filled && stopped && !unsafe;
    ok = ok && pass;
    notes.push_back(fmt::format("auto fill protective stop at t={}",
                                stopped ? fmt::format("{}", *stopped) : std::string("never")));
  }
  {  // float switch jammed open: buffer reaches max while still demanding fill
    sim::Scenario sc = detail::short_scenario(600);
    sc.buffer.initial = 260.0;
    sc.faults.push_back({0, sim::FaultType::FloatStuck, 0});
    sim::Simulation s(sc);
    std::optional<SimTime> max_seen, closed;
    while (!s.finished()) {
      const SimTime t = s.now();
      s.step();
      if (!max_seen && s.buffer_flags().max) max_seen = t;
      if (!closed && s.master().output().mains_close()) closed = t;
    }
    const bool pass = max_seen && closed && *closed - *max_seen <= sc.control.scan_period &&
                      s.master().state().has_fault(plc::FaultKind::OverflowRisk);
    ok = ok && pass;
    notes.push_back(fmt::format("buffer max at t={}, mains_close energized at t={}",
                                max_seen ? fmt::format("{}", *max_seen) : std::string("never"),
                                closed ? fmt::format("{}", *closed) : std::string("never")));
  }
  res.pass = ok;
  for (std::size_t i = 0; i < notes.size(); ++i) res.detail += (i ? "; " : "") + notes[i];
  return res;
}

/// Frame codec laws, the CRC check value and single-bit corruption rejection.
inline CriterionResult criterion_protocol(std::uint64_t seed = 7) {
  CriterionResult res{7, "protocol conformance", false, {}};
  std::mt19937_64 rng(seed);
  auto random_message = [&] {
    bus::GwMessage m;
    m.version = static_cast<std::uint8_t>(rng());
    m.seq = static_cast<std::uint16_t>(rng());
    m.type = static_cast<bus::MsgType>(1 + rng() % 3);
    const std::size_t len = rng() % 4 == 0 ? 0 : rng() % (bus::kMaxPayload + 1);
    m.payload.resize(len);
    for (auto& b : m.payload) b = static_cast<std::uint8_t>(rng());
    return m;
  };
  int roundtrip_fail = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = random_message();
    const auto bytes = bus::encode_frame(m);
    const auto d = bus::decode_frame(bytes);
    if (!d.ok() || !(*d.message == m) || bytes.size() != bus::kFrameOverhead + m.payload.size()) ++roundtrip_fail;
  }

  const std::vector<std::uint8_t> check{'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  const std::uint16_t table = bus::crc16_ccitt_false(check);
  const std::uint16_t bitwise = oracle::crc16_bitwise(check);

  std::size_t flips = 0, accepted_corrupt = 0, surfaced = 0;
  for (int i = 0; i < 60; ++i) {
    bus::GwMessage m = random_message();
    m.payload.resize(std::min<std::size_t>(m.payload.size(), 64));
    if (i % 2 == 0) {
      m.type = bus::MsgType::TelemetryBlock;
      m.version = bus::kProtocolVersion;
      m.payload.resize(6 * (1 + rng() % 8));
      for (std::size_t k = 0; k < m.payload.size(); k += 6) {
        m.payload[k + 1] = static_cast<std::uint8_t>(1 + rng() % 8);
      }
    }
    const auto bytes = bus::encode_frame(m);
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      auto bad = bytes;
      bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++flips;
      if (bus::decode_frame(bad).ok()) ++accepted_corrupt;
      bus::MasterEndpoint master;
      if (master.on_frame(bad).block) ++surfaced;
    }
  }
  res.pass = roundtrip_fail == 0 && table == 0x29B1 && bitwise == 0x29B1 && accepted_corrupt == 0 && surfaced == 0;
  res.detail = fmt::format("10000 round-trips, {} failures; CRC(\"123456789\") = 0x{:04X} (bitwise oracle 0x{:04X}); "
                           "{} single-bit flips, {} accepted, {} surfaced to the PLC",
                           roundtrip_fail, table, bitwise, flips, accepted_corrupt, surfaced);
  return res;
}

/// Recent-event window, unauthenticated access and login throttling, in-process.
inline CriterionResult criterion_events_auth() {
  CriterionResult res{8, "events and auth", false, {}};
  sim::Scenario sc = detail::short_scenario(2 * kDay);
  for (auto& z : sc.zones) z.tension = 70.0;
  sim::Simulation s(sc);
  ops::UserStore users;
  users.add(ops::UserRecord::create("operator", "greenhouse", 1000));
  ops::Authenticator auth(users);
  ops::Service svc(s, auth);
  while (s.event_count() < 11 && !s.finished()) s.step();
  s.publish();

  const auto login = svc.dispatch({"POST", "/api/login", {}, R"({"user":"operator","password":"greenhouse"})", ""});
  const std::string token = login.status == 200 ? login.json_body()["token"].get<std::string>() : "";
  const std::string bearer = "Bearer " + token;
  const auto ev = svc.dispatch({"GET", "/api/events", {}, "", bearer});
  bool events_ok = ev.status == 200;
  std::size_t count = 0;
  if (events_ok) {
    const auto list = ev.json_body()["events"];
    count = list.size();
    const auto& all = s.events();
    events_ok = count == 10;
    for (std::size_t i = 0; events_ok && i < count; ++i) {
      const Event& expect = all[all.size() - 1 - i];
      events_ok = list[i]["seq"].get<std::uint64_t>() == expect.seq &&
                  list[i]["timestamp"].get<std::string>() == s.calendar().iso(expect.timestamp);
    }
  }

  const std::vector<ops::Request> guarded{
      {"GET", "/api/status", {}, "", ""},
      {"GET", "/api/events", {}, "", ""},
      {"POST", "/api/command", {}, R"({"target":"plc","action":"run"})", ""},
      {"GET", "/api/params", {}, "", ""},
      {"PUT", "/api/params", {}, R"({"irrigation_duration":600})", ""},
      {"GET", "/api/export", {}, "", ""},
      {"POST", "/api/sim", {}, R"({"action":"pause"})", ""},
  };
  int denied = 0, total = 0;
  const std::uint64_t before = s.event_count();
  for (auto r : guarded) {
    for (const std::string& authz : std::vector<std::string>{"", "Bearer ", "Bearer 00000000000000000000000000000000", token}) {
      r.authorization = authz;
      ++total;
      if (svc.dispatch(r).status == 401) ++denied;
    }
  }
  const bool nothing_applied = s.event_count() == before && s.master().params().irrigation_duration == 300 && !svc.paused();

  int throttled_at = 0;
  for (int i = 1; i <= 6; ++i) {
    const auto r = svc.dispatch({"POST", "/api/login", {}, R"({"user":"operator","password":"wrong"})", ""});
    if (r.status == 429 && throttled_at == 0) throttled_at = i;
  }
  res.pass = login.status == 200 && events_ok && denied == total && nothing_applied && throttled_at == 6;
  res.detail = fmt::format("{} events logged, default window returned {} newest-first ({}); {}/{} unauthenticated "
                           "calls denied; first throttled login failure: #{}",
                           s.event_count(), count, events_ok ? "ok" : "WRONG", denied, total, throttled_at);
  return res;
}

/// Per-tick water balance over the default run and over stressed hydraulics.
inline CriterionResult criterion_mass_conservation() {
  CriterionResult res{9, "mass conservation", false, {}};
  std::vector<sim::Scenario> runs;
  runs.push_back(sim::Scenario::defaults());
  {
    sim::Scenario sc = detail::short_scenario(2 * kDay);
    sc.buffer.initial = 260.0;
    sc.faults.push_back({0, sim::FaultType::FloatStuck, 0});
    runs.push_back(sc);
  }
  {
    sim::Scenario sc = detail::short_scenario(kDay);
    sc.initial_actuation = plc::Actuation::Manual;
    sc.upper.initial = 190.0;
    sc.faults.push_back({3 * kHour, sim::FaultType::FloatStuck, 6 * kHour});
    for (auto a : {plc::Actuator::Pump, plc::Actuator::FeedValve})
      sc.commands.push_back({0, plc::Command::set(a, true, "schedule")});
    runs.push_back(sc);
  }
  double worst = 0.0, kernel_worst = 0.0;
  std::uint64_t ticks = 0;
  double overflow = 0.0;
  for (const auto& sc : runs) {
    sim::Simulation s(sc);
    detail::MassAudit audit;
    while (!s.finished()) {
      audit.before(s);
      s.step();
      audit.after(s);
      overflow += s.last_hydraulics().overflow;
      ++ticks;
    }
    worst = std::max(worst, audit.worst());
    kernel_worst = std::max(kernel_worst, s.max_mass_residual());
  }
  res.pass = worst <= 1e-9 && kernel_worst <= 1e-9;
  res.detail = fmt::format("{} ticks over {} runs ({:.1f} L overflowed), worst residual {:.3e} L (limit 1e-9)", ticks,
                           runs.size(), overflow, std::max(worst, kernel_worst));
  return res;
}

struct AcceptanceCriterion {
  int id;
  std::function<CriterionResult()> run;
};

inline std::vector<AcceptanceCriterion> acceptance_criteria(const std::filesystem::path& workdir) {
  return {
      {1, [] { return criterion_moisture_variability(); }},
      {2, [] { return criterion_rollup_oracle(); }},
      {3, [workdir] { return criterion_determinism(workdir); }},
      {4, [] { return criterion_mesh_delivery(); }},
      {5, [] { return criterion_valve_timing(); }},
      {6, [] { return criterion_fault_detection(); }},
      {7, [] { return criterion_protocol(); }},
      {8, [] { return criterion_events_auth(); }},
      {9, [] { return criterion_mass_conservation(); }},
  };
}

}  // namespace ghsim::verify
