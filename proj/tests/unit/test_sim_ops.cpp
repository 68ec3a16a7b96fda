#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "ghsim/opsvc/auth.hpp"
#include "ghsim/opsvc/http.hpp"
#include "ghsim/opsvc/service.hpp"
#include "ghsim/simkernel/runner.hpp"
#include "ghsim/simkernel/scenario.hpp"
#include "ghsim/simkernel/world.hpp"

using namespace ghsim;
using nlohmann::json;

namespace {

std::string scenario_path(const char* name) { return std::string(GHSIM_SOURCE_DIR) + "/scenarios/" + name; }

sim::Scenario short_run(SimTime duration) {
  sim::Scenario s = sim::Scenario::defaults();
  s.duration = duration;
  s.commands.clear();
  s.initial_mode = plc::Mode::Run;
  for (auto& z : s.zones) z.tension = 70;
  return s;
}

int scenario_error_line(const std::string& text) {
  try {
    sim::parse_scenario(text);
  } catch (const sim::ScenarioError& e) {
    return e.line();
  }
  return -1;
}

std::string scenario_error_field(const std::string& text) {
  try {
    sim::parse_scenario(text);
  } catch (const sim::ScenarioError& e) {
    return e.field();
  }
  return "";
}

// Fake wall clock for the authenticator.
struct ManualClock {
  std::chrono::system_clock::time_point t{std::chrono::seconds(1'600'000'000)};
  ops::Authenticator::Clock fn() {
    return [this] { return t; };
  }
};

ops::UserStore one_user() {
  ops::UserStore u;
  u.add(ops::UserRecord::create("op", "secret", 1000));
  return u;
}

}  // namespace

TEST(Scenario, DefaultFileEqualsBuiltInDefaults) {
  EXPECT_EQ(sim::load_scenario(scenario_path("default.scenario")), sim::Scenario::defaults());
}

TEST(Scenario, FaultTourLoads) {
  const auto s = sim::load_scenario(scenario_path("faults.scenario"));
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.duration, 2 * kDay);
  ASSERT_EQ(s.faults.size(), 5u);
  EXPECT_EQ(s.faults[0].type, sim::FaultType::BusFault);
  EXPECT_EQ(s.initial_mode, plc::Mode::Run);
  ASSERT_EQ(s.commands.size(), 3u);
  EXPECT_EQ(s.commands[1].command.params.irrigation_duration, 600);
}

TEST(Scenario, MissingKeysKeepDefaults) {
  const auto s = sim::parse_scenario("seed: 3\nduration: 36h\n");
  EXPECT_EQ(s.seed, 3u);
  EXPECT_EQ(s.duration, 36 * kHour);
  EXPECT_EQ(s.tick, 1);
  EXPECT_EQ(s.nodes, sim::Scenario::defaults().nodes);
  EXPECT_EQ(sim::parse_scenario(""), sim::Scenario::defaults());
}

TEST(Scenario, ErrorsNameLineAndField) {
  EXPECT_EQ(scenario_error_line("seed: 1\nbogus: 2\n"), 2);
  EXPECT_EQ(scenario_error_field("seed: 1\nbogus: 2\n"), "bogus");
  EXPECT_EQ(scenario_error_line("seed: 1\nmesh:\n  p_los: 0.1\n"), 3);
  EXPECT_EQ(scenario_error_field("seed: 1\nmesh:\n  p_los: 0.1\n"), "mesh.p_los");
  EXPECT_EQ(scenario_error_field("seed: abc\n"), "seed");
  EXPECT_EQ(scenario_error_field("nodes: []\n"), "nodes");
  EXPECT_EQ(scenario_error_field("tick: 0\n"), "tick");
  EXPECT_EQ(scenario_error_field("control:\n  dry_limit: 20\n"), "control.wet_limit");
  EXPECT_EQ(scenario_error_field("commands:\n  - {at: 1h, command: dance}\n"), "commands.command");
  EXPECT_EQ(scenario_error_field("faults:\n  - {at: 1h, kind: node-silent, node: 99}\n"), "faults.node");
  EXPECT_GT(scenario_error_line("seed: [1,\n"), 0);
  EXPECT_THROW(sim::load_scenario("/nonexistent/file.scenario"), sim::ScenarioError);
}

TEST(Scenario, CommandForms) {
  const auto s = sim::parse_scenario(
      "commands:\n"
      "  - {at: 10, command: manual}\n"
      "  - {at: 20, command: set, actuator: lamp, on: true}\n"
      "  - {at: 30, command: params, params: {dry_limit: 70, pump_start: middle}}\n");
  ASSERT_EQ(s.commands.size(), 3u);
  EXPECT_EQ(s.commands[0].command.kind, plc::Command::Kind::Manual);
  EXPECT_EQ(s.commands[1].command, plc::Command::set(plc::Actuator::Lamp, true, "schedule"));
  EXPECT_EQ(s.commands[2].command.params.dry_limit, 70.0);
  EXPECT_EQ(s.commands[2].command.params.pump_start, plc::LevelMark::Middle);
}

TEST(Simulation, SameSeedSameLogDifferentSeedDifferentData) {
  auto run = [](std::uint64_t seed) {
    auto sc = short_run(6 * kHour);
    sc.seed = seed;
    sim::Simulation s(sc);
    s.run_to_end();
    const gw::ExportQuery all{std::numeric_limits<SimTime>::min(), std::numeric_limits<SimTime>::max(), {}, {}};
    return std::pair{s.event_log_text(), s.gateway().export_csv(all)};
  };
  const auto a = run(42);
  const auto b = run(42);
  const auto c = run(43);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.second, c.second);
}

TEST(Simulation, EventsAreOrderedAndSequenced) {
  sim::Simulation s(short_run(2 * kHour));
  s.run_to_end();
  const auto& ev = s.events();
  ASSERT_FALSE(ev.empty());
  for (std::size_t i = 1; i < ev.size(); ++i) {
    ASSERT_EQ(ev[i].seq, ev[i - 1].seq + 1);
    ASSERT_LE(ev[i - 1].timestamp, ev[i].timestamp);
  }
  const auto recent = s.recent_events(3);
  ASSERT_EQ(recent.size(), 3u);
  EXPECT_EQ(recent[0], ev.back());
  EXPECT_GT(recent[0].seq, recent[1].seq);
}

TEST(Simulation, BusFaultTripsSlaveWatchdogAfterThreeSeconds) {
  auto sc = short_run(kHour);
  sc.faults.push_back(sim::FaultSpec{600, sim::FaultType::BusFault, 30});
  sim::Simulation s(sc);
  s.run_to_end();
  SimTime tripped = -1, timeout = -1;
  for (const auto& e : s.events()) {
    if (tripped < 0 && e.source == "slave" && e.message.find("watchdog expired") != std::string::npos) tripped = e.timestamp;
    if (timeout < 0 && e.message == "fault raised: BusTimeout") timeout = e.timestamp;
  }
  EXPECT_EQ(tripped, 603);
  EXPECT_GT(timeout, 600);
  EXPECT_LE(timeout, 605);
}

TEST(Simulation, WaterIsConservedAcrossAWateringDay) {
  sim::Simulation s(short_run(kDay));
  s.run_to_end();
  EXPECT_LT(s.max_mass_residual(), 1e-9);
  bool watered = false;
  for (const auto& e : s.events()) watered |= e.message.find("Idle -> Watering") != std::string::npos;
  EXPECT_TRUE(watered);
}

TEST(Simulation, SubmittedCommandsResolveOnNextStep) {
  sim::Simulation s(sim::Scenario::defaults());
  auto f = s.submit(plc::Command::plc(plc::Command::Kind::Run));
  EXPECT_EQ(f.wait_for(std::chrono::seconds(0)), std::future_status::timeout);
  s.step();
  ASSERT_EQ(f.wait_for(std::chrono::seconds(0)), std::future_status::ready);
  EXPECT_TRUE(f.get().accepted);
  EXPECT_EQ(s.master().state().mode, plc::Mode::Run);
}

TEST(Runner, PacingDoesNotChangeResults) {
  auto sc = short_run(3 * kHour);
  sim::Simulation headless(sc);
  headless.run_to_end();

  sim::Simulation paced(sc);
  {
    sim::Runner r(paced, true);
    r.start();
    r.set_speed(50000);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    r.pause();
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    r.resume();
    r.set_speed(0);
    while (!paced.snapshot() || paced.snapshot()->now < sc.duration) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    r.stop();
  }
  EXPECT_EQ(paced.event_log_text(), headless.event_log_text());
}

TEST(Runner, PauseHoldsTheClockAndStillServesTasks) {
  sim::Simulation s(short_run(kDay));
  sim::Runner r(s, true);
  r.start();
  r.pause();
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  const SimTime held = s.snapshot()->now;
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_EQ(s.snapshot()->now, held);
  EXPECT_TRUE(r.paused());
  std::promise<int> p;
  auto f = p.get_future();
  s.post_task([&] { p.set_value(7); });
  ASSERT_EQ(f.wait_for(std::chrono::seconds(2)), std::future_status::ready);
  EXPECT_EQ(f.get(), 7);
  r.resume();
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_GT(s.snapshot()->now, held);
  r.stop();
  EXPECT_THROW(r.set_speed(-1), std::invalid_argument);
}

TEST(Auth, Pbkdf2KnownVector) {
  // PBKDF2-HMAC-SHA256("passwd", "salt", 1), first 32 bytes.
  const std::vector<unsigned char> salt{'s', 'a', 'l', 't'};
  EXPECT_EQ(ops::to_hex(ops::pbkdf2_sha256("passwd", salt, 1)),
            "55ac046e56e3089fec1691c22544b605f94185216dde0465e68b9d57c20dacbc");
}

TEST(Auth, UserRecordLineRoundTrip) {
  const auto r = ops::UserRecord::create("alice", "pw", 1000);
  EXPECT_TRUE(r.verify("pw"));
  EXPECT_FALSE(r.verify("pW"));
  const auto back = ops::UserRecord::from_line(r.to_line());
  ASSERT_TRUE(back);
  EXPECT_TRUE(back->verify("pw"));
  EXPECT_EQ(back->salt.size(), 16u);
  for (const char* bad : {"", "a:b:c", "a:x:00:00", "a:10:zz:00", ":10:00:00", "a:0:00:00"}) {
    EXPECT_FALSE(ops::UserRecord::from_line(bad)) << bad;
  }
  EXPECT_THROW(ops::UserRecord::create("a:b", "pw"), std::invalid_argument);
}

TEST(Auth, SixthFailureInAMinuteIsThrottled) {
  ManualClock clock;
  ops::Authenticator a(one_user(), clock.fn());
  for (int i = 0; i < 5; ++i) ASSERT_EQ(a.login("op", "wrong").status, ops::LoginStatus::BadCredentials);
  EXPECT_EQ(a.login("op", "secret").status, ops::LoginStatus::Throttled);
  clock.t += std::chrono::seconds(60);
  EXPECT_EQ(a.login("op", "secret").status, ops::LoginStatus::Ok);
  // Throttling is per user.
  for (int i = 0; i < 6; ++i) a.login("ghost", "x");
  EXPECT_EQ(a.login("op", "secret").status, ops::LoginStatus::Ok);
}

TEST(Auth, TokensExpireAndLogOut) {
  ManualClock clock;
  ops::Authenticator a(one_user(), clock.fn());
  const auto r = a.login("op", "secret");
  ASSERT_EQ(r.status, ops::LoginStatus::Ok);
  EXPECT_EQ(r.token.size(), 32u);
  EXPECT_TRUE(a.authorize(r.token));
  EXPECT_FALSE(a.authorize(r.token + "0"));
  clock.t += std::chrono::hours(24) - std::chrono::seconds(1);
  EXPECT_TRUE(a.authorize(r.token));
  clock.t += std::chrono::seconds(1);
  EXPECT_FALSE(a.authorize(r.token));
  const auto r2 = a.login("op", "secret");
  a.logout(r2.token);
  EXPECT_FALSE(a.authorize(r2.token));
}

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() : sim_(short_run(2 * kHour)), auth_(one_user()), svc_(sim_, auth_) {
    sim_.set_auto_publish(true);
    sim_.run_until(kHour);
    sim_.publish();
    token_ = svc_.dispatch({"POST", "/api/login", {}, R"({"user":"op","password":"secret"})", ""}).json_body()["token"];
  }

  ops::Response call(std::string method, std::string path, std::string body = "",
                     std::map<std::string, std::string> query = {}) {
    return svc_.dispatch({std::move(method), std::move(path), std::move(query), std::move(body), "Bearer " + token_});
  }

  sim::Simulation sim_;
  ops::Authenticator auth_;
  ops::Service svc_;
  std::string token_;
};

TEST_F(ServiceTest, EveryProtectedRouteNeedsAValidToken) {
  const std::vector<std::pair<std::string, std::string>> routes{
      {"GET", "/api/status"}, {"GET", "/api/events"},  {"POST", "/api/command"}, {"GET", "/api/params"},
      {"PUT", "/api/params"}, {"GET", "/api/export"}, {"POST", "/api/sim"}};
  for (const auto& [m, p] : routes) {
    for (const auto& header : std::vector<std::string>{"", "Bearer ", "Bearer nope", "Basic " + token_, token_}) {
      const auto r = svc_.dispatch({m, p, {}, "{}", header});
      EXPECT_EQ(r.status, 401) << m << " " << p << " [" << header << "]";
    }
  }
  EXPECT_EQ(call("GET", "/api/nothing").status, 404);
  EXPECT_EQ(call("DELETE", "/api/status").status, 405);
}

TEST_F(ServiceTest, LoginOutcomes) {
  EXPECT_FALSE(token_.empty());
  EXPECT_EQ(svc_.dispatch({"POST", "/api/login", {}, R"({"user":"op","password":"x"})", ""}).status, 401);
  EXPECT_EQ(svc_.dispatch({"POST", "/api/login", {}, R"({"user":"op"})", ""}).status, 400);
  EXPECT_EQ(svc_.dispatch({"POST", "/api/login", {}, "{not json", ""}).status, 400);
  for (int i = 0; i < 4; ++i) svc_.dispatch({"POST", "/api/login", {}, R"({"user":"op","password":"x"})", ""});
  EXPECT_EQ(svc_.dispatch({"POST", "/api/login", {}, R"({"user":"op","password":"secret"})", ""}).status, 429);
}

TEST_F(ServiceTest, StatusCarriesPlantAndControlState) {
  const auto r = call("GET", "/api/status");
  ASSERT_EQ(r.status, 200);
  const json j = r.json_body();
  EXPECT_EQ(j["plc"]["mode"], "Run");
  EXPECT_EQ(j["nodes"].size(), 6u);
  EXPECT_TRUE(j.contains("scene"));
  EXPECT_FALSE(j["readings"].empty());
}

TEST_F(ServiceTest, EventsNewestFirstWithLimit) {
  auto r = call("GET", "/api/events");
  ASSERT_EQ(r.status, 200);
  auto list = r.json_body()["events"];
  ASSERT_EQ(list.size(), std::min<std::size_t>(10, sim_.event_count()));
  for (std::size_t i = 1; i < list.size(); ++i) EXPECT_GT(list[i - 1]["seq"], list[i]["seq"]);
  EXPECT_EQ(call("GET", "/api/events", "", {{"limit", "3"}}).json_body()["events"].size(), 3u);
  EXPECT_TRUE(call("GET", "/api/events", "", {{"limit", "0"}}).json_body()["events"].empty());
  EXPECT_EQ(call("GET", "/api/events", "", {{"limit", "-1"}}).status, 400);
  EXPECT_EQ(call("GET", "/api/events", "", {{"limit", "x"}}).status, 400);
}

TEST_F(ServiceTest, CommandsReportAcceptanceAndReasons) {
  auto r = call("POST", "/api/command", R"({"target":"actuator","action":"on","arguments":{"actuator":"lamp"}})");
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.json_body()["reason"], "ModeIsAuto");
  r = call("POST", "/api/command", R"({"target":"plc","action":"manual"})");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.json_body()["accepted"], true);
  r = call("POST", "/api/command", R"({"target":"actuator","action":"on","arguments":{"actuator":"lamp"}})");
  EXPECT_EQ(r.status, 200);
  EXPECT_TRUE(sim_.master().output().lamp());
  EXPECT_EQ(call("POST", "/api/command", R"({"target":"valve"})").status, 400);
  EXPECT_EQ(call("POST", "/api/command", R"({"target":"plc","action":"explode"})").status, 400);
  EXPECT_EQ(call("POST", "/api/command", R"({"target":"actuator","action":"on","arguments":{"actuator":"x"}})").status, 400);
  EXPECT_EQ(call("POST", "/api/command", "{").status, 400);
  // The command left an event naming its origin.
  bool seen = false;
  for (const auto& e : sim_.recent_events(50)) seen |= e.message.find("from api:op") != std::string::npos;
  EXPECT_TRUE(seen);
}

TEST_F(ServiceTest, ParamsValidation) {
  auto r = call("GET", "/api/params");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.json_body()["dry_limit"], 60.0);
  r = call("PUT", "/api/params", R"({"wet_limit": 70})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.json_body()["field"], "wet_limit");
  r = call("PUT", "/api/params", R"({"lamp_off_solar": 5})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.json_body()["field"], "lamp_off_solar");
  r = call("PUT", "/api/params", R"({"bogus": 1})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.json_body()["field"], "bogus");
  EXPECT_EQ(call("PUT", "/api/params", R"({"lockout": 1.5})").status, 400);
  r = call("PUT", "/api/params", R"({"dry_limit": 70, "pump_start": "middle"})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.json_body()["dry_limit"], 70.0);
  EXPECT_EQ(r.json_body()["pump_start"], "middle");
  EXPECT_EQ(sim_.master().params().dry_limit, 70.0);
  r = call("POST", "/api/command", R"({"target":"params","arguments":{"irrigation_duration": 0}})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.json_body()["field"], "irrigation_duration");
}

TEST_F(ServiceTest, ExportCsvAndRangeChecks) {
  auto r = call("GET", "/api/export", "", {{"node", "1"}, {"sensor", "SoilMoisture"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "text/csv");
  const auto rows = gw::parse_csv(r.body, sim_.calendar());
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) {
    EXPECT_EQ(row.node_id, 1);
    EXPECT_EQ(row.kind, mesh::SensorKind::SoilMoisture);
  }
  r = call("GET", "/api/export", "", {{"from", "2010-05-17T00:30:00Z"}, {"to", "2010-05-17T00:30:00Z"}});
  ASSERT_EQ(r.status, 200);
  for (const auto& row : gw::parse_csv(r.body, sim_.calendar())) EXPECT_EQ(row.timestamp, 1800);
  EXPECT_EQ(call("GET", "/api/export", "", {{"from", "2010-05-18T00:00:00Z"}, {"to", "2010-05-17T00:00:00Z"}}).status, 400);
  EXPECT_EQ(call("GET", "/api/export", "", {{"from", "yesterday"}}).status, 400);
  EXPECT_EQ(call("GET", "/api/export", "", {{"sensor", "Rain"}}).status, 400);
}

TEST_F(ServiceTest, SimControl) {
  auto r = call("POST", "/api/sim", R"({"action":"speed","value":60})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.json_body()["speed"], 60.0);
  EXPECT_EQ(call("POST", "/api/sim", R"({"action":"speed","value":-1})").status, 400);
  r = call("POST", "/api/sim", R"({"action":"pause"})");
  EXPECT_EQ(r.json_body()["paused"], true);
  EXPECT_TRUE(svc_.paused());
  r = call("POST", "/api/command", R"({"target":"sim","action":"resume"})");
  EXPECT_EQ(r.json_body()["paused"], false);
  EXPECT_EQ(call("POST", "/api/sim", R"({"action":"rewind"})").status, 400);
  EXPECT_EQ(call("POST", "/api/sim", R"({"action":"poll"})").status, 200);
}

// End to end over a real socket with a background runner.
TEST(Http, LoopbackRoundTrip) {
  sim::Simulation s(short_run(kDay));
  ops::Authenticator auth(one_user());
  sim::Runner runner(s, true);
  ops::Service svc(s, auth, &runner);
  httplib::Server server;
  ops::mount(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  runner.start();

  httplib::Client cli("127.0.0.1", port);
  auto login = cli.Post("/api/login", R"({"user":"op","password":"secret"})", "application/json");
  ASSERT_TRUE(login);
  ASSERT_EQ(login->status, 200);
  const std::string token = json::parse(login->body)["token"];
  const httplib::Headers auth_header{{"Authorization", "Bearer " + token}};

  auto unauth = cli.Get("/api/status");
  ASSERT_TRUE(unauth);
  EXPECT_EQ(unauth->status, 401);

  auto status = cli.Get("/api/status", auth_header);
  ASSERT_TRUE(status);
  EXPECT_EQ(status->status, 200);

  auto cmd = cli.Post("/api/command", auth_header, R"({"target":"plc","action":"stop"})", "application/json");
  ASSERT_TRUE(cmd);
  EXPECT_EQ(cmd->status, 200);

  auto events = cli.Get("/api/events?limit=2", auth_header);
  ASSERT_TRUE(events);
  EXPECT_EQ(json::parse(events->body)["events"].size(), 2u);

  auto csv = cli.Get("/api/export?sensor=SolarRadiation", auth_header);
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");

  server.stop();
  th.join();
  runner.stop();
  EXPECT_EQ(s.master().state().mode, plc::Mode::Stop);
}
