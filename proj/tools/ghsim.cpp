// ghsim command-line front end: run, serve, export, verify, check, passwd.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "ghsim/gateway/csv_export.hpp"
#include "ghsim/gateway/series_store.hpp"
#include "ghsim/opsvc/auth.hpp"
#include "ghsim/opsvc/http.hpp"
#include "ghsim/opsvc/service.hpp"
#include "ghsim/simkernel/runner.hpp"
#include "ghsim/simkernel/scenario.hpp"
#include "ghsim/simkernel/world.hpp"
#include "ghsim/verify/acceptance.hpp"

namespace fs = std::filesystem;
using namespace ghsim;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

sim::Scenario load_or_default(const std::string& path) {
  return path.empty() || path == "default" ? sim::Scenario::defaults() : sim::load_scenario(path);
}

int cmd_run(const std::string& scenario_path, bool headless, const std::string& until, const std::string& out_dir,
            std::optional<double> speed) {
  sim::Scenario sc = load_or_default(scenario_path);
  if (!until.empty()) sc.duration = parse_duration(until);
  if (speed) sc.speed = *speed;
  fs::create_directories(out_dir);
  sim::Simulation s(sc);
  s.set_event_log_file((fs::path(out_dir) / "events.log").string());
  const auto outbox = fs::path(out_dir) / "outbox.jsonl";
  std::ofstream(outbox, std::ios::trunc).close();
  s.gateway().set_outbox_file(outbox.string());

  if (headless) {
    s.run_to_end();
  } else {
    sim::Runner runner(s, true);
    runner.start();
    std::size_t shown = 0;
    while (true) {
      const auto snap = s.snapshot();
      const std::size_t n = s.event_count();
      if (n > shown) {
        const auto recent = s.recent_events(n - shown);
        for (auto it = recent.rbegin(); it != recent.rend(); ++it) fmt::print("{}\n", format_event_line(s.calendar(), *it));
        shown = n;
      }
      if (snap && snap->now >= sc.duration) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    runner.stop();
  }
  s.flush_event_log();
  s.gateway().roll(s.now());

  const gw::ExportQuery all{std::numeric_limits<SimTime>::min(), std::numeric_limits<SimTime>::max(), {}, {}};
  std::ofstream(fs::path(out_dir) / "export.csv", std::ios::binary | std::ios::trunc) << s.gateway().export_csv(all);
  s.gateway().store().save((fs::path(out_dir) / "store.ghs").string(), s.calendar());

  std::uint64_t emitted = 0;
  for (const auto& [id, st] : s.mesh().stats()) emitted += st.emitted_readings;
  fmt::print("simulated {} .. {}\n", s.calendar().iso(0), s.calendar().iso(s.now()));
  fmt::print("events {}, readings stored {}/{} emitted, notifications {}, max water residual {:.2e} L\n",
             s.event_count(), s.gateway().store().raw().size(), emitted, s.gateway().outbox().size(),
             s.max_mass_residual());
  for (const auto& z : s.zones()) fmt::print("zone {}: tension {:.1f} cbar\n", z.zone_id, z.tension);
  fmt::print("output written to {}\n", out_dir);
  return 0;
}

int cmd_serve(const std::string& scenario_path, const std::string& listen, const std::string& users_path,
              std::optional<double> speed) {
  sim::Scenario sc = load_or_default(scenario_path);
  if (speed) sc.speed = *speed;
  ops::Authenticator auth(ops::UserStore::load(users_path));
  sim::Simulation s(sc);
  sim::Runner runner(s, false);
  ops::Service svc(s, auth, &runner);
  httplib::Server server;
  ops::mount(server, svc);

  std::string host = "127.0.0.1";
  int port = 8080;
  if (const auto colon = listen.rfind(':'); colon != std::string::npos) {
    host = listen.substr(0, colon);
    port = std::stoi(listen.substr(colon + 1));
  } else if (!listen.empty()) {
    port = std::stoi(listen);
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  runner.start();
  fmt::print("serving on http://{}:{} (speed {})\n", host, port, sc.speed);
  std::fflush(stdout);
  const bool ok = server.listen(host, port);
  runner.stop();
  g_server = nullptr;
  if (!ok) {
    fmt::print(stderr, "cannot listen on {}:{}\n", host, port);
    return 1;
  }
  return 0;
}

int cmd_export(const std::string& store_path, const std::string& from, const std::string& to,
               const std::vector<int>& nodes, const std::vector<std::string>& sensors) {
  Calendar cal;
  const gw::SeriesStore store = gw::SeriesStore::load(store_path, &cal);
  gw::ExportQuery q{std::numeric_limits<SimTime>::min(), std::numeric_limits<SimTime>::max(), {}, {}};
  if (!from.empty()) q.from = cal.parse(from);
  if (!to.empty()) q.to = cal.parse(to);
  q.nodes.insert(nodes.begin(), nodes.end());
  for (const auto& name : sensors) {
    const auto k = mesh::kind_from_name(name);
    if (!k) throw std::invalid_argument("unknown sensor '" + name + "'");
    q.kinds.insert(*k);
  }
  std::cout << gw::export_csv(store.raw(), cal, q);
  return 0;
}

int cmd_verify(const std::string& workdir, const std::vector<int>& only) {
  int failed = 0;
  for (const auto& c : verify::acceptance_criteria(workdir)) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto r = c.run();
    fmt::print("{}\n", verify::format_result(r));
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

int cmd_check(const std::string& path) {
  const sim::Scenario sc = sim::load_scenario(path);
  fmt::print("ok: {} nodes, {} zones, {} faults, {} scheduled commands, duration {} s, seed {}\n", sc.nodes.size(),
             sc.zones.size(), sc.faults.size(), sc.commands.size(), sc.duration, sc.seed);
  return 0;
}

int cmd_passwd(const std::string& users_path, const std::string& user, std::string password) {
  if (password.empty()) {
    std::getline(std::cin, password);
  }
  if (password.empty()) throw std::invalid_argument("empty password");
  ops::UserStore store = fs::exists(users_path) ? ops::UserStore::load(users_path) : ops::UserStore{};
  store.add(ops::UserRecord::create(user, password));
  store.save(users_path);
  fmt::print("user '{}' written to {}\n", user, users_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghsim: greenhouse irrigation plant simulator and control stack"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario and write event log, CSV export and store");
  std::string run_scenario, run_until, run_out = "out";
  bool headless = false;
  std::optional<double> run_speed;
  run->add_option("scenario", run_scenario, "Scenario file ('default' for the built-in one)")->required();
  run->add_flag("--headless", headless, "Run as fast as possible without echoing events");
  run->add_option("--until", run_until, "Stop at this sim-time (e.g. 14d, 36h, 900)");
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--speed", run_speed, "Sim-seconds per wall-second (0 = unpaced)");

  auto* serve = app.add_subcommand("serve", "Run a scenario behind the HTTP/JSON operator API");
  std::string serve_scenario, listen = "127.0.0.1:8080", users = "users.txt";
  std::optional<double> serve_speed;
  serve->add_option("scenario", serve_scenario, "Scenario file ('default' for the built-in one)")->required();
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--users", users, "User file written by 'ghsim passwd'");
  serve->add_option("--speed", serve_speed, "Sim-seconds per wall-second (0 = unpaced)");

  auto* exp = app.add_subcommand("export", "Export readings from a store file as CSV");
  std::string store_path, from, to;
  std::vector<int> nodes;
  std::vector<std::string> sensors;
  exp->add_option("store", store_path, "Store file written by 'ghsim run'")->required();
  exp->add_option("--from", from, "Inclusive start, YYYY-MM-DDTHH:MM:SSZ");
  exp->add_option("--to", to, "Inclusive end, YYYY-MM-DDTHH:MM:SSZ");
  exp->add_option("--node", nodes, "Node id filter (repeatable)");
  exp->add_option("--sensor", sensors, "Sensor name filter (repeatable)");

  auto* ver = app.add_subcommand("verify", "Run the acceptance criteria");
  std::string workdir = (fs::temp_directory_path() / "ghsim-verify").string();
  std::vector<int> only;
  ver->add_option("--workdir", workdir, "Scratch directory for determinism runs");
  ver->add_option("--only", only, "Run only these criteria (repeatable)");

  auto* check = app.add_subcommand("check", "Parse and validate a scenario file");
  std::string check_path;
  check->add_option("scenario", check_path)->required();

  auto* passwd = app.add_subcommand("passwd", "Add or replace a user in a user file");
  std::string users_path, user, password;
  passwd->add_option("users", users_path, "User file")->required();
  passwd->add_option("user", user, "User name")->required();
  passwd->add_option("--password", password, "Password (read from stdin when omitted)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_scenario, headless, run_until, run_out, run_speed);
    if (*serve) return cmd_serve(serve_scenario, listen, users, serve_speed);
    if (*exp) return cmd_export(store_path, from, to, nodes, sensors);
    if (*ver) return cmd_verify(workdir, only);
    if (*check) return cmd_check(check_path);
    if (*passwd) return cmd_passwd(users_path, user, password);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
