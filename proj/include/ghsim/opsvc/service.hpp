#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "ghsim/gateway/csv_export.hpp"
#include "ghsim/opsvc/auth.hpp"
#include "ghsim/simkernel/runner.hpp"
#include "ghsim/simkernel/world.hpp"

namespace ghsim::ops {

using nlohmann::json;

/// Transport-neutral request. `authorization` carries the raw header value.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  json json_body() const { return json::parse(body); }
};

inline Response json_response(int status, const json& j) { return Response{status, "application/json", j.dump()}; }
inline Response error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

inline json event_json(const Calendar& cal, const Event& e) {
  return json{{"timestamp", cal.iso(e.timestamp)},
              {"seq", e.seq},
              {"severity", to_string(e.severity)},
              {"source", e.source},
              {"message", e.message}};
}

inline json params_json(const plc::ControlParams& p) {
  return json{{"dry_limit", p.dry_limit},
              {"wet_limit", p.wet_limit},
              {"irrigation_duration", p.irrigation_duration},
              {"lockout", p.lockout},
              {"pump_start", plc::to_string(p.pump_start)},
              {"pump_stop", plc::to_string(p.pump_stop)},
              {"lamp_on_solar", p.lamp_on_solar},
              {"lamp_off_solar", p.lamp_off_solar},
              {"staleness_limit", p.staleness_limit},
              {"watchdog_timeout", p.watchdog_timeout},
              {"scan_period", p.scan_period}};
}

/// Field name of the first problem, or the patch.
inline std::variant<plc::ParamsPatch, std::string> params_patch_from(const json& j) {
  if (!j.is_object()) return std::string("body");
  plc::ParamsPatch p;
  for (const auto& [key, v] : j.items()) {
    auto number = [&](auto& slot) -> bool {
      if (!v.is_number()) return false;
      slot = v.get<typename std::remove_reference_t<decltype(slot)>::value_type>();
      return true;
    };
    auto seconds = [&](std::optional<SimTime>& slot) -> bool {
      if (!v.is_number_integer()) return false;
      slot = v.get<SimTime>();
      return true;
    };
    auto mark = [&](std::optional<plc::LevelMark>& slot) -> bool {
      if (!v.is_string()) return false;
      slot = plc::level_mark_from(v.get<std::string>());
      return slot.has_value();
    };
    bool ok = false;
    if (key == "dry_limit") ok = number(p.dry_limit);
    else if (key == "wet_limit") ok = number(p.wet_limit);
    else if (key == "irrigation_duration") ok = seconds(p.irrigation_duration);
    else if (key == "lockout") ok = seconds(p.lockout);
    else if (key == "pump_start") ok = mark(p.pump_start);
    else if (key == "pump_stop") ok = mark(p.pump_stop);
    else if (key == "lamp_on_solar") ok = number(p.lamp_on_solar);
    else if (key == "lamp_off_solar") ok = number(p.lamp_off_solar);
    else if (key == "staleness_limit") ok = seconds(p.staleness_limit);
    else if (key == "watchdog_timeout") ok = seconds(p.watchdog_timeout);
    if (!ok) return key;
  }
  return p;
}

inline json status_json(const sim::StatusSnapshot& s) {
  json faults = json::array();
  for (const auto& [kind, rec] : s.control.faults) {
    faults.push_back({{"kind", plc::to_string(kind)},
                      {"first_seen", rec.first_seen},
                      {"condition_active", rec.condition_active}});
  }
  json readings = json::array();
  for (const auto& e : s.latest.entries) {
    readings.push_back({{"node_id", e.node_id},
                        {"sensor", mesh::to_string(e.kind)},
                        {"unit", mesh::info(e.kind).unit},
                        {"value", e.value},
                        {"age", e.age}});
  }
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    nodes.push_back({{"id", n.id},
                     {"zone", n.zone},
                     {"battery", n.battery},
                     {"alive", n.alive()},
                     {"neighbors", n.neighbors}});
  }
  auto word = [](const bus::CyclicWord& w) {
    return json{{"byte", w.to_byte()},
                {"pump", w.pump()},
                {"feed_valve", w.feed_valve()},
                {"irrigation_valve", w.irrigation_valve()},
                {"lamp", w.lamp()},
                {"mains_close", w.mains_close()},
                {"watchdog_toggle", w.watchdog_toggle()}};
  };
  const auto& c = s.control;
  json control{{"mode", plc::to_string(c.mode)},
               {"actuation", plc::to_string(c.actuation)},
               {"irrigation", {{"phase", plc::to_string(c.irrigation)}, {"remaining", c.irrigation_remaining}}},
               {"pump", plc::to_string(c.pump)},
               {"faults", faults},
               {"avg_tension", c.last_avg_tension ? json(*c.last_avg_tension) : json(nullptr)}};
  const auto& a = s.applied;
  return json{{"now", s.now},
              {"time", s.time},
              {"plc", control},
              {"params", params_json(s.params)},
              {"output_word", word(s.output)},
              {"input_word", s.input ? word(*s.input) : json(nullptr)},
              {"actuators",
               {{"pump", a.pump},
                {"feed_valve", a.feed_valve},
                {"irrigation_valve", a.irrigation_valve},
                {"lamp", a.lamp},
                {"mains_close", a.mains_close}}},
              {"bus", {{"faulted", s.bus_faulted}, {"watchdog_tripped", s.watchdog_tripped}}},
              {"readings", readings},
              {"nodes", nodes},
              {"event_count", s.event_count},
              {"scene", s.scene()}};
}

/// The operator API. Without a runner the service steps the simulation
/// itself whenever a request must wait for a scan.
class Service {
 public:
  Service(sim::Simulation& sim, Authenticator& auth, sim::Runner* runner = nullptr,
          std::chrono::milliseconds command_wait = std::chrono::milliseconds(5000))
      : sim_(sim), auth_(auth), runner_(runner), wait_(command_wait) {
    if (!runner_) {
      sim_.set_auto_publish(true);
      sim_.publish();
    }
  }

  Response dispatch(const Request& r) {
    try {
      return route(r);
    } catch (const json::exception& e) {
      return error_response(400, std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      return error_response(400, e.what());
    }
  }

  /// Pacing state as seen through the API.
  bool paused() const { return runner_ ? runner_->paused() : paused_; }
  double speed() const { return runner_ ? runner_->speed() : speed_; }

 private:
  Response route(const Request& r) {
    static const std::map<std::string, std::vector<std::string>> kRoutes{
        {"/api/login", {"POST"}},   {"/api/status", {"GET"}},      {"/api/events", {"GET"}},
        {"/api/command", {"POST"}}, {"/api/params", {"GET", "PUT"}}, {"/api/export", {"GET"}},
        {"/api/sim", {"POST"}}};
    const auto it = kRoutes.find(r.path);
    if (it == kRoutes.end()) return error_response(404, "no such route");
    if (std::find(it->second.begin(), it->second.end(), r.method) == it->second.end())
      return error_response(405, "method not allowed");
    if (r.path == "/api/login") return login(r);

    const auto session = authorize(r);
    if (!session) return error_response(401, "authentication required");
    if (r.path == "/api/status") return status();
    if (r.path == "/api/events") return events(r);
    if (r.path == "/api/command") return command(r, *session);
    if (r.path == "/api/params") return r.method == "GET" ? get_params() : put_params(r, *session);
    if (r.path == "/api/export") return export_csv(r);
    return sim_control(json::parse(r.body.empty() ? "{}" : r.body));
  }

  std::optional<Session> authorize(const Request& r) {
    constexpr std::string_view prefix = "Bearer ";
    if (r.authorization.rfind(prefix, 0) != 0) return std::nullopt;
    return auth_.authorize(r.authorization.substr(prefix.size()));
  }

  Response login(const Request& r) {
    const json body = json::parse(r.body.empty() ? "{}" : r.body);
    if (!body.is_object() || !body.contains("user") || !body.contains("password") || !body["user"].is_string() ||
        !body["password"].is_string())
      return error_response(400, "expected {\"user\", \"password\"}");
    const auto res = auth_.login(body["user"].get<std::string>(), body["password"].get<std::string>());
    switch (res.status) {
      case LoginStatus::Ok: {
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(res.expires.time_since_epoch()).count();
        return json_response(200, json{{"token", res.token}, {"expires", Calendar::format_iso_utc(secs)}});
      }
      case LoginStatus::Throttled: return error_response(429, "throttled");
      case LoginStatus::BadCredentials: break;
    }
    return error_response(401, "invalid credentials");
  }

  Response status() {
    const auto snap = sim_.snapshot();
    if (!snap) return error_response(503, "no snapshot yet");
    return json_response(200, status_json(*snap));
  }

  Response events(const Request& r) {
    std::size_t limit = 10;
    if (const auto it = r.query.find("limit"); it != r.query.end()) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used);
        if (used != it->second.size() || v < 0) throw std::invalid_argument("limit");
        limit = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        return error_response(400, "limit must be a non-negative integer");
      }
    }
    json list = json::array();
    for (const auto& e : sim_.recent_events(limit)) list.push_back(event_json(sim_.calendar(), e));
    return json_response(200, json{{"events", list}});
  }

  Response command(const Request& r, const Session& session) {
    const json body = json::parse(r.body.empty() ? "{}" : r.body);
    if (!body.is_object() || !body.contains("target") || !body["target"].is_string())
      return error_response(400, "schema: 'target' must be one of plc|actuator|params|sim");
    const std::string target = body["target"].get<std::string>();
    const std::string action = body.value("action", std::string());
    const json args = body.value("arguments", json::object());
    const std::string origin = "api:" + session.user;

    if (target == "plc") {
      static const std::map<std::string, plc::Command::Kind> kinds{{"run", plc::Command::Kind::Run},
                                                                   {"stop", plc::Command::Kind::Stop},
                                                                   {"auto", plc::Command::Kind::Auto},
                                                                   {"manual", plc::Command::Kind::Manual},
                                                                   {"ack-faults", plc::Command::Kind::AckFaults}};
      const auto k = kinds.find(action);
      if (k == kinds.end()) return error_response(400, "schema: plc action must be run|stop|auto|manual|ack-faults");
      return await(plc::Command::plc(k->second, origin));
    }
    if (target == "actuator") {
      if (!args.is_object() || !args.contains("actuator") || !args["actuator"].is_string())
        return error_response(400, "schema: arguments.actuator is required");
      const auto a = plc::actuator_from(args["actuator"].get<std::string>());
      if (!a) return error_response(400, "schema: unknown actuator");
      if (action != "on" && action != "off") return error_response(400, "schema: actuator action must be on|off");
      return await(plc::Command::set(*a, action == "on", origin));
    }
    if (target == "params") return apply_params(args, origin);
    if (target == "sim") {
      json j = args.is_object() ? args : json::object();
      j["action"] = action;
      return sim_control(j);
    }
    return error_response(400, "schema: 'target' must be one of plc|actuator|params|sim");
  }

  Response await(plc::Command c) {
    auto fut = sim_.submit(std::move(c));
    if (!runner_) {
      while (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) sim_.step();
    } else if (fut.wait_for(wait_) != std::future_status::ready) {
      return json_response(202, json{{"accepted", nullptr}, {"status", "pending"}});
    }
    const plc::CommandOutcome out = fut.get();
    if (out.accepted) return json_response(200, json{{"accepted", true}});
    return json_response(409, json{{"accepted", false}, {"reason", out.reason}});
  }

  Response get_params() {
    const auto snap = sim_.snapshot();
    if (!snap) return error_response(503, "no snapshot yet");
    return json_response(200, params_json(snap->params));
  }

  Response put_params(const Request& r, const Session& session) {
    return apply_params(json::parse(r.body.empty() ? "{}" : r.body), "api:" + session.user);
  }

  Response apply_params(const json& body, const std::string& origin) {
    auto parsed = params_patch_from(body);
    if (auto* field = std::get_if<std::string>(&parsed)) {
      return json_response(400, json{{"error", "invalid field"}, {"field", *field}});
    }
    const auto patch = std::get<plc::ParamsPatch>(parsed);
    const auto snap = sim_.snapshot();
    if (snap) {
      if (auto bad = patch.applied_to(snap->params).violation())
        return json_response(422, json{{"error", "invalid params"}, {"field", *bad}});
    }
    Response res = await(plc::Command::set_params(patch, origin));
    if (res.status == 409) {
      const std::string reason = res.json_body().value("reason", std::string());
      const auto colon = reason.find(": ");
      return json_response(422, json{{"error", "invalid params"},
                                     {"field", colon == std::string::npos ? reason : reason.substr(colon + 2)}});
    }
    if (res.status != 200) return res;
    const auto after = sim_.snapshot();
    return json_response(200, params_json(after ? after->params : plc::ControlParams{}));
  }

  Response export_csv(const Request& r) {
    const Calendar& cal = sim_.calendar();
    gw::ExportQuery q;
    q.from = std::numeric_limits<SimTime>::min();
    q.to = std::numeric_limits<SimTime>::max();
    auto get = [&](const char* k) -> std::optional<std::string> {
      const auto it = r.query.find(k);
      return it == r.query.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    try {
      if (auto v = get("from")) q.from = cal.parse(*v);
      if (auto v = get("to")) q.to = cal.parse(*v);
    } catch (const std::exception&) {
      return error_response(400, "from/to must be YYYY-MM-DDTHH:MM:SSZ");
    }
    if (auto v = get("node")) {
      try {
        q.nodes = {std::stoi(*v)};
      } catch (const std::exception&) {
        return error_response(400, "node must be an integer");
      }
    }
    if (auto v = get("sensor")) {
      const auto k = mesh::kind_from_name(*v);
      if (!k) return error_response(400, "unknown sensor");
      q.kinds = {*k};
    }
    if (q.from > q.to) return error_response(400, "bad range: from is after to");
    std::string csv;
    if (runner_) {
      auto p = std::make_shared<std::promise<std::string>>();
      auto f = p->get_future();
      sim_.post_task([this, q, p] { p->set_value(sim_.gateway().export_csv(q)); });
      if (f.wait_for(wait_) != std::future_status::ready) return error_response(503, "simulation busy");
      csv = f.get();
    } else {
      csv = sim_.gateway().export_csv(q);
    }
    return Response{200, "text/csv", std::move(csv)};
  }

  Response sim_control(const json& body) {
    if (!body.is_object() || !body.contains("action") || !body["action"].is_string())
      return error_response(400, "schema: action must be pause|resume|speed|poll");
    const std::string action = body["action"].get<std::string>();
    if (action == "pause") {
      if (runner_) runner_->pause();
      paused_ = true;
    } else if (action == "resume") {
      if (runner_) runner_->resume();
      paused_ = false;
    } else if (action == "speed") {
      if (!body.contains("value") || !body["value"].is_number()) return error_response(400, "speed needs a numeric value");
      const double v = body["value"].get<double>();
      if (v < 0.0) return error_response(400, "speed must be > 0, or 0 for as fast as possible");
      if (runner_) runner_->set_speed(v);
      speed_ = v;
    } else if (action == "poll") {
      sim_.request_poll();
    } else {
      return error_response(400, "schema: action must be pause|resume|speed|poll");
    }
    return json_response(200, json{{"acknowledged", action}, {"paused", paused()}, {"speed", speed()}});
  }

  sim::Simulation& sim_;
  Authenticator& auth_;
  sim::Runner* runner_;
  std::chrono::milliseconds wait_;
  bool paused_ = false;
  double speed_ = 0.0;
};

}  // namespace ghsim::ops
