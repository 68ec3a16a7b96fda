#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ghsim/core/sim_time.hpp"

namespace ghsim {

enum class Severity { Info, Warn, Fault };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warn: return "warn";
    case Severity::Fault: return "fault";
  }
  return "?";
}

/// One logged action. The log orders events by (timestamp, seq).
struct Event {
  SimTime timestamp = 0;
  std::uint64_t seq = 0;
  Severity severity = Severity::Info;
  std::string source;
  std::string message;

  bool operator==(const Event&) const = default;
};

/// Collects events raised while one module runs; the kernel assigns seq.
class EventSink {
 public:
  explicit EventSink(SimTime now = 0) : now_(now) {}

  void info(std::string source, std::string message) { emit(Severity::Info, std::move(source), std::move(message)); }
  void warn(std::string source, std::string message) { emit(Severity::Warn, std::move(source), std::move(message)); }
  void fault(std::string source, std::string message) { emit(Severity::Fault, std::move(source), std::move(message)); }

  void emit(Severity s, std::string source, std::string message) {
    events_.push_back(Event{now_, 0, s, std::move(source), std::move(message)});
  }

  SimTime now() const { return now_; }
  const std::vector<Event>& events() const { return events_; }
  std::vector<Event> take() { return std::exchange(events_, {}); }

 private:
  SimTime now_;
  std::vector<Event> events_;
};

/// `ISO-8601-timestamp<TAB>severity<TAB>source<TAB>message`
inline std::string format_event_line(const Calendar& cal, const Event& e) {
  std::string line = cal.iso(e.timestamp);
  line += '\t';
  line += to_string(e.severity);
  line += '\t';
  line += e.source;
  line += '\t';
  for (const char c : e.message) line += (c == '\t' || c == '\n') ? ' ' : c;
  return line;
}

}  // namespace ghsim
