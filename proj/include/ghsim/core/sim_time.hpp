#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace ghsim {

/// Simulated time in whole seconds since the scenario epoch.
using SimTime = std::int64_t;

inline constexpr SimTime kMinute = 60;
inline constexpr SimTime kHour = 3600;
inline constexpr SimTime kDay = 86400;

enum class Period { Hour, Day, Month };

inline const char* to_string(Period p) {
  switch (p) {
    case Period::Hour: return "hour";
    case Period::Day: return "day";
    case Period::Month: return "month";
  }
  return "?";
}

/// Maps sim-time onto the UTC calendar. Rollup windows and CSV timestamps
/// are aligned against this mapping, so the epoch need not sit on a
/// calendar boundary.
class Calendar {
 public:
  Calendar() = default;
  explicit Calendar(std::int64_t epoch_unix) : epoch_(epoch_unix) {}

  static Calendar from_iso(std::string_view iso) { return Calendar(parse_iso_utc(iso)); }

  std::int64_t epoch_unix() const { return epoch_; }
  std::int64_t to_unix(SimTime t) const { return epoch_ + t; }
  SimTime from_unix(std::int64_t u) const { return u - epoch_; }

  std::string iso(SimTime t) const { return format_iso_utc(to_unix(t)); }
  SimTime parse(std::string_view iso_text) const { return from_unix(parse_iso_utc(iso_text)); }

  /// Seconds into the UTC day, in [0, 86400).
  std::int64_t second_of_day(SimTime t) const { return floor_mod(to_unix(t), kDay); }

  SimTime period_floor(Period p, SimTime t) const {
    const std::int64_t u = to_unix(t);
    switch (p) {
      case Period::Hour: return from_unix(u - floor_mod(u, kHour));
      case Period::Day: return from_unix(u - floor_mod(u, kDay));
      case Period::Month: {
        using namespace std::chrono;
        const sys_days day{days{floor_div(u, kDay)}};
        const year_month_day ymd{day};
        const sys_days first{ymd.year() / ymd.month() / 1};
        return from_unix(static_cast<std::int64_t>(first.time_since_epoch().count()) * kDay);
      }
    }
    return t;
  }

  /// End (exclusive) of the calendar period starting at `start`.
  SimTime period_end(Period p, SimTime start) const {
    switch (p) {
      case Period::Hour: return start + kHour;
      case Period::Day: return start + kDay;
      case Period::Month: {
        using namespace std::chrono;
        const sys_days day{days{floor_div(to_unix(start), kDay)}};
        const year_month_day ymd{day};
        const year_month next = ymd.year() / ymd.month() + months{1};
        const sys_days first{next / 1};
        return from_unix(static_cast<std::int64_t>(first.time_since_epoch().count()) * kDay);
      }
    }
    return start;
  }

  /// `YYYY-MM-DDTHH:MM:SSZ`
  static std::string format_iso_utc(std::int64_t unix_seconds) {
    using namespace std::chrono;
    const std::int64_t day_index = floor_div(unix_seconds, kDay);
    const std::int64_t sod = floor_mod(unix_seconds, kDay);
    const year_month_day ymd{sys_days{days{day_index}}};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       sod / kHour, (sod % kHour) / kMinute, sod % kMinute);
  }

  static std::int64_t parse_iso_utc(std::string_view text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char tail = 0;
    const std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%c", &y, &mo, &d, &h, &mi, &s, &tail) != 7 ||
        tail != 'Z' || buf.size() != 20) {
      throw std::invalid_argument("not an ISO-8601 UTC timestamp: '" + buf + "'");
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y} / month{mo} / day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
      throw std::invalid_argument("invalid calendar timestamp: '" + buf + "'");
    }
    const std::int64_t days_since = sys_days{ymd}.time_since_epoch().count();
    return days_since * kDay + h * kHour + mi * kMinute + s;
  }

  bool operator==(const Calendar&) const = default;

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }
  static std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

  std::int64_t epoch_ = 0;
};

/// Parses a duration such as `900`, `15m`, `36h` or `14d` into seconds.
inline SimTime parse_duration(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty duration");
  SimTime unit = 1;
  switch (text.back()) {
    case 's': unit = 1; text.remove_suffix(1); break;
    case 'm': unit = kMinute; text.remove_suffix(1); break;
    case 'h': unit = kHour; text.remove_suffix(1); break;
    case 'd': unit = kDay; text.remove_suffix(1); break;
    default: break;
  }
  std::size_t used = 0;
  const std::string digits(text);
  long long value = 0;
  try {
    value = std::stoll(digits, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad duration '" + digits + "'");
  }
  if (used != digits.size()) throw std::invalid_argument("bad duration '" + digits + "'");
  return static_cast<SimTime>(value) * unit;
}

}  // namespace ghsim
