#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ghsim/core/rng.hpp"
#include "ghsim/core/sim_time.hpp"

namespace ghsim::env {

struct Climate {
  double ambient_temp = 20.0;  // degC
  double humidity = 70.0;      // %RH
  double solar = 0.0;          // W/m2
  double dew_point = 14.3;     // degC, derived

  bool operator==(const Climate&) const = default;
};

struct ClimateParams {
  double temp_mean = 22.0;
  double temp_amplitude = 6.0;
  double temp_peak_hour = 15.0;
  double humidity_mean = 70.0;
  /// %RH lost per degC above the daily mean.
  double humidity_per_degree = 2.5;
  double solar_peak = 700.0;
  double sunrise_hour = 6.0;
  double sunset_hour = 18.0;
  double temp_noise = 0.05;
  double humidity_noise = 0.2;

  bool operator==(const ClimateParams&) const = default;
};

/// Magnus approximation of the dew point (Sonntag constants), clamped to
/// the sensor's -10..50 degC span.
inline double dew_point_magnus(double temp_c, double rh_percent) {
  constexpr double a = 17.62;
  constexpr double b = 243.12;
  const double rh = std::clamp(rh_percent, 0.01, 100.0);
  const double gamma = std::log(rh / 100.0) + a * temp_c / (b + temp_c);
  const double td = b * gamma / (a - gamma);
  return std::clamp(td, -10.0, 50.0);
}

inline double clear_sky_solar(const ClimateParams& p, double hour_of_day) {
  if (hour_of_day <= p.sunrise_hour || hour_of_day >= p.sunset_hour) return 0.0;
  const double frac = (hour_of_day - p.sunrise_hour) / (p.sunset_hour - p.sunrise_hour);
  return p.solar_peak * std::sin(std::numbers::pi * frac);
}

/// Diurnal climate: temperature and solar follow the hour of the UTC day,
/// humidity moves against temperature, and a little seeded noise rides on top.
inline Climate advance_climate(const ClimateParams& p, const Calendar& cal, SimTime now, RngStream& noise) {
  const double hour = static_cast<double>(cal.second_of_day(now)) / static_cast<double>(kHour);
  Climate c;
  const double phase = 2.0 * std::numbers::pi * (hour - p.temp_peak_hour + 6.0) / 24.0;
  const double temp_dev = p.temp_amplitude * std::sin(phase);
  c.ambient_temp = std::clamp(p.temp_mean + temp_dev + noise.gaussian(0.0, p.temp_noise), -40.0, 65.0);
  c.humidity = std::clamp(p.humidity_mean - p.humidity_per_degree * temp_dev + noise.gaussian(0.0, p.humidity_noise),
                          0.0, 100.0);
  c.solar = std::clamp(clear_sky_solar(p, hour), 0.0, 1800.0);
  c.dew_point = dew_point_magnus(c.ambient_temp, c.humidity);
  return c;
}

}  // namespace ghsim::env
