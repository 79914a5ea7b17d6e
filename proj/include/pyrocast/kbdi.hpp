#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <vector>

#include "pyrocast/errors.hpp"

namespace pyrocast {

inline constexpr double kKbdiMax = 800.0;
// A rain event must exceed this many inches before it reduces the index.
inline constexpr double kRainEventThreshold = 0.20;

inline constexpr double fahrenheit_from_celsius(double c) {
  return c * 9.0 / 5.0 + 32.0;
}
inline constexpr double inches_from_mm(double mm) { return mm / 25.4; }

// Daily driving weather for one location. Internal units are always
// Fahrenheit and inches; metric ingestion converts on read.
struct DailyWeatherSeries {
  std::chrono::year_month_day start_date{};
  std::vector<double> tmax_f;
  std::vector<double> precip_in;
  double annual_rainfall_normal_in = 0.0;

  void validate() const;
};

struct KbdiSeries {
  std::chrono::year_month_day start_date{};
  std::vector<double> values;  // one per driving day, each in [0, 800]
};

struct KbdiStepResult {
  double q_next;
  double rain_carry_next;
};

// One day of the index recursion. Rain is netted against the 0.20 in event
// threshold first (rain_carry is the part of the current consecutive-wet-day
// event already absorbed; it resets on a dry day) and reduces q by 100 points
// per net inch, floored at 0. The drought increment then applies to the
// reduced q:
//   dQ = 1e-3 * (800 - q) * (0.968*exp(0.0486*T) - 8.30)
//        / (1 + 10.88*exp(-0.0441*R))
// with T in deg F, R the annual rainfall normal in inches, dQ floored at 0.
KbdiStepResult kbdi_step(double q_prev, double tmax_f, double rain_in,
                         double rain_carry, double annual_rain_in);

KbdiSeries kbdi_series(const DailyWeatherSeries& weather, double q0 = 0.0);

// Arithmetic mean of the daily values falling inside the calendar year.
double annual_mean_kbdi(const KbdiSeries& series, int year);

// Years covered by the series, in order.
std::vector<int> covered_years(const KbdiSeries& series);

// Weather CSV: header date,tmax_c,precip_mm (or date,tmax_f,precip_in when
// imperial), ISO-8601 dates, one row per day, contiguous. The annual rainfall
// normal defaults to the series' own mean annual precipitation unless
// overridden.
DailyWeatherSeries read_weather_csv(
    const std::filesystem::path& path, bool imperial = false,
    std::optional<double> annual_rainfall_normal_in = std::nullopt);

}  // namespace pyrocast
