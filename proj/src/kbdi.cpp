#include "pyrocast/kbdi.hpp"

#include <algorithm>
#include <cmath>

#include "pyrocast/csvio.hpp"

namespace pyrocast {

void DailyWeatherSeries::validate() const {
  if (tmax_f.empty() || tmax_f.size() != precip_in.size()) {
    throw data_error("domain error: weather series length mismatch or empty");
  }
  if (!start_date.ok()) {
    throw data_error("domain error: invalid weather start date");
  }
  if (annual_rainfall_normal_in <= 0.0 ||
      !std::isfinite(annual_rainfall_normal_in)) {
    throw data_error("domain error: annual rainfall normal must be positive");
  }
  for (std::size_t i = 0; i < tmax_f.size(); ++i) {
    if (!std::isfinite(tmax_f[i]) || !std::isfinite(precip_in[i]) ||
        precip_in[i] < 0.0) {
      throw data_error("domain error: non-finite or negative weather value at day " +
                       std::to_string(i));
    }
  }
}

KbdiStepResult kbdi_step(double q_prev, double tmax_f, double rain_in,
                         double rain_carry, double annual_rain_in) {
  if (!std::isfinite(q_prev) || !std::isfinite(tmax_f) ||
      !std::isfinite(rain_in) || !std::isfinite(rain_carry) ||
      !std::isfinite(annual_rain_in)) {
    throw data_error("domain error: non-finite kbdi_step input");
  }

  double q = q_prev;
  double carry = rain_carry;
  if (rain_in > 0.0) {
    const double absorbed = std::min(rain_in, kRainEventThreshold - carry);
    const double net = rain_in - absorbed;
    carry += absorbed;
    q = std::max(0.0, q - 100.0 * net);
  } else {
    carry = 0.0;
  }

  double dq = 1e-3 * (kKbdiMax - q) *
              (0.968 * std::exp(0.0486 * tmax_f) - 8.30) /
              (1.0 + 10.88 * std::exp(-0.0441 * annual_rain_in));
  if (dq < 0.0) dq = 0.0;  // no negative increment on cold days

  return {std::clamp(q + dq, 0.0, kKbdiMax), carry};
}

KbdiSeries kbdi_series(const DailyWeatherSeries& weather, double q0) {
  weather.validate();
  if (q0 < 0.0 || q0 > kKbdiMax) {
    throw data_error("domain error: q0 outside [0, 800]");
  }
  KbdiSeries out;
  out.start_date = weather.start_date;
  out.values.resize(weather.tmax_f.size());
  double q = q0;
  double carry = 0.0;
  for (std::size_t i = 0; i < weather.tmax_f.size(); ++i) {
    const auto step = kbdi_step(q, weather.tmax_f[i], weather.precip_in[i],
                                carry, weather.annual_rainfall_normal_in);
    q = step.q_next;
    carry = step.rain_carry_next;
    out.values[i] = q;
  }
  return out;
}

double annual_mean_kbdi(const KbdiSeries& series, int year) {
  using namespace std::chrono;
  if (series.values.empty()) {
    throw data_error("range error: empty KBDI series");
  }
  const sys_days start{series.start_date};
  const sys_days year_begin{year_month_day{std::chrono::year{year}, January, day{1}}};
  const sys_days year_end{
      year_month_day{std::chrono::year{year + 1}, January, day{1}}};
  const auto n = static_cast<long>(series.values.size());
  const long lo = std::max<long>(0, (year_begin - start).count());
  const long hi = std::min<long>(n, (year_end - start).count());
  if (lo >= hi) {
    throw data_error("range error: year " + std::to_string(year) +
                     " not covered by KBDI series");
  }
  double sum = 0.0;
  for (long i = lo; i < hi; ++i) sum += series.values[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(hi - lo);
}

std::vector<int> covered_years(const KbdiSeries& series) {
  using namespace std::chrono;
  std::vector<int> years;
  if (series.values.empty()) return years;
  const sys_days start{series.start_date};
  const year_month_day last{start + days{static_cast<long>(series.values.size()) - 1}};
  for (int y = static_cast<int>(series.start_date.year());
       y <= static_cast<int>(last.year()); ++y) {
    years.push_back(y);
  }
  return years;
}

namespace {

std::chrono::year_month_day parse_iso_date(const std::string& s,
                                           const std::string& context) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    throw data_error("format error: bad date '" + s + "' in " + context);
  }
  const int y = static_cast<int>(parse_long(s.substr(0, 4), context));
  const int m = static_cast<int>(parse_long(s.substr(5, 2), context));
  const int d = static_cast<int>(parse_long(s.substr(8, 2), context));
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw data_error("format error: invalid date '" + s + "' in " + context);
  }
  return ymd;
}

}  // namespace

DailyWeatherSeries read_weather_csv(
    const std::filesystem::path& path, bool imperial,
    std::optional<double> annual_rainfall_normal_in) {
  const CsvTable table = read_csv(path);
  const std::string context = path.string();
  const std::size_t date_col = table.column("date");
  const std::size_t t_col = table.column(imperial ? "tmax_f" : "tmax_c");
  const std::size_t p_col = table.column(imperial ? "precip_in" : "precip_mm");
  if (table.rows.empty()) {
    throw data_error("format error: no weather rows in " + context);
  }

  DailyWeatherSeries series;
  series.start_date = parse_iso_date(table.rows.front()[date_col], context);
  std::chrono::sys_days expected{series.start_date};
  for (const auto& row : table.rows) {
    const auto date = parse_iso_date(row[date_col], context);
    if (std::chrono::sys_days{date} != expected) {
      throw data_error("format error: non-contiguous dates in " + context);
    }
    expected += std::chrono::days{1};
    const double t = parse_double(row[t_col], context);
    const double p = parse_double(row[p_col], context);
    series.tmax_f.push_back(imperial ? t : fahrenheit_from_celsius(t));
    series.precip_in.push_back(imperial ? p : inches_from_mm(p));
  }

  if (annual_rainfall_normal_in) {
    series.annual_rainfall_normal_in = *annual_rainfall_normal_in;
  } else {
    double total = 0.0;
    for (double p : series.precip_in) total += p;
    series.annual_rainfall_normal_in =
        total * 365.25 / static_cast<double>(series.precip_in.size());
  }
  series.validate();
  return series;
}

}  // namespace pyrocast
