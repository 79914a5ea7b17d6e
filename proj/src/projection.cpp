#include "pyrocast/projection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pyrocast/csvio.hpp"

namespace pyrocast {

void ScenarioEnsemble::validate() const {
  if (member_ids.empty() || members.size() != member_ids.size()) {
    throw data_error("domain error: ensemble has no members");
  }
  if (members.size() > 28) {
    throw data_error("domain error: ensemble exceeds 28 members");
  }
  if (first_year > last_year || location_ids.empty()) {
    throw data_error("domain error: ensemble year range or locations empty");
  }
  if (!std::is_sorted(location_ids.begin(), location_ids.end())) {
    throw data_error("domain error: ensemble locations not sorted");
  }
  const auto years = static_cast<Eigen::Index>(last_year - first_year + 1);
  const auto locs = static_cast<Eigen::Index>(location_ids.size());
  for (const auto& m : members) {
    if (m.rows() != years || m.cols() != locs) {
      throw data_error("coverage error: member matrix shape mismatch");
    }
    if (!m.allFinite()) {
      throw data_error("domain error: non-finite ensemble KBDI value");
    }
  }
}

ScenarioEnsemble read_scenario_ensemble(
    const std::string& scenario_id,
    const std::vector<std::filesystem::path>& member_csvs) {
  if (member_csvs.empty()) {
    throw data_error("coverage error: no member CSVs for scenario " +
                     scenario_id);
  }
  ScenarioEnsemble ens;
  ens.scenario_id = scenario_id;

  // First pass on the first member fixes the (year, location) grid.
  bool first = true;
  for (const auto& path : member_csvs) {
    const CsvTable table = read_csv(path);
    const std::size_t year_col = table.column("year");
    const std::size_t loc_col = table.column("location_id");
    const std::size_t kbdi_col = table.column("kbdi_mean");
    std::map<int, std::map<std::int64_t, double>> by_year;
    for (const auto& row : table.rows) {
      const int year = static_cast<int>(parse_long(row[year_col], path.string()));
      const std::int64_t loc = parse_long(row[loc_col], path.string());
      const double kbdi = parse_double(row[kbdi_col], path.string());
      if (!by_year[year].emplace(loc, kbdi).second) {
        throw data_error("format error: duplicate (year, location) in " +
                         path.string());
      }
    }
    if (by_year.empty()) {
      throw data_error("format error: empty member CSV " + path.string());
    }

    if (first) {
      ens.first_year = by_year.begin()->first;
      ens.last_year = by_year.rbegin()->first;
      for (const auto& [loc, _] : by_year.begin()->second) {
        ens.location_ids.push_back(loc);
      }
      first = false;
    }

    const auto n_years = static_cast<Eigen::Index>(ens.last_year - ens.first_year + 1);
    Eigen::MatrixXd m(n_years, static_cast<Eigen::Index>(ens.location_ids.size()));
    for (int y = ens.first_year; y <= ens.last_year; ++y) {
      const auto yit = by_year.find(y);
      if (yit == by_year.end()) {
        throw data_error("coverage error: member " + path.stem().string() +
                         " missing year " + std::to_string(y));
      }
      if (yit->second.size() != ens.location_ids.size()) {
        throw data_error("coverage error: member " + path.stem().string() +
                         " location set differs for year " + std::to_string(y));
      }
      for (std::size_t i = 0; i < ens.location_ids.size(); ++i) {
        const auto lit = yit->second.find(ens.location_ids[i]);
        if (lit == yit->second.end()) {
          throw data_error("coverage error: member " + path.stem().string() +
                           " missing location " +
                           std::to_string(ens.location_ids[i]));
        }
        m(y - ens.first_year, static_cast<Eigen::Index>(i)) = lit->second;
      }
    }
    if (by_year.rbegin()->first != ens.last_year ||
        by_year.begin()->first != ens.first_year) {
      throw data_error("coverage error: member " + path.stem().string() +
                       " year range differs");
    }
    ens.member_ids.push_back(path.stem().string());
    ens.members.push_back(std::move(m));
  }
  ens.validate();
  return ens;
}

double ensemble_percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw data_error("domain error: percentile of empty set");
  }
  if (q < 0.0 || q > 1.0) {
    throw data_error("domain error: percentile fraction outside [0,1]");
  }
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<double> moving_average(std::span<const double> series,
                                   int window) {
  if (series.empty()) {
    throw data_error("domain error: moving average of empty series");
  }
  if (window < 1) {
    throw data_error("domain error: window must be >= 1");
  }
  const auto n = static_cast<long>(series.size());
  const long back = window / 2;            // left bias for even windows
  const long ahead = (window - 1) / 2;
  std::vector<double> out(series.size());
  for (long t = 0; t < n; ++t) {
    const long lo = std::max<long>(0, t - back);
    const long hi = std::min<long>(n - 1, t + ahead);
    double sum = 0.0;
    for (long i = lo; i <= hi; ++i) sum += series[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(t)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

double relative_change(std::span<const double> series,
                       std::span<const int> years, YearRange baseline,
                       int target_year) {
  if (series.size() != years.size() || series.empty()) {
    throw data_error("domain error: series/year length mismatch");
  }
  double base_sum = 0.0;
  int base_count = 0;
  double target = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < years.size(); ++i) {
    if (baseline.contains(years[i])) {
      base_sum += series[i];
      ++base_count;
    }
    if (years[i] == target_year) target = series[i];
  }
  if (base_count == 0) {
    throw data_error("range error: baseline window not covered");
  }
  if (std::isnan(target)) {
    throw data_error("range error: target year not covered");
  }
  const double base_mean = base_sum / static_cast<double>(base_count);
  if (base_mean == 0.0) {
    throw numeric_error("degenerate-baseline error: baseline mean is zero");
  }
  return (target - base_mean) / base_mean;
}

ScenarioProjection project_scenario(const NetworkParams& params,
                                    const LayerMap& layers,
                                    const FeatureRegistry& registry,
                                    const ScenarioEnsemble& ensemble,
                                    std::span<const ProjectPolygon> polygons,
                                    int smoothing_window) {
  ensemble.validate();
  if (polygons.empty()) {
    throw data_error("coverage error: no project polygons");
  }
  const auto landcover_it = layers.find("landcover");
  if (landcover_it == layers.end()) {
    throw data_error("registry error: missing 'landcover' layer");
  }
  const RasterGrid& tmpl = landcover_it->second;

  // Static features are time-invariant, so the betas are computed once.
  const ExplainMap betas = explain(params, layers, registry);

  // Column index into the member matrices per flat cell id.
  std::map<std::int64_t, Eigen::Index> column_of;
  for (std::size_t i = 0; i < ensemble.location_ids.size(); ++i) {
    column_of[ensemble.location_ids[i]] = static_cast<Eigen::Index>(i);
  }

  // Valid cells per project, as (beta0, beta1, ensemble column).
  struct CellRef {
    double beta0;
    double beta1;
    Eigen::Index column;
  };
  std::vector<std::vector<CellRef>> project_cells;
  for (const auto& poly : polygons) {
    const RasterGrid mask = rasterize_polygon(poly, tmpl);
    std::vector<CellRef> cells;
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        if (mask.values(r, c) != 1.0) continue;
        const double b0 = betas.beta0.values(r, c);
        if (std::isnan(b0)) continue;  // masked static features
        const std::int64_t flat = r * tmpl.cols() + c;
        const auto col_it = column_of.find(flat);
        if (col_it == column_of.end()) {
          throw data_error("coverage error: ensemble missing location " +
                           std::to_string(flat) + " for project " +
                           poly.project_id);
        }
        cells.push_back({b0, betas.beta1.values(r, c), col_it->second});
      }
    }
    if (cells.empty()) {
      throw data_error("coverage error: project " + poly.project_id +
                       " has no valid cell");
    }
    project_cells.push_back(std::move(cells));
  }

  ScenarioProjection proj;
  proj.scenario_id = ensemble.scenario_id;
  proj.member_ids = ensemble.member_ids;
  const int n_years = ensemble.last_year - ensemble.first_year + 1;
  for (int y = ensemble.first_year; y <= ensemble.last_year; ++y) {
    proj.years.push_back(y);
  }
  proj.member_series.resize(static_cast<Eigen::Index>(ensemble.members.size()),
                            n_years);

  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const Eigen::MatrixXd& kbdi = ensemble.members[m];
    for (int yi = 0; yi < n_years; ++yi) {
      double project_sum = 0.0;
      for (const auto& cells : project_cells) {
        double cell_sum = 0.0;
        for (const auto& cell : cells) {
          const double k = kbdi(yi, cell.column) / kKbdiMax;
          cell_sum += logistic(cell.beta0 + cell.beta1 * k);
        }
        project_sum += cell_sum / static_cast<double>(cells.size());
      }
      proj.member_series(static_cast<Eigen::Index>(m), yi) =
          project_sum / static_cast<double>(project_cells.size());
    }
  }

  proj.mean.resize(n_years);
  proj.p16.resize(n_years);
  proj.p84.resize(n_years);
  std::vector<double> members_at_year(ensemble.members.size());
  for (int yi = 0; yi < n_years; ++yi) {
    for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
      members_at_year[m] = proj.member_series(static_cast<Eigen::Index>(m), yi);
    }
    proj.mean(yi) = proj.member_series.col(yi).mean();
    proj.p16(yi) = ensemble_percentile(members_at_year, 0.16);
    proj.p84(yi) = ensemble_percentile(members_at_year, 0.84);
  }

  const std::vector<double> mean_series(proj.mean.data(),
                                        proj.mean.data() + n_years);
  const auto smoothed = moving_average(mean_series, smoothing_window);
  proj.smoothed_mean =
      Eigen::Map<const Eigen::VectorXd>(smoothed.data(), n_years);
  return proj;
}

RelativeChangeSummary relative_change_summary(
    const ScenarioProjection& projection, YearRange baseline,
    int target_year) {
  const auto n_members = projection.member_series.rows();
  if (n_members == 0) {
    throw data_error("domain error: projection has no members");
  }
  std::vector<double> changes;
  changes.reserve(static_cast<std::size_t>(n_members));
  for (Eigen::Index m = 0; m < n_members; ++m) {
    std::vector<double> series(projection.member_series.cols());
    for (Eigen::Index y = 0; y < projection.member_series.cols(); ++y) {
      series[static_cast<std::size_t>(y)] = projection.member_series(m, y);
    }
    changes.push_back(
        relative_change(series, projection.years, baseline, target_year));
  }
  RelativeChangeSummary summary;
  summary.scenario_id = projection.scenario_id;
  summary.target_year = target_year;
  double sum = 0.0;
  for (double c : changes) sum += c;
  summary.mean = sum / static_cast<double>(changes.size());
  summary.p16 = ensemble_percentile(changes, 0.16);
  summary.p84 = ensemble_percentile(changes, 0.84);
  return summary;
}

void write_projection_csv(std::span<const ScenarioProjection> projections,
                          const std::filesystem::path& path) {
  std::string body = "scenario,year,mean,p16,p84,smoothed_mean\n";
  for (const auto& proj : projections) {
    for (std::size_t yi = 0; yi < proj.years.size(); ++yi) {
      const auto i = static_cast<Eigen::Index>(yi);
      body += proj.scenario_id + "," + std::to_string(proj.years[yi]) + "," +
              format_double(proj.mean(i)) + "," + format_double(proj.p16(i)) +
              "," + format_double(proj.p84(i)) + "," +
              format_double(proj.smoothed_mean(i)) + "\n";
    }
  }
  write_text_file(path, body);
}

void write_changes_csv(std::span<const RelativeChangeSummary> changes,
                       const std::filesystem::path& path) {
  std::string body = "scenario,target_year,mean_change,p16,p84\n";
  for (const auto& ch : changes) {
    body += ch.scenario_id + "," + std::to_string(ch.target_year) + "," +
            format_double(ch.mean) + "," + format_double(ch.p16) + "," +
            format_double(ch.p84) + "\n";
  }
  write_text_file(path, body);
}

}  // namespace pyrocast
