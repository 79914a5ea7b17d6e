#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pyrocast/dataset.hpp"
#include "pyrocast/model.hpp"

namespace pyrocast {

// Per-location annual mean KBDI series from one climate-model ensemble under
// one emissions scenario. Locations are flat cell indices (row*cols+col) on
// the static-layer grid; every member covers the same years and locations.
struct ScenarioEnsemble {
  std::string scenario_id;
  std::vector<std::int64_t> location_ids;  // sorted ascending
  int first_year = 0;
  int last_year = 0;
  std::vector<std::string> member_ids;
  // members[m] is (years x locations); row y-first_year, column as in
  // location_ids.
  std::vector<Eigen::MatrixXd> members;

  void validate() const;
};

// One CSV per member: year,location_id,kbdi_mean. Member id = file stem;
// members are ordered by file name.
ScenarioEnsemble read_scenario_ensemble(
    const std::string& scenario_id,
    const std::vector<std::filesystem::path>& member_csvs);

struct ScenarioProjection {
  std::string scenario_id;
  std::vector<int> years;
  std::vector<std::string> member_ids;
  // Across-project mean probability, (members x years).
  Eigen::MatrixXd member_series;
  Eigen::VectorXd mean;           // per year, over members
  Eigen::VectorXd p16;
  Eigen::VectorXd p84;
  Eigen::VectorXd smoothed_mean;  // moving_average of mean
};

// Drives the trained model with each member's KBDI while holding static
// features fixed; per-project mean probability over the polygon mask, then
// equal-weighted mean across projects.
ScenarioProjection project_scenario(const NetworkParams& params,
                                    const LayerMap& layers,
                                    const FeatureRegistry& registry,
                                    const ScenarioEnsemble& ensemble,
                                    std::span<const ProjectPolygon> polygons,
                                    int smoothing_window = 10);

// Linear-interpolation percentile: rank h = q*(n-1) on the ascending sort.
double ensemble_percentile(std::vector<double> values, double q);

// Centered moving average, left-biased by one for even windows, truncated at
// the series edges.
std::vector<double> moving_average(std::span<const double> series, int window);

// (value(target) - mean(baseline)) / mean(baseline) for one member series.
double relative_change(std::span<const double> series,
                       std::span<const int> years, YearRange baseline,
                       int target_year);

struct RelativeChangeSummary {
  std::string scenario_id;
  int target_year = 0;
  double mean = 0.0;
  double p16 = 0.0;
  double p84 = 0.0;
};

// Member-wise relative changes summarized by mean and 16th/84th percentiles.
RelativeChangeSummary relative_change_summary(
    const ScenarioProjection& projection, YearRange baseline, int target_year);

// projection.csv: scenario,year,mean,p16,p84,smoothed_mean
void write_projection_csv(std::span<const ScenarioProjection> projections,
                          const std::filesystem::path& path);
// changes.csv: scenario,target_year,mean_change,p16,p84
void write_changes_csv(std::span<const RelativeChangeSummary> changes,
                       const std::filesystem::path& path);

}  // namespace pyrocast
