#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pyrocast/dataset.hpp"
#include "pyrocast/raster.hpp"

namespace pyrocast {

struct ScoredProject {
  std::string project_id;
  double score = 0.0;
  int label = 0;  // 1 = any fire within the project during the window
};

// Mann-Whitney rank AUC with the 0.5 tie convention; equals trapezoidal ROC
// area. Requires at least one positive and one negative label.
double auc(std::span<const ScoredProject> scored);

enum class Reduction { Mean, Max };

// Per-project reduction of probability cells within the rasterized mask.
// Throws a coverage error for projects with no valid masked cell.
std::vector<ScoredProject> project_scores(
    const RasterGrid& prob_raster, std::span<const ProjectPolygon> polygons,
    Reduction reduction = Reduction::Mean);

struct ModelComparison {
  double auc_model = 0.0;
  double auc_benchmark = 0.0;
  double delta = 0.0;  // model minus benchmark
};

// Scores must cover the same project set; labels are shared. Benchmark
// scores typically come from read_benchmark_csv.
ModelComparison compare_models(std::span<const ScoredProject> model_scores,
                               std::span<const ScoredProject> benchmark_scores);

// Benchmark CSV: header project_id,score.
std::map<std::string, double> read_benchmark_csv(
    const std::filesystem::path& path);

struct BurnedFractionRow {
  std::string project_id;
  bool any_fire = false;
  double max_annual_fraction = 0.0;
  double cumulative_fraction = 0.0;  // cells burned in >= 1 window year
};

// Per-project burn statistics over the year window. The cell universe per
// project is the masked cells with valid fire values in every window year,
// so cumulative_fraction >= max_annual_fraction holds by construction.
std::vector<BurnedFractionRow> burned_fraction_report(
    const std::map<int, RasterGrid>& fire_by_year,
    std::span<const ProjectPolygon> polygons, YearRange window);

// Window-any fire labels per project, in polygon order.
std::vector<int> project_fire_labels(
    const std::map<int, RasterGrid>& fire_by_year,
    std::span<const ProjectPolygon> polygons, YearRange window);

}  // namespace pyrocast
