#include "pyrocast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pyrocast/csvio.hpp"

namespace pyrocast {

double auc(std::span<const ScoredProject> scored) {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (const auto& s : scored) {
    if (!std::isfinite(s.score)) {
      throw data_error("domain error: non-finite score for " + s.project_id);
    }
    if (s.label == 1) {
      ++n_pos;
    } else if (s.label == 0) {
      ++n_neg;
    } else {
      throw data_error("domain error: label must be 0 or 1");
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw data_error("degenerate-input error: AUC needs both classes");
  }

  // Rank-sum with average ranks over ties: AUC =
  // (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg).
  std::vector<std::size_t> idx(scored.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() &&
           scored[idx[j + 1]].score == scored[idx[i]].score) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (scored[idx[t]].label == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double n_pos_d = static_cast<double>(n_pos);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

std::vector<ScoredProject> project_scores(
    const RasterGrid& prob_raster, std::span<const ProjectPolygon> polygons,
    Reduction reduction) {
  std::vector<ScoredProject> out;
  out.reserve(polygons.size());
  for (const auto& poly : polygons) {
    const RasterGrid mask = rasterize_polygon(poly, prob_raster);
    double sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t count = 0;
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        if (mask.values(r, c) != 1.0) continue;
        const double v = prob_raster.values(r, c);
        if (std::isnan(v)) continue;
        sum += v;
        best = std::max(best, v);
        ++count;
      }
    }
    if (count == 0) {
      throw data_error("coverage error: project " + poly.project_id +
                       " has no valid cell on the raster");
    }
    ScoredProject sp;
    sp.project_id = poly.project_id;
    sp.score = reduction == Reduction::Mean
                   ? sum / static_cast<double>(count)
                   : best;
    out.push_back(std::move(sp));
  }
  return out;
}

ModelComparison compare_models(
    std::span<const ScoredProject> model_scores,
    std::span<const ScoredProject> benchmark_scores) {
  if (model_scores.size() != benchmark_scores.size()) {
    throw data_error("alignment error: project sets differ in size");
  }
  std::map<std::string, const ScoredProject*> by_id;
  for (const auto& s : benchmark_scores) by_id[s.project_id] = &s;
  std::vector<ScoredProject> aligned_benchmark;
  for (const auto& s : model_scores) {
    const auto it = by_id.find(s.project_id);
    if (it == by_id.end()) {
      throw data_error("alignment error: benchmark missing project " +
                       s.project_id);
    }
    if (it->second->label != s.label) {
      throw data_error("alignment error: label mismatch for " + s.project_id);
    }
    aligned_benchmark.push_back(*it->second);
  }
  ModelComparison cmp;
  cmp.auc_model = auc(model_scores);
  cmp.auc_benchmark = auc(aligned_benchmark);
  cmp.delta = cmp.auc_model - cmp.auc_benchmark;
  return cmp;
}

std::map<std::string, double> read_benchmark_csv(
    const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("project_id");
  const std::size_t score_col = table.column("score");
  std::map<std::string, double> scores;
  for (const auto& row : table.rows) {
    const auto& id = row[id_col];
    if (!scores.emplace(id, parse_double(row[score_col], path.string()))
             .second) {
      throw data_error("format error: duplicate benchmark project " + id);
    }
  }
  return scores;
}

namespace {

// Mask of cells inside the polygon with valid fire values in every window
// year; the per-project universe for burn statistics.
RasterGrid stable_project_mask(const ProjectPolygon& poly,
                               const std::map<int, RasterGrid>& fire_by_year,
                               YearRange window, const RasterGrid& tmpl) {
  RasterGrid mask = rasterize_polygon(poly, tmpl);
  for (int y = window.first; y <= window.last; ++y) {
    const auto it = fire_by_year.find(y);
    if (it == fire_by_year.end()) {
      throw data_error("coverage error: no fire raster for year " +
                       std::to_string(y));
    }
    if (!it->second.same_geometry(tmpl)) {
      throw data_error("shape error: fire raster geometry mismatch");
    }
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        if (mask.values(r, c) == 1.0 && std::isnan(it->second.values(r, c))) {
          mask.values(r, c) = 0.0;
        }
      }
    }
  }
  return mask;
}

}  // namespace

std::vector<BurnedFractionRow> burned_fraction_report(
    const std::map<int, RasterGrid>& fire_by_year,
    std::span<const ProjectPolygon> polygons, YearRange window) {
  if (window.first > window.last) {
    throw data_error("range error: empty burn window");
  }
  if (fire_by_year.empty()) {
    throw data_error("range error: no fire rasters");
  }
  const RasterGrid& tmpl = fire_by_year.begin()->second;

  std::vector<BurnedFractionRow> rows;
  rows.reserve(polygons.size());
  for (const auto& poly : polygons) {
    const RasterGrid mask =
        stable_project_mask(poly, fire_by_year, window, tmpl);

    // Union layer: 1 where any window year burned.
    RasterGrid burned_union = make_raster(tmpl.rows(), tmpl.cols(),
                                          tmpl.origin_x, tmpl.origin_y,
                                          tmpl.cell_size, 0.0);
    BurnedFractionRow row;
    row.project_id = poly.project_id;
    row.max_annual_fraction = 0.0;
    for (int y = window.first; y <= window.last; ++y) {
      const RasterGrid& fire = fire_by_year.at(y);
      const double annual = zonal_fraction(mask, fire, 0.5);
      if (!std::isnan(annual)) {
        row.max_annual_fraction = std::max(row.max_annual_fraction, annual);
      }
      burned_union.values =
          burned_union.values.max((fire.values >= 0.5).cast<double>());
    }
    const double cumulative = zonal_fraction(mask, burned_union, 0.5);
    row.cumulative_fraction = std::isnan(cumulative) ? 0.0 : cumulative;
    row.any_fire = row.cumulative_fraction > 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<int> project_fire_labels(
    const std::map<int, RasterGrid>& fire_by_year,
    std::span<const ProjectPolygon> polygons, YearRange window) {
  const auto report = burned_fraction_report(fire_by_year, polygons, window);
  std::vector<int> labels;
  labels.reserve(report.size());
  for (const auto& row : report) labels.push_back(row.any_fire ? 1 : 0);
  return labels;
}

}  // namespace pyrocast
