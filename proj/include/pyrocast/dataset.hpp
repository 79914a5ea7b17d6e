#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pyrocast/features.hpp"
#include "pyrocast/kbdi.hpp"
#include "pyrocast/raster.hpp"

namespace pyrocast {

struct SampleRecord {
  CellLocation loc;
  int year = 0;
  int label = 0;  // 1 = fire observed in the sample year
  FeatureVector features;
};

struct YearRange {
  int first = 0;
  int last = 0;
  bool contains(int y) const { return y >= first && y <= last; }
  int count() const { return last - first + 1; }
};

struct SplitSpec {
  YearRange train{2001, 2009};
  YearRange validation{2010, 2021};
  std::uint64_t seed = 0;
  void validate() const;
};

// Uniform sample without replacement over cells that are neither nodata
// (water) nor Agriculture. Deterministic for a given seed.
std::vector<CellLocation> sample_locations(const RasterGrid& landcover,
                                           std::size_t n, std::uint64_t seed);

// One record per (location, year) with the fire raster value as label;
// records whose fire value is nodata are dropped.
std::vector<SampleRecord> label_samples(
    const std::vector<CellLocation>& locations,
    const std::map<int, RasterGrid>& fire_by_year,
    const std::vector<int>& years);

// Partition by year range; records outside both ranges are discarded.
std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split_records(
    const std::vector<SampleRecord>& records, const SplitSpec& spec);

// Fills features (static channels + per-year KBDI mean) for each record,
// dropping masked locations and records without KBDI coverage. Static
// features are assembled once per distinct location.
std::vector<SampleRecord> attach_features(
    std::span<const SampleRecord> records, const LayerMap& layers,
    const std::map<int, RasterGrid>& kbdi_mean_by_year,
    const FeatureRegistry& registry);

// Sample CSV: row,col,year,label,kbdi_mean,f0..f<k-1> (raw feature values).
void write_samples_csv(std::span<const SampleRecord> records,
                       const std::filesystem::path& path);
std::vector<SampleRecord> read_samples_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic world: a desk-scale test surrogate with a known generative law
//   p* = logistic(a + b*(kbdi/800) + c*closed_forest_frac_1km + d*grassland)
// so that model recovery is checkable against recorded parameters.

struct GenerativeParams {
  double a = -2.0;
  double b = 2.5;
  double c = 1.5;
  double d = 1.0;
};

struct SyntheticWorldSpec {
  Eigen::Index rows = 64;
  Eigen::Index cols = 64;
  double cell_size = 300.0;
  int first_year = 2001;
  int last_year = 2012;
  int n_projects = 48;
  GenerativeParams gen;
  void validate() const;
};

struct SyntheticWorld {
  SyntheticWorldSpec spec;
  std::uint64_t seed = 0;
  LayerMap layers;  // landcover + bioclim_*/topography/human channels
  std::map<int, RasterGrid> kbdi_mean;  // per year, derived via kbdi_series
  std::map<int, RasterGrid> fire;       // per year, {0,1,NaN}
  std::vector<ProjectPolygon> polygons;
  GenerativeParams truth;
  RasterGrid closed_forest_frac_1km;  // cached generator input
  RasterGrid grassland_onehot;        // cached generator input

  // Regenerates the deterministic daily weather driving a cell's KBDI. The
  // series starts one spin-up year before spec.first_year.
  DailyWeatherSeries weather_for_cell(Eigen::Index row,
                                      Eigen::Index col) const;

  // Ground-truth fire probability for a cell-year (NaN when masked).
  double true_probability(Eigen::Index row, Eigen::Index col, int year) const;
};

SyntheticWorld generate_synthetic_world(const SyntheticWorldSpec& spec,
                                        std::uint64_t seed, int threads = 1);

// World directory layout: manifest.json + landcover.pyr + channel rasters +
// kbdi_mean_<year>.pyr + fire_<year>.pyr + polygons.json
// (+ weather/cell_<row>_<col>.csv for the first weather_csv_cells valid cells).
void write_world_dir(const SyntheticWorld& world,
                     const std::filesystem::path& dir, int weather_csv_cells);

struct WorldData {
  LayerMap layers;
  std::map<int, RasterGrid> kbdi_mean;
  std::map<int, RasterGrid> fire;
  std::vector<ProjectPolygon> polygons;
};

WorldData load_world_dir(const std::filesystem::path& dir);

// Synthetic future KBDI ensembles for the projection pipeline, one CSV per
// member per scenario under <dir>/<scenario>/<member_id>.csv with columns
// year,location_id,kbdi_mean. Locations are flat cell indices (row*cols+col)
// of valid cells inside project polygons. Scenario drift grows with the
// scenario's position in `scenarios` so later entries dominate earlier ones.
struct EnsembleSynthSpec {
  int members = 6;
  int first_year = 2013;
  int last_year = 2036;
  std::vector<std::string> scenarios = {"SSP1-2.6", "SSP2-4.5", "SSP5-8.5"};
};

void write_synthetic_ensembles(const SyntheticWorld& world,
                               const EnsembleSynthSpec& spec,
                               const std::filesystem::path& dir,
                               std::uint64_t seed);

}  // namespace pyrocast
