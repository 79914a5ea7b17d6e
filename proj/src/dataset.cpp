#include "pyrocast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "pyrocast/csvio.hpp"
#include "pyrocast/parallel.hpp"
#include "pyrocast/rng.hpp"

namespace pyrocast {

void SplitSpec::validate() const {
  if (train.first > train.last || validation.first > validation.last) {
    throw config_error("spec error: empty year range in split");
  }
  if (train.last >= validation.first) {
    throw config_error(
        "spec error: train range must precede and not overlap validation");
  }
}

std::vector<CellLocation> sample_locations(const RasterGrid& landcover,
                                           std::size_t n, std::uint64_t seed) {
  if (n < 1) throw config_error("spec error: sample count must be >= 1");
  std::vector<CellLocation> eligible;
  for (Eigen::Index r = 0; r < landcover.rows(); ++r) {
    for (Eigen::Index c = 0; c < landcover.cols(); ++c) {
      const auto cls = landcover_class_at(landcover, r, c);
      if (!cls) continue;  // water / nodata
      if (*cls == static_cast<int>(LandCover::Agriculture)) continue;
      eligible.push_back({r, c});
    }
  }
  if (eligible.size() < n) {
    throw data_error("capacity error: " + std::to_string(eligible.size()) +
                     " eligible cells, " + std::to_string(n) + " requested");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(n);
  return eligible;
}

std::vector<SampleRecord> label_samples(
    const std::vector<CellLocation>& locations,
    const std::map<int, RasterGrid>& fire_by_year,
    const std::vector<int>& years) {
  std::vector<SampleRecord> records;
  for (int year : years) {
    const auto it = fire_by_year.find(year);
    if (it == fire_by_year.end()) {
      throw data_error("coverage error: no fire raster for year " +
                       std::to_string(year));
    }
    const RasterGrid& fire = it->second;
    for (const auto& loc : locations) {
      if (loc.row < 0 || loc.row >= fire.rows() || loc.col < 0 ||
          loc.col >= fire.cols()) {
        throw data_error("shape error: location outside fire raster");
      }
      const double v = fire.values(loc.row, loc.col);
      if (std::isnan(v)) continue;  // unobserved cell-year
      if (v != 0.0 && v != 1.0) {
        throw data_error("domain error: fire raster is not {0,1,NaN}");
      }
      SampleRecord rec;
      rec.loc = loc;
      rec.year = year;
      rec.label = static_cast<int>(v);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> split_records(
    const std::vector<SampleRecord>& records, const SplitSpec& spec) {
  spec.validate();
  std::pair<std::vector<SampleRecord>, std::vector<SampleRecord>> out;
  for (const auto& rec : records) {
    if (spec.train.contains(rec.year)) {
      out.first.push_back(rec);
    } else if (spec.validation.contains(rec.year)) {
      out.second.push_back(rec);
    }
  }
  return out;
}

std::vector<SampleRecord> attach_features(
    std::span<const SampleRecord> records, const LayerMap& layers,
    const std::map<int, RasterGrid>& kbdi_mean_by_year,
    const FeatureRegistry& registry) {
  const auto landcover_it = layers.find("landcover");
  if (landcover_it == layers.end()) {
    throw data_error("registry error: missing 'landcover' layer");
  }
  const Eigen::Index cols = landcover_it->second.cols();

  std::unordered_map<std::int64_t, std::optional<FeatureVector>> cache;
  std::vector<SampleRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const std::int64_t flat = rec.loc.row * cols + rec.loc.col;
    auto it = cache.find(flat);
    if (it == cache.end()) {
      it = cache.emplace(flat, assemble_features(rec.loc, layers, registry))
               .first;
    }
    if (!it->second) continue;  // masked location
    const auto kbdi_it = kbdi_mean_by_year.find(rec.year);
    if (kbdi_it == kbdi_mean_by_year.end()) {
      throw data_error("coverage error: no KBDI raster for year " +
                       std::to_string(rec.year));
    }
    const double k = kbdi_it->second.values(rec.loc.row, rec.loc.col);
    if (std::isnan(k)) continue;
    SampleRecord filled = rec;
    filled.features = *it->second;
    filled.features.kbdi_annual_mean = k;
    out.push_back(std::move(filled));
  }
  return out;
}

void write_samples_csv(std::span<const SampleRecord> records,
                       const std::filesystem::path& path) {
  if (records.empty()) {
    throw data_error("domain error: refusing to write empty sample CSV");
  }
  const Eigen::Index width = records.front().features.static_features.size();
  std::string body = "row,col,year,label,kbdi_mean";
  for (Eigen::Index i = 0; i < width; ++i) {
    body += ",f" + std::to_string(i);
  }
  body += "\n";
  for (const auto& rec : records) {
    if (rec.features.static_features.size() != width) {
      throw data_error("shape error: inconsistent feature widths");
    }
    body += std::to_string(rec.loc.row) + "," + std::to_string(rec.loc.col) +
            "," + std::to_string(rec.year) + "," + std::to_string(rec.label) +
            "," + format_double(rec.features.kbdi_annual_mean);
    for (Eigen::Index i = 0; i < width; ++i) {
      body += ",";
      body += format_double(rec.features.static_features(i));
    }
    body += "\n";
  }
  write_text_file(path, body);
}

std::vector<SampleRecord> read_samples_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::string context = path.string();
  if (table.header.size() < 6 || table.header[0] != "row" ||
      table.header[1] != "col" || table.header[2] != "year" ||
      table.header[3] != "label" || table.header[4] != "kbdi_mean" ||
      table.header[5] != "f0") {
    throw data_error("format error: unexpected sample CSV header in " + context);
  }
  const std::size_t width = table.header.size() - 5;
  std::vector<SampleRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SampleRecord rec;
    rec.loc.row = parse_long(row[0], context);
    rec.loc.col = parse_long(row[1], context);
    rec.year = static_cast<int>(parse_long(row[2], context));
    rec.label = static_cast<int>(parse_long(row[3], context));
    if (rec.label != 0 && rec.label != 1) {
      throw data_error("domain error: label must be 0 or 1 in " + context);
    }
    rec.features.kbdi_annual_mean = parse_double(row[4], context);
    rec.features.static_features.resize(static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < width; ++i) {
      rec.features.static_features(static_cast<Eigen::Index>(i)) =
          parse_double(row[5 + i], context);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Synthetic world

void SyntheticWorldSpec::validate() const {
  if (rows < 8 || cols < 8) {
    throw config_error("spec error: synthetic world must be at least 8x8");
  }
  if (last_year - first_year + 1 < 4) {
    throw config_error("spec error: synthetic world needs >= 4 years");
  }
  if (n_projects < 1) {
    throw config_error("spec error: synthetic world needs >= 1 project");
  }
  if (cell_size <= 0.0) {
    throw config_error("spec error: nonpositive cell size");
  }
}

namespace {

int days_in_year(int y) {
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return leap ? 366 : 365;
}

// Standardized smooth random field: white noise, several box-blur passes,
// then z-scored over the grid.
RasterArray smooth_field(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                         int passes, Eigen::Index half_width) {
  RasterArray field(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      field(r, c) = rng.normal();
    }
  }
  RasterArray tmp(rows, cols);
  for (int pass = 0; pass < passes; ++pass) {
    // horizontal
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index d = -half_width; d <= half_width; ++d) {
          const Eigen::Index cc = c + d;
          if (cc < 0 || cc >= cols) continue;
          sum += field(r, cc);
          ++count;
        }
        tmp(r, c) = sum / count;
      }
    }
    // vertical
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index d = -half_width; d <= half_width; ++d) {
          const Eigen::Index rr = r + d;
          if (rr < 0 || rr >= rows) continue;
          sum += tmp(rr, c);
          ++count;
        }
        field(r, c) = sum / count;
      }
    }
  }
  const double mean = field.mean();
  const double sd = std::sqrt((field - mean).square().mean());
  return (field - mean) / (sd > 0.0 ? sd : 1.0);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct WeatherClimate {
  RasterArray temp_base_f;   // per-cell mean summer-peak temperature
  RasterArray wetness;       // per-cell wet-day propensity in (0,1)
  std::vector<double> year_temp_anomaly;  // index 0 = spin-up year
  std::vector<double> year_rain_scale;
};

std::uint64_t cell_stream_seed(std::uint64_t root, std::string_view label,
                               std::uint64_t flat) {
  return splitmix64(derive_seed(root, label) + flat * 0x9e3779b97f4a7c15ull);
}

WeatherClimate build_climate(const SyntheticWorldSpec& spec,
                             std::uint64_t seed) {
  WeatherClimate cl;
  Rng field_rng(derive_seed(seed, "climate_fields"));
  const RasterArray t_field =
      smooth_field(spec.rows, spec.cols, field_rng, 2, 4);
  const RasterArray w_field =
      smooth_field(spec.rows, spec.cols, field_rng, 2, 4);
  cl.temp_base_f = 62.0 + 14.0 * t_field;
  cl.wetness = (1.0 / (1.0 + (-0.9 * w_field).exp()));

  const int n_years = spec.last_year - (spec.first_year - 1) + 1;
  Rng year_rng(derive_seed(seed, "year_anomalies"));
  cl.year_temp_anomaly.resize(static_cast<std::size_t>(n_years));
  cl.year_rain_scale.resize(static_cast<std::size_t>(n_years));
  for (int i = 0; i < n_years; ++i) {
    cl.year_temp_anomaly[static_cast<std::size_t>(i)] =
        0.25 * i + 2.5 * year_rng.normal();
    cl.year_rain_scale[static_cast<std::size_t>(i)] =
        std::exp(0.35 * year_rng.normal());
  }
  return cl;
}

DailyWeatherSeries make_cell_weather(const SyntheticWorldSpec& spec,
                                     std::uint64_t seed,
                                     const WeatherClimate& climate,
                                     Eigen::Index row, Eigen::Index col) {
  const std::uint64_t flat =
      static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(spec.cols) +
      static_cast<std::uint64_t>(col);
  Rng rng(cell_stream_seed(seed, "weather", flat));

  const double t_base = climate.temp_base_f(row, col);
  const double wet = climate.wetness(row, col);
  const double p_wet = 0.08 + 0.38 * wet;
  const double rain_mean_in = 0.18 + 0.35 * wet;

  DailyWeatherSeries series;
  const int start_year = spec.first_year - 1;  // spin-up year
  series.start_date = std::chrono::year_month_day{
      std::chrono::year{start_year}, std::chrono::January, std::chrono::day{1}};
  series.annual_rainfall_normal_in = p_wet * rain_mean_in * 365.25;

  for (int y = start_year; y <= spec.last_year; ++y) {
    const auto yi = static_cast<std::size_t>(y - start_year);
    const int n_days = days_in_year(y);
    const double anomaly = climate.year_temp_anomaly[yi];
    const double rain_scale = climate.year_rain_scale[yi];
    for (int d = 0; d < n_days; ++d) {
      const double season =
          std::sin(2.0 * 3.141592653589793 * (d - 105.0) / 365.25);
      const double tmax =
          t_base + 16.0 * season + anomaly + 4.0 * rng.normal();
      double rain = 0.0;
      if (rng.bernoulli(p_wet)) {
        rain = -rain_mean_in * std::log(1.0 - rng.uniform()) * rain_scale;
      }
      series.tmax_f.push_back(tmax);
      series.precip_in.push_back(rain);
    }
  }
  return series;
}

}  // namespace

DailyWeatherSeries SyntheticWorld::weather_for_cell(Eigen::Index row,
                                                    Eigen::Index col) const {
  const WeatherClimate climate = build_climate(spec, seed);
  return make_cell_weather(spec, seed, climate, row, col);
}

double SyntheticWorld::true_probability(Eigen::Index row, Eigen::Index col,
                                        int year) const {
  const auto& landcover = layers.at("landcover");
  if (std::isnan(landcover.values(row, col))) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double k = kbdi_mean.at(year).values(row, col) / kKbdiMax;
  return logistic(truth.a + truth.b * k +
                  truth.c * closed_forest_frac_1km.values(row, col) +
                  truth.d * grassland_onehot.values(row, col));
}

SyntheticWorld generate_synthetic_world(const SyntheticWorldSpec& spec,
                                        std::uint64_t seed, int threads) {
  spec.validate();
  SyntheticWorld world;
  world.spec = spec;
  world.seed = seed;
  world.truth = spec.gen;

  const Eigen::Index rows = spec.rows;
  const Eigen::Index cols = spec.cols;
  const double origin_x = 0.0;
  const double origin_y = static_cast<double>(rows) * spec.cell_size;
  const auto blank = [&](double fill) {
    return make_raster(rows, cols, origin_x, origin_y, spec.cell_size, fill);
  };

  // Land cover: quantile bands of a smooth field so classes are spatially
  // coherent. Cumulative shares: water .03, closed .30, open .20, grass .22,
  // urban .05, agriculture .12, other .08.
  Rng lc_rng(derive_seed(seed, "landcover"));
  const RasterArray lc_field = smooth_field(rows, cols, lc_rng, 2, 3);
  std::vector<double> sorted(lc_field.data(), lc_field.data() + lc_field.size());
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        q * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
  };
  const double t_water = quantile(0.03);
  const double t_closed = quantile(0.33);
  const double t_open = quantile(0.53);
  const double t_grass = quantile(0.75);
  const double t_urban = quantile(0.80);
  const double t_agri = quantile(0.92);

  RasterGrid landcover = blank(0.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = lc_field(r, c);
      double cls;
      if (v <= t_water) {
        cls = std::numeric_limits<double>::quiet_NaN();
      } else if (v <= t_closed) {
        cls = static_cast<double>(LandCover::ClosedForest);
      } else if (v <= t_open) {
        cls = static_cast<double>(LandCover::OpenForest);
      } else if (v <= t_grass) {
        cls = static_cast<double>(LandCover::Grassland);
      } else if (v <= t_urban) {
        cls = static_cast<double>(LandCover::Urban);
      } else if (v <= t_agri) {
        cls = static_cast<double>(LandCover::Agriculture);
      } else {
        cls = static_cast<double>(LandCover::Other);
      }
      landcover.values(r, c) = cls;
    }
  }
  world.layers["landcover"] = landcover;

  // Bioclim / topography / human channels: independent smooth fields with
  // channel-specific affine ranges.
  const FeatureRegistry registry = FeatureRegistry::standard();
  Rng ch_rng(derive_seed(seed, "channels"));
  for (const auto& ch : registry.channels) {
    if (ch.group != ChannelGroup::Bioclim &&
        ch.group != ChannelGroup::Topography && ch.group != ChannelGroup::Human) {
      continue;
    }
    const RasterArray field = smooth_field(rows, cols, ch_rng, 2, 3);
    const double scale = 0.5 + 4.0 * ch_rng.uniform();
    const double offset = -10.0 + 20.0 * ch_rng.uniform();
    RasterGrid layer = blank(0.0);
    layer.values = offset + scale * field;
    world.layers[ch.source] = std::move(layer);
  }

  // Weather -> daily KBDI -> annual means, per cell, one spin-up year.
  // Cells are independent, so row blocks can run on worker threads.
  const WeatherClimate climate = build_climate(spec, seed);
  for (int y = spec.first_year; y <= spec.last_year; ++y) {
    world.kbdi_mean[y] = blank(0.0);
  }
  parallel_for(rows, threads, [&](long row_begin, long row_end) {
    for (Eigen::Index r = row_begin; r < row_end; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const DailyWeatherSeries weather =
            make_cell_weather(spec, seed, climate, r, c);
        const KbdiSeries series = kbdi_series(weather, 0.0);
        for (int y = spec.first_year; y <= spec.last_year; ++y) {
          world.kbdi_mean[y].values(r, c) = annual_mean_kbdi(series, y);
        }
      }
    }
  });

  // Generator inputs derived from land cover.
  world.closed_forest_frac_1km = blank(std::numeric_limits<double>::quiet_NaN());
  world.grassland_onehot = blank(std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto cls = landcover_class_at(landcover, r, c);
      if (!cls) continue;
      const std::array<double, 3> radii = {1000.0, 1000.0, 1000.0};
      const auto fracs = radius_fractions(landcover, r, c, radii);
      world.closed_forest_frac_1km.values(r, c) =
          fracs[static_cast<std::size_t>(LandCover::ClosedForest)];
      world.grassland_onehot.values(r, c) =
          *cls == static_cast<int>(LandCover::Grassland) ? 1.0 : 0.0;
    }
  }

  // Fire labels: Bernoulli draws from the generative probability.
  const std::uint64_t label_seed = derive_seed(seed, "fire_labels");
  for (int y = spec.first_year; y <= spec.last_year; ++y) {
    RasterGrid fire = blank(std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double p = world.true_probability(r, c, y);
        if (std::isnan(p)) continue;
        const std::uint64_t flat =
            static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(cols) +
            static_cast<std::uint64_t>(c);
        Rng rng(splitmix64(label_seed +
                           flat * 1000003ull +
                           static_cast<std::uint64_t>(y - spec.first_year)));
        fire.values(r, c) = rng.bernoulli(p) ? 1.0 : 0.0;
      }
    }
    world.fire[y] = std::move(fire);
  }

  // Project polygons: jittered rectangles, 3-12 cells across, fully inside
  // the grid. Continuous offsets keep edges off cell centers.
  Rng poly_rng(derive_seed(seed, "projects"));
  for (int i = 0; i < spec.n_projects; ++i) {
    const double w = (3.0 + 9.0 * poly_rng.uniform()) * spec.cell_size;
    const double h = (3.0 + 9.0 * poly_rng.uniform()) * spec.cell_size;
    const double max_x = static_cast<double>(cols) * spec.cell_size - w;
    const double max_y = static_cast<double>(rows) * spec.cell_size - h;
    const double x0 = origin_x + poly_rng.uniform() * max_x;
    const double y1 = origin_y - poly_rng.uniform() * max_y;  // top edge
    const double y0 = y1 - h;
    char id[16];
    std::snprintf(id, sizeof(id), "SYN%03d", i + 1);
    ProjectPolygon poly;
    poly.project_id = id;
    poly.rings = {{{x0, y0}, {x0 + w, y0}, {x0 + w, y1}, {x0, y1}, {x0, y0}}};
    world.polygons.push_back(std::move(poly));
  }

  return world;
}

void write_world_dir(const SyntheticWorld& world,
                     const std::filesystem::path& dir, int weather_csv_cells) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = world.seed;
  manifest["rows"] = world.spec.rows;
  manifest["cols"] = world.spec.cols;
  manifest["cell_size"] = world.spec.cell_size;
  manifest["first_year"] = world.spec.first_year;
  manifest["last_year"] = world.spec.last_year;
  manifest["truth"] = {{"a", world.truth.a},
                       {"b", world.truth.b},
                       {"c", world.truth.c},
                       {"d", world.truth.d}};

  nlohmann::json layer_files = nlohmann::json::array();
  for (const auto& [name, layer] : world.layers) {
    const std::string file = name + ".pyr";
    write_raster(layer, dir / file);
    layer_files.push_back(name);
  }
  manifest["layers"] = layer_files;

  nlohmann::json years = nlohmann::json::array();
  for (const auto& [year, grid] : world.kbdi_mean) {
    write_raster(grid, dir / ("kbdi_mean_" + std::to_string(year) + ".pyr"));
    years.push_back(year);
  }
  for (const auto& [year, grid] : world.fire) {
    write_raster(grid, dir / ("fire_" + std::to_string(year) + ".pyr"));
  }
  manifest["years"] = years;

  write_polygons(world.polygons, dir / "polygons.json");
  manifest["polygons"] = "polygons.json";

  FeatureRegistry registry = FeatureRegistry::standard();
  write_registry(registry, dir / "registry.json");
  manifest["registry"] = "registry.json";

  // Sample per-cell daily weather, for driving the kbdi command on synthetic
  // data. Metric units to match the default ingestion path.
  nlohmann::json weather_files = nlohmann::json::array();
  int written = 0;
  for (Eigen::Index r = 0; r < world.spec.rows && written < weather_csv_cells;
       ++r) {
    for (Eigen::Index c = 0;
         c < world.spec.cols && written < weather_csv_cells; ++c) {
      if (std::isnan(world.layers.at("landcover").values(r, c))) continue;
      const DailyWeatherSeries weather = world.weather_for_cell(r, c);
      std::string body = "date,tmax_c,precip_mm\n";
      std::chrono::sys_days date{weather.start_date};
      for (std::size_t i = 0; i < weather.tmax_f.size(); ++i) {
        const std::chrono::year_month_day ymd{date};
        char datebuf[16];
        std::snprintf(datebuf, sizeof(datebuf), "%04d-%02u-%02u",
                      static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()));
        body += datebuf;
        body += "," + format_double((weather.tmax_f[i] - 32.0) * 5.0 / 9.0);
        body += "," + format_double(weather.precip_in[i] * 25.4);
        body += "\n";
        date += std::chrono::days{1};
      }
      const std::string name = "weather/cell_" + std::to_string(r) + "_" +
                               std::to_string(c) + ".csv";
      write_text_file(dir / name, body);
      weather_files.push_back(name);
      ++written;
    }
  }
  manifest["weather_csvs"] = weather_files;

  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

WorldData load_world_dir(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) {
    throw data_error("dependency error: missing " + manifest_path.string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("format error: invalid world manifest: " +
                     std::string(e.what()));
  }
  WorldData world;
  for (const auto& name : manifest.at("layers")) {
    const std::string key = name.get<std::string>();
    world.layers[key] = read_raster(dir / (key + ".pyr"));
  }
  for (const auto& year_node : manifest.at("years")) {
    const int year = year_node.get<int>();
    world.kbdi_mean[year] =
        read_raster(dir / ("kbdi_mean_" + std::to_string(year) + ".pyr"));
    world.fire[year] =
        read_raster(dir / ("fire_" + std::to_string(year) + ".pyr"));
  }
  world.polygons = read_polygons(dir / manifest.value("polygons", "polygons.json"));
  return world;
}

void write_synthetic_ensembles(const SyntheticWorld& world,
                               const EnsembleSynthSpec& spec,
                               const std::filesystem::path& dir,
                               std::uint64_t seed) {
  if (spec.members < 1 || spec.members > 28) {
    throw config_error("spec error: ensemble members must be in 1..28");
  }
  if (spec.first_year > spec.last_year) {
    throw config_error("spec error: empty ensemble year range");
  }

  // Locations: valid cells inside any project polygon, as flat indices.
  const RasterGrid& landcover = world.layers.at("landcover");
  RasterGrid covered = make_raster(landcover.rows(), landcover.cols(),
                                   landcover.origin_x, landcover.origin_y,
                                   landcover.cell_size, 0.0);
  for (const auto& poly : world.polygons) {
    const RasterGrid mask = rasterize_polygon(poly, landcover);
    covered.values = covered.values.max(mask.values);
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index r = 0; r < landcover.rows(); ++r) {
    for (Eigen::Index c = 0; c < landcover.cols(); ++c) {
      if (covered.values(r, c) == 1.0 && !std::isnan(landcover.values(r, c))) {
        cells.emplace_back(r, c);
      }
    }
  }

  // Per-cell baseline: mean KBDI over the last three world years.
  const int base_last = world.spec.last_year;
  const int base_first = std::max(world.spec.first_year, base_last - 2);
  std::vector<double> base(cells.size(), 0.0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double sum = 0.0;
    for (int y = base_first; y <= base_last; ++y) {
      sum += world.kbdi_mean.at(y).values(cells[i].first, cells[i].second);
    }
    base[i] = sum / (base_last - base_first + 1);
  }

  // Member offsets and year noise are shared across scenarios, so a scenario
  // with larger drift dominates pointwise by construction.
  Rng member_rng(derive_seed(seed, "ensemble_members"));
  std::vector<double> member_offset(static_cast<std::size_t>(spec.members));
  for (auto& v : member_offset) v = 14.0 * member_rng.normal();
  const int n_years = spec.last_year - spec.first_year + 1;
  std::vector<std::vector<double>> year_noise(
      static_cast<std::size_t>(spec.members),
      std::vector<double>(static_cast<std::size_t>(n_years)));
  for (auto& member : year_noise) {
    for (auto& v : member) v = 8.0 * member_rng.normal();
  }

  for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
    const double drift_per_year = 0.4 + 1.6 * static_cast<double>(s);
    const std::filesystem::path scenario_dir = dir / spec.scenarios[s];
    std::filesystem::create_directories(scenario_dir);
    for (int m = 0; m < spec.members; ++m) {
      std::string body = "year,location_id,kbdi_mean\n";
      for (int y = spec.first_year; y <= spec.last_year; ++y) {
        const auto yi = static_cast<std::size_t>(y - spec.first_year);
        const double shift =
            member_offset[static_cast<std::size_t>(m)] +
            year_noise[static_cast<std::size_t>(m)][yi] +
            drift_per_year * (y - world.spec.last_year);
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const std::int64_t flat =
              cells[i].first * landcover.cols() + cells[i].second;
          const double k = std::clamp(base[i] + shift, 0.0, kKbdiMax);
          body += std::to_string(y) + "," + std::to_string(flat) + "," +
                  format_double(k) + "\n";
        }
      }
      char name[24];
      std::snprintf(name, sizeof(name), "member_%02d.csv", m);
      write_text_file(scenario_dir / name, body);
    }
  }
}

}  // namespace pyrocast
