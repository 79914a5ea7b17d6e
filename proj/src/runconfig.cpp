#include "pyrocast/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pyrocast/rng.hpp"

namespace pyrocast {

namespace {

using nlohmann::json;

// Strict typed getter: present-but-wrong-type is a config error, absent keeps
// the default.
template <typename T>
void maybe_get(const json& node, const char* key, T& out) {
  if (!node.contains(key)) return;
  try {
    out = node.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("config error: bad type for '") + key + "'");
  }
}

YearRange year_range_from(const json& node, const char* key, YearRange fallback) {
  if (!node.contains(key)) return fallback;
  const auto& arr = node.at(key);
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number_integer() ||
      !arr[1].is_number_integer()) {
    throw config_error(std::string("config error: '") + key +
                       "' must be [first_year, last_year]");
  }
  return {arr[0].get<int>(), arr[1].get<int>()};
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.split.train = {2001, 2009};
  cfg.split.validation = {2010, 2012};
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw config_error("config error: cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();

  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::exception& e) {
    throw config_error("config error: invalid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw config_error("config error: top level must be an object");
  }
  const int schema = doc.value("schema_version", 0);
  if (schema != 1) {
    throw config_error("config error: unsupported schema_version " +
                       std::to_string(schema));
  }

  RunConfig cfg = default_run_config();
  cfg.config_hash = fnv1a64(raw);
  maybe_get(doc, "seed", cfg.seed);
  maybe_get(doc, "threads", cfg.threads);
  if (cfg.threads < 1) {
    throw config_error("config error: threads must be >= 1");
  }

  if (doc.contains("synthetic")) {
    const auto& s = doc.at("synthetic");
    long rows = cfg.world.rows, cols = cfg.world.cols;
    maybe_get(s, "rows", rows);
    maybe_get(s, "cols", cols);
    cfg.world.rows = rows;
    cfg.world.cols = cols;
    maybe_get(s, "cell_size", cfg.world.cell_size);
    maybe_get(s, "first_year", cfg.world.first_year);
    maybe_get(s, "last_year", cfg.world.last_year);
    maybe_get(s, "projects", cfg.world.n_projects);
    maybe_get(s, "train_locations", cfg.train_locations);
    maybe_get(s, "validation_locations", cfg.validation_locations);
    maybe_get(s, "weather_csv_cells", cfg.weather_csv_cells);
    if (s.contains("generator")) {
      const auto& g = s.at("generator");
      maybe_get(g, "a", cfg.world.gen.a);
      maybe_get(g, "b", cfg.world.gen.b);
      maybe_get(g, "c", cfg.world.gen.c);
      maybe_get(g, "d", cfg.world.gen.d);
    }
    if (s.contains("ensemble")) {
      const auto& e = s.at("ensemble");
      maybe_get(e, "members", cfg.ensemble_synth.members);
      maybe_get(e, "first_year", cfg.ensemble_synth.first_year);
      maybe_get(e, "last_year", cfg.ensemble_synth.last_year);
      maybe_get(e, "scenarios", cfg.ensemble_synth.scenarios);
    }
    cfg.world.validate();
  }

  if (doc.contains("split")) {
    const auto& s = doc.at("split");
    cfg.split.train = year_range_from(s, "train", cfg.split.train);
    cfg.split.validation = year_range_from(s, "validation", cfg.split.validation);
    cfg.split.validate();
  }

  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    std::vector<long> hidden;
    if (t.contains("hidden_dims")) {
      maybe_get(t, "hidden_dims", hidden);
      cfg.train.hidden_dims.clear();
      for (long d : hidden) cfg.train.hidden_dims.push_back(d);
    }
    maybe_get(t, "epochs", cfg.train.epochs);
    maybe_get(t, "batch_size", cfg.train.batch_size);
    maybe_get(t, "learning_rate", cfg.train.learning_rate);
    maybe_get(t, "adam_beta1", cfg.train.adam_beta1);
    maybe_get(t, "adam_beta2", cfg.train.adam_beta2);
    maybe_get(t, "adam_epsilon", cfg.train.adam_epsilon);
    maybe_get(t, "patience", cfg.train.patience);
    maybe_get(t, "nonneg_beta1", cfg.train.nonneg_beta1);
    maybe_get(t, "leaky_slope", cfg.train.leaky_slope);
    cfg.train.validate();
  }

  if (doc.contains("kbdi")) {
    const auto& k = doc.at("kbdi");
    maybe_get(k, "imperial", cfg.kbdi_imperial);
    maybe_get(k, "q0", cfg.kbdi_q0);
    if (k.contains("annual_rainfall_normal_in") &&
        !k.at("annual_rainfall_normal_in").is_null()) {
      double v = 0.0;
      maybe_get(k, "annual_rainfall_normal_in", v);
      cfg.kbdi_annual_rainfall_normal_in = v;
    }
    if (cfg.kbdi_q0 < 0.0 || cfg.kbdi_q0 > kKbdiMax) {
      throw config_error("config error: q0 outside [0, 800]");
    }
  }

  if (doc.contains("validate")) {
    const auto& v = doc.at("validate");
    std::string reduction = "mean";
    maybe_get(v, "reduction", reduction);
    if (reduction == "mean") {
      cfg.reduction = Reduction::Mean;
    } else if (reduction == "max") {
      cfg.reduction = Reduction::Max;
    } else {
      throw config_error("config error: reduction must be 'mean' or 'max'");
    }
    if (v.contains("benchmark_csv") && !v.at("benchmark_csv").is_null()) {
      std::string p;
      maybe_get(v, "benchmark_csv", p);
      cfg.benchmark_csv = p;
    }
  }

  if (doc.contains("projection")) {
    const auto& p = doc.at("projection");
    maybe_get(p, "scenarios", cfg.scenarios);
    cfg.baseline_window =
        year_range_from(p, "baseline_window", cfg.baseline_window);
    maybe_get(p, "smoothing_window", cfg.smoothing_window);
    maybe_get(p, "target_years", cfg.target_years);
    if (cfg.smoothing_window < 1) {
      throw config_error("config error: smoothing_window must be >= 1");
    }
    if (cfg.scenarios.empty()) {
      throw config_error("config error: projection needs >= 1 scenario");
    }
  }

  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    std::string s;
    const auto path_field = [&](const char* key,
                                std::filesystem::path& out) {
      if (!p.contains(key)) return;
      std::string value;
      maybe_get(p, key, value);
      out = value;
    };
    path_field("out_dir", cfg.out_dir);
    path_field("world_dir", cfg.world_dir);
    path_field("samples_dir", cfg.samples_dir);
    path_field("ensemble_dir", cfg.ensemble_dir);
    path_field("model_dir", cfg.model_dir);
    path_field("weather_dir", cfg.weather_dir);
    (void)s;
  }

  // Resolve relative paths against the config file's directory and fill
  // pipeline defaults.
  const auto base = path.parent_path();
  cfg.out_dir = resolve(base, cfg.out_dir);
  if (cfg.world_dir.empty()) cfg.world_dir = cfg.out_dir / "data" / "world";
  else cfg.world_dir = resolve(base, cfg.world_dir);
  if (cfg.samples_dir.empty()) cfg.samples_dir = cfg.out_dir / "data" / "samples";
  else cfg.samples_dir = resolve(base, cfg.samples_dir);
  if (cfg.ensemble_dir.empty()) cfg.ensemble_dir = cfg.out_dir / "data" / "ensemble";
  else cfg.ensemble_dir = resolve(base, cfg.ensemble_dir);
  if (cfg.model_dir.empty()) cfg.model_dir = cfg.out_dir / "model";
  else cfg.model_dir = resolve(base, cfg.model_dir);
  if (cfg.weather_dir.empty()) cfg.weather_dir = cfg.world_dir / "weather";
  else cfg.weather_dir = resolve(base, cfg.weather_dir);
  if (cfg.benchmark_csv) cfg.benchmark_csv = resolve(base, *cfg.benchmark_csv);

  return cfg;
}

}  // namespace pyrocast
