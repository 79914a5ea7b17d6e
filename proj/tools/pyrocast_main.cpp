#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pyrocast/csvio.hpp"
#include "pyrocast/dataset.hpp"
#include "pyrocast/eval.hpp"
#include "pyrocast/features.hpp"
#include "pyrocast/kbdi.hpp"
#include "pyrocast/model.hpp"
#include "pyrocast/projection.hpp"
#include "pyrocast/raster.hpp"
#include "pyrocast/rng.hpp"
#include "pyrocast/runconfig.hpp"
#include "pyrocast/version.hpp"

namespace fs = std::filesystem;
using namespace pyrocast;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

RunConfig effective_config(const GlobalOpts& opts) {
  RunConfig cfg = opts.config_path.empty()
                      ? default_run_config()
                      : load_run_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) {
    if (*opts.threads < 1) {
      throw config_error("config error: threads must be >= 1");
    }
    cfg.threads = *opts.threads;
  }
  if (opts.out) {
    const fs::path out = *opts.out;
    // Rebase the pipeline defaults onto the new out dir, keeping any path
    // that was set explicitly in the config.
    const RunConfig defaults_from_cfg = cfg;
    cfg.out_dir = out;
    if (defaults_from_cfg.world_dir ==
        defaults_from_cfg.out_dir / "data" / "world") {
      cfg.world_dir = out / "data" / "world";
      cfg.weather_dir = cfg.world_dir / "weather";
    }
    if (defaults_from_cfg.samples_dir ==
        defaults_from_cfg.out_dir / "data" / "samples") {
      cfg.samples_dir = out / "data" / "samples";
    }
    if (defaults_from_cfg.ensemble_dir ==
        defaults_from_cfg.out_dir / "data" / "ensemble") {
      cfg.ensemble_dir = out / "data" / "ensemble";
    }
    if (defaults_from_cfg.model_dir == defaults_from_cfg.out_dir / "model") {
      cfg.model_dir = out / "model";
    }
  }
  return cfg;
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) {
    throw data_error("dependency error: missing " + p.string());
  }
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunConfig& cfg) {
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["command"] = command;
  manifest["toolkit_version"] = kToolkitVersion;
  manifest["seed"] = cfg.seed;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(cfg.config_hash));
  manifest["config_hash"] = hash_hex;
  const auto now = std::chrono::system_clock::now();
  manifest["generated_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                                 now.time_since_epoch())
                                 .count();
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

FeatureRegistry load_fitted_registry(const fs::path& model_dir,
                                     std::uint64_t expected_hash) {
  const fs::path reg_path = model_dir / "registry.json";
  require_exists(reg_path);
  FeatureRegistry registry = read_registry(reg_path);
  if (!registry.fitted) {
    throw data_error("registry error: " + reg_path.string() + " is unfitted");
  }
  if (expected_hash != 0 && registry.content_hash() != expected_hash) {
    throw data_error("registry error: registry hash does not match model");
  }
  return registry;
}

// Cellwise mean of per-year probability rasters (used for window scoring).
RasterGrid mean_probability_raster(const NetworkParams& params,
                                   const LayerMap& layers,
                                   const FeatureRegistry& registry,
                                   const std::map<int, RasterGrid>& kbdi,
                                   YearRange window) {
  std::optional<RasterGrid> acc;
  int count = 0;
  for (int y = window.first; y <= window.last; ++y) {
    const auto it = kbdi.find(y);
    if (it == kbdi.end()) {
      throw data_error("coverage error: no KBDI raster for year " +
                       std::to_string(y));
    }
    RasterGrid prob = predict_raster(params, layers, registry, it->second);
    if (!acc) {
      acc = std::move(prob);
    } else {
      acc->values += prob.values;
    }
    ++count;
  }
  acc->values /= static_cast<double>(count);
  return *acc;
}

int cmd_synthgen(const RunConfig& cfg) {
  SyntheticWorldSpec spec = cfg.world;
  const SyntheticWorld world =
      generate_synthetic_world(spec, derive_seed(cfg.seed, "world"), cfg.threads);
  write_world_dir(world, cfg.world_dir, cfg.weather_csv_cells);

  // Fixed per-split location sets, labeled over each split's year range.
  const std::vector<int> train_years = [&] {
    std::vector<int> years;
    for (int y = cfg.split.train.first; y <= cfg.split.train.last; ++y) {
      years.push_back(y);
    }
    return years;
  }();
  const std::vector<int> val_years = [&] {
    std::vector<int> years;
    for (int y = cfg.split.validation.first; y <= cfg.split.validation.last;
         ++y) {
      years.push_back(y);
    }
    return years;
  }();
  cfg.split.validate();
  if (!YearRange{spec.first_year, spec.last_year}.contains(cfg.split.train.first) ||
      !YearRange{spec.first_year, spec.last_year}.contains(
          cfg.split.validation.last)) {
    throw config_error("config error: split years outside world years");
  }

  const RasterGrid& landcover = world.layers.at("landcover");
  const FeatureRegistry registry = FeatureRegistry::standard();
  const auto train_locs = sample_locations(
      landcover, cfg.train_locations, derive_seed(cfg.seed, "sample_train"));
  const auto val_locs =
      sample_locations(landcover, cfg.validation_locations,
                       derive_seed(cfg.seed, "sample_validation"));

  const auto train_skeletons = label_samples(train_locs, world.fire, train_years);
  const auto val_skeletons = label_samples(val_locs, world.fire, val_years);
  const auto train_records =
      attach_features(train_skeletons, world.layers, world.kbdi_mean, registry);
  const auto val_records =
      attach_features(val_skeletons, world.layers, world.kbdi_mean, registry);
  write_samples_csv(train_records, cfg.samples_dir / "train.csv");
  write_samples_csv(val_records, cfg.samples_dir / "validation.csv");

  write_synthetic_ensembles(world, cfg.ensemble_synth, cfg.ensemble_dir,
                            derive_seed(cfg.seed, "ensemble"));

  write_manifest(cfg.out_dir / "data", "synthgen", cfg);
  std::cout << "synthgen: " << train_records.size() << " train / "
            << val_records.size() << " validation samples, "
            << world.polygons.size() << " projects\n";
  return 0;
}

int cmd_kbdi(const RunConfig& cfg) {
  require_exists(cfg.weather_dir);
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(cfg.weather_dir)) {
    if (entry.path().extension() == ".csv") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) {
    throw data_error("dependency error: no weather CSVs in " +
                     cfg.weather_dir.string());
  }
  const fs::path out = cfg.out_dir / "kbdi";
  for (const auto& input : inputs) {
    const DailyWeatherSeries weather = read_weather_csv(
        input, cfg.kbdi_imperial, cfg.kbdi_annual_rainfall_normal_in);
    const KbdiSeries series = kbdi_series(weather, cfg.kbdi_q0);
    std::string body = "date,kbdi\n";
    std::chrono::sys_days date{series.start_date};
    for (double v : series.values) {
      const std::chrono::year_month_day ymd{date};
      char datebuf[16];
      std::snprintf(datebuf, sizeof(datebuf), "%04d-%02u-%02u",
                    static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()),
                    static_cast<unsigned>(ymd.day()));
      body += datebuf;
      body += ",";
      body += format_double(v);
      body += "\n";
      date += std::chrono::days{1};
    }
    write_text_file(out / input.filename(), body);
  }
  write_manifest(out, "kbdi", cfg);
  std::cout << "kbdi: " << inputs.size() << " series written\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const fs::path train_csv = cfg.samples_dir / "train.csv";
  const fs::path val_csv = cfg.samples_dir / "validation.csv";
  require_exists(train_csv);
  require_exists(val_csv);

  const auto raw_train = read_samples_csv(train_csv);
  const auto raw_val = read_samples_csv(val_csv);
  if (raw_train.empty() || raw_val.empty()) {
    throw data_error("domain error: empty sample sets");
  }

  // Normalizer is fit on training samples only.
  FeatureRegistry registry;
  const fs::path world_registry = cfg.world_dir / "registry.json";
  if (fs::exists(world_registry)) {
    registry = read_registry(world_registry);
  } else {
    registry = FeatureRegistry::standard();
  }
  std::vector<FeatureVector> train_features;
  train_features.reserve(raw_train.size());
  for (const auto& rec : raw_train) train_features.push_back(rec.features);
  fit_normalizer(registry, train_features);

  auto normalize_all = [&](const std::vector<SampleRecord>& records) {
    std::vector<SampleRecord> out = records;
    for (auto& rec : out) {
      rec.features = apply_normalizer(rec.features, registry);
    }
    return out;
  };
  const auto train_set = normalize_all(raw_train);
  const auto val_set = normalize_all(raw_val);

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = derive_seed(cfg.seed, "train");
  const TrainResult result = pyrocast::train(train_set, val_set, train_cfg);

  write_registry(registry, cfg.model_dir / "registry.json");
  save_model(result.params, registry.content_hash(),
             cfg.model_dir / "model.json");
  write_history_csv(result.history, cfg.model_dir / "history.csv");
  write_manifest(cfg.model_dir, "train", cfg);
  std::cout << "train: best epoch " << result.best_epoch << ", val loss "
            << format_double(result.history[static_cast<std::size_t>(
                                                result.best_epoch)]
                                 .validation)
            << "\n";
  return 0;
}

struct LoadedModel {
  NetworkParams params;
  FeatureRegistry registry;
  WorldData world;
};

LoadedModel load_model_and_world(const RunConfig& cfg) {
  require_exists(cfg.model_dir / "model.json");
  require_exists(cfg.world_dir / "manifest.json");
  std::uint64_t registry_hash = 0;
  LoadedModel loaded{load_model(cfg.model_dir / "model.json", &registry_hash),
                     load_fitted_registry(cfg.model_dir, registry_hash),
                     load_world_dir(cfg.world_dir)};
  return loaded;
}

int cmd_predict(const RunConfig& cfg) {
  LoadedModel loaded = load_model_and_world(cfg);
  const fs::path out = cfg.out_dir / "predict";
  for (const auto& [year, kbdi] : loaded.world.kbdi_mean) {
    const RasterGrid prob =
        predict_raster(loaded.params, loaded.world.layers, loaded.registry, kbdi);
    write_raster(prob, out / ("prob_" + std::to_string(year) + ".pyr"));
  }
  write_manifest(out, "predict", cfg);
  std::cout << "predict: " << loaded.world.kbdi_mean.size()
            << " probability rasters\n";
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  LoadedModel loaded = load_model_and_world(cfg);
  const YearRange window = cfg.split.validation;

  const RasterGrid mean_prob =
      mean_probability_raster(loaded.params, loaded.world.layers,
                              loaded.registry, loaded.world.kbdi_mean, window);
  std::vector<ScoredProject> scored =
      project_scores(mean_prob, loaded.world.polygons, cfg.reduction);
  const std::vector<int> labels =
      project_fire_labels(loaded.world.fire, loaded.world.polygons, window);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].label = labels[i];
  }

  nlohmann::json report;
  report["schema_version"] = 1;
  report["validation_window"] = {window.first, window.last};
  report["auc_model"] = auc(scored);

  nlohmann::json rows = nlohmann::json::array();
  std::optional<ModelComparison> comparison;
  if (cfg.benchmark_csv) {
    require_exists(*cfg.benchmark_csv);
    const auto benchmark = read_benchmark_csv(*cfg.benchmark_csv);
    std::vector<ScoredProject> bench_scored;
    for (const auto& s : scored) {
      const auto it = benchmark.find(s.project_id);
      if (it == benchmark.end()) {
        throw data_error("alignment error: benchmark missing project " +
                         s.project_id);
      }
      bench_scored.push_back({s.project_id, it->second, s.label});
    }
    comparison = compare_models(scored, bench_scored);
    report["auc_benchmark"] = comparison->auc_benchmark;
    report["delta"] = comparison->delta;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      rows.push_back({{"project_id", scored[i].project_id},
                      {"score", scored[i].score},
                      {"benchmark_score", bench_scored[i].score},
                      {"label", scored[i].label}});
    }
  } else {
    for (const auto& s : scored) {
      rows.push_back({{"project_id", s.project_id},
                      {"score", s.score},
                      {"label", s.label}});
    }
  }
  report["projects"] = std::move(rows);

  const auto burn_report = burned_fraction_report(
      loaded.world.fire, loaded.world.polygons, window);
  nlohmann::json burns = nlohmann::json::array();
  for (const auto& row : burn_report) {
    burns.push_back({{"project_id", row.project_id},
                     {"any_fire", row.any_fire},
                     {"max_annual_fraction", row.max_annual_fraction},
                     {"cumulative_fraction", row.cumulative_fraction}});
  }
  report["burned_fractions"] = std::move(burns);

  const fs::path out = cfg.out_dir / "validate";
  write_text_file(out / "report.json", report.dump(2) + "\n");
  write_manifest(out, "validate", cfg);
  std::cout << "validate: AUC " << format_double(report["auc_model"].get<double>());
  if (comparison) {
    std::cout << " vs benchmark " << format_double(comparison->auc_benchmark)
              << " (delta " << format_double(comparison->delta) << ")";
  }
  std::cout << "\n";
  return 0;
}

int cmd_project(const RunConfig& cfg) {
  LoadedModel loaded = load_model_and_world(cfg);
  std::vector<ScenarioProjection> projections;
  std::vector<RelativeChangeSummary> changes;
  for (const auto& scenario : cfg.scenarios) {
    const fs::path dir = cfg.ensemble_dir / scenario;
    require_exists(dir);
    std::vector<fs::path> member_csvs;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") {
        member_csvs.push_back(entry.path());
      }
    }
    std::sort(member_csvs.begin(), member_csvs.end());
    const ScenarioEnsemble ensemble =
        read_scenario_ensemble(scenario, member_csvs);
    ScenarioProjection proj = project_scenario(
        loaded.params, loaded.world.layers, loaded.registry, ensemble,
        loaded.world.polygons, cfg.smoothing_window);
    for (int target : cfg.target_years) {
      if (target < ensemble.first_year || target > ensemble.last_year) continue;
      changes.push_back(
          relative_change_summary(proj, cfg.baseline_window, target));
    }
    projections.push_back(std::move(proj));
  }
  const fs::path out = cfg.out_dir / "project";
  write_projection_csv(projections, out / "projection.csv");
  write_changes_csv(changes, out / "changes.csv");
  write_manifest(out, "project", cfg);
  std::cout << "project: " << projections.size() << " scenarios, "
            << changes.size() << " change summaries\n";
  return 0;
}

int cmd_explain(const RunConfig& cfg) {
  LoadedModel loaded = load_model_and_world(cfg);
  const ExplainMap map =
      explain(loaded.params, loaded.world.layers, loaded.registry);
  const fs::path out = cfg.out_dir / "explain";
  write_raster(map.beta0, out / "beta0.pyr");
  write_raster(map.beta1, out / "beta1.pyr");
  write_manifest(out, "explain", cfg);
  std::cout << "explain: beta rasters written\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pyrocast: wildfire risk modeling toolkit"};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "JSON run configuration");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "root RNG seed");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value, "output directory");
  int threads_value = 1;
  auto* threads_opt =
      app.add_option("--threads", threads_value, "worker threads");

  auto* synthgen = app.add_subcommand("synthgen", "generate a synthetic world");
  auto* kbdi = app.add_subcommand("kbdi", "daily KBDI from weather CSVs");
  auto* train = app.add_subcommand("train", "fit the wildfire model");
  auto* predict = app.add_subcommand("predict", "per-year probability rasters");
  auto* validate = app.add_subcommand("validate", "project-level AUC report");
  auto* project = app.add_subcommand("project", "scenario ensemble projection");
  auto* explain = app.add_subcommand("explain", "beta0/beta1 rasters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*seed_opt) opts.seed = seed_value;
    if (*out_opt) opts.out = out_value;
    if (*threads_opt) opts.threads = threads_value;
    const RunConfig cfg = effective_config(opts);

    if (synthgen->parsed()) return cmd_synthgen(cfg);
    if (kbdi->parsed()) return cmd_kbdi(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (predict->parsed()) return cmd_predict(cfg);
    if (validate->parsed()) return cmd_validate(cfg);
    if (project->parsed()) return cmd_project(cfg);
    if (explain->parsed()) return cmd_explain(cfg);
    std::cerr << "error: config: no subcommand\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  }
}
