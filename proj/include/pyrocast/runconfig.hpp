#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pyrocast/dataset.hpp"
#include "pyrocast/eval.hpp"
#include "pyrocast/model.hpp"

namespace pyrocast {

// One JSON config drives every subcommand; flags override config fields and
// config fields override defaults. Relative paths resolve against the config
// file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint64_t config_hash = 0;  // FNV-1a of the raw config bytes

  // synthgen
  SyntheticWorldSpec world;
  std::size_t train_locations = 900;
  std::size_t validation_locations = 1400;
  int weather_csv_cells = 4;
  EnsembleSynthSpec ensemble_synth;

  SplitSpec split;
  TrainConfig train;

  // kbdi
  bool kbdi_imperial = false;
  double kbdi_q0 = 0.0;
  std::optional<double> kbdi_annual_rainfall_normal_in;

  // validate
  Reduction reduction = Reduction::Mean;
  std::optional<std::filesystem::path> benchmark_csv;

  // projection
  std::vector<std::string> scenarios = {"SSP1-2.6", "SSP2-4.5", "SSP5-8.5"};
  YearRange baseline_window{2010, 2021};
  int smoothing_window = 10;
  std::vector<int> target_years = {2050, 2080};

  // paths; unset entries default to subdirectories of out_dir
  std::filesystem::path out_dir = "out";
  std::filesystem::path world_dir;     // default out_dir/data/world
  std::filesystem::path samples_dir;   // default out_dir/data/samples
  std::filesystem::path ensemble_dir;  // default out_dir/data/ensemble
  std::filesystem::path model_dir;     // default out_dir/model
  std::filesystem::path weather_dir;   // default out_dir/data/world/weather
};

// Parses and validates; throws config_error on schema violations. No file is
// written by this call.
RunConfig load_run_config(const std::filesystem::path& path);

// Built-in defaults (no config file), hash 0.
RunConfig default_run_config();

}  // namespace pyrocast
