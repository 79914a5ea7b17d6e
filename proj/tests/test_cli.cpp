#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "doctest.h"
#include "pyrocast/raster.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* bin = std::getenv("PYROCAST_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "PYROCAST_BIN must point at the CLI");
  return bin;
}

int run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_small_config(const fs::path& path, const std::string& out_dir) {
  std::ofstream out(path);
  out << R"({
  "schema_version": 1,
  "seed": 4242,
  "threads": 2,
  "synthetic": {
    "rows": 24, "cols": 24,
    "first_year": 2001, "last_year": 2008,
    "projects": 12,
    "train_locations": 150, "validation_locations": 220,
    "weather_csv_cells": 2,
    "ensemble": {"members": 3, "first_year": 2009, "last_year": 2020}
  },
  "split": {"train": [2001, 2006], "validation": [2007, 2008]},
  "train": {"epochs": 40, "batch_size": 128, "patience": 40, "hidden_dims": [32, 16]},
  "projection": {
    "scenarios": ["SSP1-2.6", "SSP2-4.5", "SSP5-8.5"],
    "baseline_window": [2009, 2012],
    "smoothing_window": 5,
    "target_years": [2018, 2020]
  },
  "paths": {"out_dir": ")" << out_dir << R"("}
})";
}

// All regular files under root, relative path -> contents; manifests excluded
// (they carry the timestamp).
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "manifest.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] =
        std::string((std::istreambuf_iterator<char>(in)), {});
  }
  return files;
}

}  // namespace

TEST_CASE("full pipeline runs and is byte-reproducible") {
  const auto work = fresh_dir("pyrocast_cli_e2e");
  const auto cfg = work / "config.json";

  for (const std::string run_name : {"run1", "run2"}) {
    write_small_config(cfg, (work / run_name).string());
    const std::string base = "--config " + cfg.string();
    REQUIRE(run(base + " synthgen") == 0);
    REQUIRE(run(base + " kbdi") == 0);
    REQUIRE(run(base + " train") == 0);
    REQUIRE(run(base + " predict") == 0);
    REQUIRE(run(base + " validate") == 0);
    REQUIRE(run(base + " project") == 0);
    REQUIRE(run(base + " explain") == 0);
  }

  const auto run1 = snapshot(work / "run1");
  const auto run2 = snapshot(work / "run2");
  REQUIRE(run1.size() == run2.size());
  for (const auto& [name, bytes] : run1) {
    REQUIRE_MESSAGE(run2.count(name) == 1, name);
    CHECK_MESSAGE(run2.at(name) == bytes, "differs: ", name);
  }

  // Spot checks on the produced artifacts.
  const auto out = work / "run1";
  CHECK(fs::exists(out / "data" / "world" / "landcover.pyr"));
  CHECK(fs::exists(out / "data" / "samples" / "train.csv"));
  CHECK(fs::exists(out / "model" / "model.json"));
  CHECK(fs::exists(out / "model" / "history.csv"));
  CHECK(fs::exists(out / "validate" / "report.json"));
  CHECK(fs::exists(out / "project" / "projection.csv"));
  CHECK(fs::exists(out / "project" / "changes.csv"));

  // Explain rasters are readable PYR1 with the world geometry.
  const auto beta0 = pyrocast::read_raster(out / "explain" / "beta0.pyr");
  const auto landcover =
      pyrocast::read_raster(out / "data" / "world" / "landcover.pyr");
  CHECK(beta0.same_geometry(landcover));

  // Probability rasters exist per world year.
  for (int y = 2001; y <= 2008; ++y) {
    CHECK(fs::exists(out / "predict" / ("prob_" + std::to_string(y) + ".pyr")));
  }

  // KBDI outputs match their inputs row-for-row.
  int kbdi_outputs = 0;
  for (const auto& entry : fs::directory_iterator(out / "kbdi")) {
    if (entry.path().extension() != ".csv") continue;
    ++kbdi_outputs;
    std::ifstream in_csv(out / "data" / "world" / "weather" /
                         entry.path().filename());
    std::ifstream out_csv(entry.path());
    const auto count_lines = [](std::ifstream& f) {
      std::string line;
      int n = 0;
      while (std::getline(f, line)) ++n;
      return n;
    };
    CHECK(count_lines(in_csv) == count_lines(out_csv));
  }
  CHECK(kbdi_outputs == 2);
}

TEST_CASE("exit codes follow the contract") {
  const auto work = fresh_dir("pyrocast_cli_errors");
  const auto cfg = work / "config.json";
  write_small_config(cfg, (work / "out").string());

  SUBCASE("missing config file is a config error") {
    CHECK(run("--config " + (work / "nope.json").string() + " synthgen") == 2);
  }

  SUBCASE("invalid JSON is a config error") {
    std::ofstream bad(work / "bad.json");
    bad << "{ not json";
    bad.close();
    CHECK(run("--config " + (work / "bad.json").string() + " synthgen") == 2);
  }

  SUBCASE("schema violation is a config error") {
    std::ofstream bad(work / "schema.json");
    bad << R"({"schema_version": 9})";
    bad.close();
    CHECK(run("--config " + (work / "schema.json").string() + " synthgen") == 2);
  }

  SUBCASE("missing upstream artifacts are data errors") {
    CHECK(run("--config " + cfg.string() + " train") == 3);
    CHECK(run("--config " + cfg.string() + " validate") == 3);
    CHECK(run("--config " + cfg.string() + " kbdi") == 3);
  }

  SUBCASE("unknown subcommand is a config error") {
    CHECK(run("frobnicate") == 2);
  }

  SUBCASE("overlapping split is rejected before any write") {
    std::ofstream bad(work / "split.json");
    bad << R"({"schema_version": 1,
               "split": {"train": [2001, 2010], "validation": [2010, 2012]},
               "paths": {"out_dir": ")" << (work / "never").string() << R"("}})";
    bad.close();
    CHECK(run("--config " + (work / "split.json").string() + " synthgen") == 2);
    CHECK_FALSE(fs::exists(work / "never"));
  }
}
