#include "pyrocast/features.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "pyrocast/rng.hpp"

using namespace pyrocast;

namespace {

RasterGrid landcover_raster(Eigen::Index rows, Eigen::Index cols,
                            double cell_size, double fill) {
  return make_raster(rows, cols, 0.0, static_cast<double>(rows) * cell_size,
                     cell_size, fill);
}

RasterGrid random_landcover(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double cell_size, double nan_share = 0.1) {
  RasterGrid g = landcover_raster(rows, cols, cell_size, 0.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      g.values(r, c) = rng.uniform() < nan_share
                           ? std::numeric_limits<double>::quiet_NaN()
                           : static_cast<double>(rng.below(6));
    }
  }
  return g;
}

// Independent disc scan: all cells, plain distance comparison.
std::array<double, 6> brute_fractions(const RasterGrid& lc, Eigen::Index row,
                                      Eigen::Index col, double radius_m) {
  std::array<double, 6> counts{};
  double valid = 0.0;
  for (Eigen::Index r = 0; r < lc.rows(); ++r) {
    for (Eigen::Index c = 0; c < lc.cols(); ++c) {
      const double dy = static_cast<double>(r - row) * lc.cell_size;
      const double dx = static_cast<double>(c - col) * lc.cell_size;
      if (std::sqrt(dx * dx + dy * dy) > radius_m) continue;
      const double v = lc.values(r, c);
      if (std::isnan(v)) continue;
      counts[static_cast<std::size_t>(v)] += 1.0;
      valid += 1.0;
    }
  }
  for (auto& x : counts) x /= valid;
  return counts;
}

LayerMap standard_layers(const RasterGrid& landcover, Rng& rng) {
  LayerMap layers;
  layers["landcover"] = landcover;
  const FeatureRegistry reg = FeatureRegistry::standard();
  for (const auto& ch : reg.channels) {
    if (ch.group == ChannelGroup::Bioclim ||
        ch.group == ChannelGroup::Topography || ch.group == ChannelGroup::Human) {
      RasterGrid layer = landcover;
      for (Eigen::Index i = 0; i < layer.values.size(); ++i) {
        layer.values.data()[i] = rng.uniform(-5.0, 5.0);
      }
      layers[ch.source] = std::move(layer);
    }
  }
  return layers;
}

}  // namespace

TEST_CASE("one-hot encoding") {
  RasterGrid lc = landcover_raster(2, 2, 300.0, 0.0);
  lc.values(0, 0) = 2.0;  // Grassland
  lc.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
  lc.values(1, 0) = 7.0;
  lc.values(1, 1) = 2.5;

  const auto grass = onehot_landcover(lc, 0, 0);
  REQUIRE(grass.has_value());
  CHECK(*grass == std::array<double, 6>{0, 0, 1, 0, 0, 0});

  CHECK_FALSE(onehot_landcover(lc, 0, 1).has_value());  // masked

  CHECK_THROWS_WITH_AS(onehot_landcover(lc, 1, 0),
                       doctest::Contains("class error"), data_error);
  CHECK_THROWS_WITH_AS(onehot_landcover(lc, 1, 1),
                       doctest::Contains("class error"), data_error);
}

TEST_CASE("radius fractions on the 5-cell disc") {
  // 5x5 raster with cell_size 500: radius 500 reaches the 4-neighborhood.
  RasterGrid lc = landcover_raster(5, 5, 500.0,
                                   static_cast<double>(LandCover::ClosedForest));
  lc.values(2, 2) = static_cast<double>(LandCover::Grassland);
  const auto fracs = radius_fractions(lc, 2, 2, {500.0, 1000.0, 2000.0});
  REQUIRE(fracs.size() == 18);
  CHECK(fracs[static_cast<int>(LandCover::Grassland)] == doctest::Approx(0.2));
  CHECK(fracs[static_cast<int>(LandCover::ClosedForest)] == doctest::Approx(0.8));
}

TEST_CASE("uniform raster gives unit fraction at every radius") {
  const RasterGrid lc = landcover_raster(
      9, 9, 300.0, static_cast<double>(LandCover::OpenForest));
  const auto fracs = radius_fractions(lc, 4, 4);
  for (int radius = 0; radius < 3; ++radius) {
    for (int cls = 0; cls < 6; ++cls) {
      const double expected = cls == static_cast<int>(LandCover::OpenForest)
                                  ? 1.0
                                  : 0.0;
      CHECK(fracs[static_cast<std::size_t>(radius * 6 + cls)] == expected);
    }
  }
}

TEST_CASE("per-radius fractions sum to one on random rasters") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const RasterGrid lc = random_landcover(rng, 11, 13, 400.0);
    const auto row = static_cast<Eigen::Index>(rng.below(11));
    const auto col = static_cast<Eigen::Index>(rng.below(13));
    if (std::isnan(lc.values(row, col))) continue;
    const auto fracs = radius_fractions(lc, row, col);
    for (int radius = 0; radius < 3; ++radius) {
      double sum = 0.0;
      for (int cls = 0; cls < 6; ++cls) {
        sum += fracs[static_cast<std::size_t>(radius * 6 + cls)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("radius fractions agree with the brute-force scan") {
  Rng rng(32);
  const std::array<double, 3> radii = {500.0, 1000.0, 2000.0};
  for (int trial = 0; trial < 25; ++trial) {
    const RasterGrid lc = random_landcover(rng, 10, 10, 300.0);
    const auto row = static_cast<Eigen::Index>(rng.below(10));
    const auto col = static_cast<Eigen::Index>(rng.below(10));
    const auto fracs = radius_fractions(lc, row, col, radii);
    for (std::size_t ri = 0; ri < 3; ++ri) {
      const auto expected = brute_fractions(lc, row, col, radii[ri]);
      for (int cls = 0; cls < 6; ++cls) {
        CHECK(fracs[ri * 6 + static_cast<std::size_t>(cls)] ==
              doctest::Approx(expected[static_cast<std::size_t>(cls)])
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("disc membership reflects with the raster") {
  Rng rng(33);
  const RasterGrid lc = random_landcover(rng, 8, 12, 350.0);
  RasterGrid mirrored = lc;
  for (Eigen::Index r = 0; r < lc.rows(); ++r) {
    for (Eigen::Index c = 0; c < lc.cols(); ++c) {
      mirrored.values(r, c) = lc.values(r, lc.cols() - 1 - c);
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const auto row = static_cast<Eigen::Index>(rng.below(8));
    const auto col = static_cast<Eigen::Index>(rng.below(12));
    const auto lhs = radius_fractions(lc, row, col);
    const auto rhs = radius_fractions(mirrored, row, lc.cols() - 1 - col);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      CHECK(lhs[i] == rhs[i]);
    }
  }
}

TEST_CASE("all-NaN disc is a coverage error") {
  RasterGrid lc = landcover_raster(3, 3, 300.0,
                                   std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_WITH_AS(radius_fractions(lc, 1, 1, {300.0, 300.0, 300.0}),
                       doctest::Contains("coverage error"), data_error);
}

TEST_CASE("standard registry has 54 channels and validates") {
  const FeatureRegistry reg = FeatureRegistry::standard();
  CHECK(reg.total_static() == 54);
  CHECK_NOTHROW(reg.validate());

  FeatureRegistry broken = reg;
  broken.channels.pop_back();
  broken.channels.pop_back();
  broken.channels.pop_back();  // drops a human channel too
  CHECK_THROWS_WITH_AS(broken.validate(), doctest::Contains("registry error"),
                       data_error);
}

TEST_CASE("assemble_features basics") {
  Rng rng(34);
  const RasterGrid lc = random_landcover(rng, 9, 9, 300.0, 0.0);
  LayerMap layers = standard_layers(lc, rng);
  const FeatureRegistry reg = FeatureRegistry::standard();

  const auto v = assemble_features({4, 4}, layers, reg);
  REQUIRE(v.has_value());
  CHECK(v->static_features.size() == 54);

  // Latitude/longitude extras are the cell center coordinates.
  CHECK(v->static_features(52) == lc.cell_center_y(4));
  CHECK(v->static_features(53) == lc.cell_center_x(4));

  // Masked when land cover is NaN.
  LayerMap with_water = layers;
  with_water["landcover"].values(4, 4) =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(assemble_features({4, 4}, with_water, reg).has_value());

  // Masked when a required channel is NaN.
  LayerMap with_hole = layers;
  with_hole["bioclim_07"].values(4, 4) =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(assemble_features({4, 4}, with_hole, reg).has_value());

  // Missing channel raster is a registry error.
  LayerMap missing = layers;
  missing.erase("gdp");
  CHECK_THROWS_WITH_AS(assemble_features({4, 4}, missing, reg),
                       doctest::Contains("registry error"), data_error);
}

TEST_CASE("assemble_features is insertion-order independent") {
  Rng rng(35);
  const RasterGrid lc = random_landcover(rng, 9, 9, 300.0, 0.0);
  const LayerMap layers = standard_layers(lc, rng);
  const FeatureRegistry reg = FeatureRegistry::standard();

  LayerMap reversed;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    reversed.emplace(it->first, it->second);
  }
  const auto a = assemble_features({3, 5}, layers, reg);
  const auto b = assemble_features({3, 5}, reversed, reg);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->static_features == b->static_features);
}

TEST_CASE("normalizer fit and apply") {
  const FeatureRegistry reg = FeatureRegistry::standard();
  Rng rng(36);
  std::vector<FeatureVector> samples;
  for (int i = 0; i < 400; ++i) {
    FeatureVector v;
    v.static_features.resize(54);
    for (Eigen::Index c = 0; c < 54; ++c) {
      if (c < 6) {
        v.static_features(c) = (i % 6) == c ? 1.0 : 0.0;  // one-hot block
      } else if (c == 6) {
        v.static_features(c) = 3.25;  // constant channel
      } else {
        v.static_features(c) = rng.normal() * (1.0 + static_cast<double>(c)) +
                               static_cast<double>(c);
      }
    }
    v.kbdi_annual_mean = rng.uniform(0.0, 800.0);
    samples.push_back(std::move(v));
  }

  FeatureRegistry fitted = reg;
  fit_normalizer(fitted, samples);
  CHECK(fitted.fitted);

  // Constant channel normalizes to zero via the stddev floor.
  FeatureVector probe = samples[0];
  const FeatureVector normed = apply_normalizer(probe, fitted);
  CHECK(normed.static_features(6) == 0.0);

  // One-hot channels pass through untouched.
  for (Eigen::Index c = 0; c < 6; ++c) {
    CHECK(normed.static_features(c) == probe.static_features(c));
  }

  // KBDI maps to [0,1] by /800.
  probe.kbdi_annual_mean = 400.0;
  CHECK(apply_normalizer(probe, fitted).kbdi_annual_mean == 0.5);

  // Fit-set z-score identity per non-constant channel.
  for (Eigen::Index c = 7; c < 54; ++c) {
    double mean = 0.0;
    double var = 0.0;
    for (const auto& s : samples) {
      mean += apply_normalizer(s, fitted).static_features(c);
    }
    mean /= static_cast<double>(samples.size());
    for (const auto& s : samples) {
      const double d = apply_normalizer(s, fitted).static_features(c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(samples.size());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
  }

  CHECK_THROWS_WITH_AS(fit_normalizer(fitted, {}),
                       doctest::Contains("fit error"), data_error);
}

TEST_CASE("registry JSON round trip preserves stats and hash") {
  const auto dir = std::filesystem::temp_directory_path() / "pyrocast_feature_tests";
  std::filesystem::create_directories(dir);
  FeatureRegistry reg = FeatureRegistry::standard();
  reg.channels[10].mean = 4.5;
  reg.channels[10].stddev = 2.25;
  reg.fitted = true;
  const auto path = dir / "registry.json";
  write_registry(reg, path);
  const FeatureRegistry back = read_registry(path);
  CHECK(back.fitted);
  CHECK(back.channels[10].mean == 4.5);
  CHECK(back.channels[10].stddev == 2.25);
  CHECK(back.content_hash() == reg.content_hash());
  CHECK(back.channels.size() == reg.channels.size());
}
