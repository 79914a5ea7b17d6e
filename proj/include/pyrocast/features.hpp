#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pyrocast/raster.hpp"

namespace pyrocast {

enum class LandCover : int {
  ClosedForest = 0,
  OpenForest = 1,
  Grassland = 2,
  Urban = 3,
  Agriculture = 4,
  Other = 5,
};

inline constexpr int kLandCoverClasses = 6;
inline constexpr std::array<double, 3> kDefaultRadiiMeters = {500.0, 1000.0,
                                                              2000.0};

using LayerMap = std::map<std::string, RasterGrid>;

struct CellLocation {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

// Decodes a land-cover cell into an integer class. NaN -> nullopt (masked),
// anything that is not an integer in 0..5 -> class error.
std::optional<int> landcover_class_at(const RasterGrid& class_raster,
                                      Eigen::Index row, Eigen::Index col);

// One-hot over the 6 classes; nullopt when the cell is nodata.
std::optional<std::array<double, kLandCoverClasses>> onehot_landcover(
    const RasterGrid& class_raster, Eigen::Index row, Eigen::Index col);

// For each radius then class: fraction of valid cells whose center lies
// within the Euclidean radius (meters via cell_size) of the center cell's
// center. Fractions per radius sum to 1 over the classes. Throws a coverage
// error when the disc contains no valid cell.
std::vector<double> radius_fractions(
    const RasterGrid& class_raster, Eigen::Index row, Eigen::Index col,
    const std::array<double, 3>& radii_m = kDefaultRadiiMeters);

enum class ChannelGroup {
  LandcoverOnehot,
  LandcoverRadius,
  Bioclim,
  Topography,
  Human,
  Extra,
};

std::string to_string(ChannelGroup group);
ChannelGroup channel_group_from_string(const std::string& s);

struct ChannelDesc {
  std::string name;
  ChannelGroup group = ChannelGroup::Extra;
  // Layer key for raster-backed channels ("landcover" for the land-cover
  // groups); empty for channels derived from the grid geometry.
  std::string source;
  int class_index = -1;   // land-cover groups
  double radius_m = 0.0;  // LandcoverRadius only
  double mean = 0.0;
  double stddev = 1.0;
};

// Ordered channel list defining the static feature layout plus per-channel
// normalization stats. The default layout is 6 one-hot + 18 radius + 19
// bioclim + 6 topography + 3 human + 2 extra (latitude, longitude) = 54.
struct FeatureRegistry {
  std::vector<ChannelDesc> channels;
  bool fitted = false;

  int total_static() const { return static_cast<int>(channels.size()); }
  void validate() const;  // group sizes and unique names

  static FeatureRegistry standard(int extra_channels = 2);

  std::uint64_t content_hash() const;
};

FeatureRegistry read_registry(const std::filesystem::path& path);
void write_registry(const FeatureRegistry& registry,
                    const std::filesystem::path& path);

// 54 static features plus the annual mean KBDI. kbdi_annual_mean is the raw
// index in [0, 800] until apply_normalizer maps it to [0, 1].
struct FeatureVector {
  Eigen::VectorXd static_features;
  double kbdi_annual_mean = 0.0;
};

// Raw (unnormalized) static features for one cell, ordered per the registry.
// nullopt when the location is masked (NaN land cover or NaN in a required
// channel). kbdi_annual_mean is left at 0; callers attach the per-year value.
std::optional<FeatureVector> assemble_features(CellLocation loc,
                                               const LayerMap& layers,
                                               const FeatureRegistry& registry);

// Per-channel z-score stats from raw training vectors. One-hot channels pass
// through (mean 0, stddev 1); stddev is floored at 1e-8.
void fit_normalizer(FeatureRegistry& registry,
                    const std::vector<FeatureVector>& samples);

// z-scores the static features and maps KBDI to kbdi/800.
FeatureVector apply_normalizer(const FeatureVector& raw,
                               const FeatureRegistry& registry);

}  // namespace pyrocast
