#include "pyrocast/features.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "pyrocast/csvio.hpp"
#include "pyrocast/kbdi.hpp"
#include "pyrocast/rng.hpp"

namespace pyrocast {

std::optional<int> landcover_class_at(const RasterGrid& class_raster,
                                      Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= class_raster.rows() || col < 0 ||
      col >= class_raster.cols()) {
    throw data_error("range error: cell index outside raster");
  }
  const double v = class_raster.values(row, col);
  if (std::isnan(v)) return std::nullopt;
  const double rounded = std::nearbyint(v);
  if (rounded != v || rounded < 0.0 ||
      rounded >= static_cast<double>(kLandCoverClasses)) {
    throw data_error("class error: land-cover value " + format_double(v) +
                     " is not an integer in 0..5");
  }
  return static_cast<int>(rounded);
}

std::optional<std::array<double, kLandCoverClasses>> onehot_landcover(
    const RasterGrid& class_raster, Eigen::Index row, Eigen::Index col) {
  const auto cls = landcover_class_at(class_raster, row, col);
  if (!cls) return std::nullopt;
  std::array<double, kLandCoverClasses> onehot{};
  onehot[static_cast<std::size_t>(*cls)] = 1.0;
  return onehot;
}

std::vector<double> radius_fractions(const RasterGrid& class_raster,
                                     Eigen::Index row, Eigen::Index col,
                                     const std::array<double, 3>& radii_m) {
  for (double r : radii_m) {
    if (r <= 0.0) throw data_error("domain error: nonpositive radius");
  }
  std::vector<double> fractions(radii_m.size() * kLandCoverClasses, 0.0);
  for (std::size_t ri = 0; ri < radii_m.size(); ++ri) {
    const double radius = radii_m[ri];
    const auto reach =
        static_cast<Eigen::Index>(std::floor(radius / class_raster.cell_size));
    std::array<std::int64_t, kLandCoverClasses> counts{};
    std::int64_t valid = 0;
    for (Eigen::Index dr = -reach; dr <= reach; ++dr) {
      const Eigen::Index r = row + dr;
      if (r < 0 || r >= class_raster.rows()) continue;
      for (Eigen::Index dc = -reach; dc <= reach; ++dc) {
        const Eigen::Index c = col + dc;
        if (c < 0 || c >= class_raster.cols()) continue;
        const double dist = std::hypot(static_cast<double>(dr),
                                       static_cast<double>(dc)) *
                            class_raster.cell_size;
        if (dist > radius) continue;
        const auto cls = landcover_class_at(class_raster, r, c);
        if (!cls) continue;
        ++counts[static_cast<std::size_t>(*cls)];
        ++valid;
      }
    }
    if (valid == 0) {
      throw data_error("coverage error: no valid cell within radius " +
                       format_double(radius));
    }
    for (int cls = 0; cls < kLandCoverClasses; ++cls) {
      fractions[ri * kLandCoverClasses + static_cast<std::size_t>(cls)] =
          static_cast<double>(counts[static_cast<std::size_t>(cls)]) /
          static_cast<double>(valid);
    }
  }
  return fractions;
}

std::string to_string(ChannelGroup group) {
  switch (group) {
    case ChannelGroup::LandcoverOnehot: return "landcover_onehot";
    case ChannelGroup::LandcoverRadius: return "landcover_radius";
    case ChannelGroup::Bioclim: return "bioclim";
    case ChannelGroup::Topography: return "topography";
    case ChannelGroup::Human: return "human";
    case ChannelGroup::Extra: return "extra";
  }
  throw data_error("domain error: unknown channel group");
}

ChannelGroup channel_group_from_string(const std::string& s) {
  if (s == "landcover_onehot") return ChannelGroup::LandcoverOnehot;
  if (s == "landcover_radius") return ChannelGroup::LandcoverRadius;
  if (s == "bioclim") return ChannelGroup::Bioclim;
  if (s == "topography") return ChannelGroup::Topography;
  if (s == "human") return ChannelGroup::Human;
  if (s == "extra") return ChannelGroup::Extra;
  throw data_error("registry error: unknown channel group '" + s + "'");
}

void FeatureRegistry::validate() const {
  std::set<std::string> names;
  std::map<ChannelGroup, int> sizes;
  for (const auto& ch : channels) {
    if (ch.name.empty()) throw data_error("registry error: unnamed channel");
    if (!names.insert(ch.name).second) {
      throw data_error("registry error: duplicate channel name " + ch.name);
    }
    if (!(ch.stddev > 0.0)) {
      throw data_error("registry error: nonpositive stddev for " + ch.name);
    }
    ++sizes[ch.group];
  }
  if (sizes[ChannelGroup::LandcoverOnehot] != kLandCoverClasses) {
    throw data_error("registry error: expected 6 landcover_onehot channels");
  }
  if (sizes[ChannelGroup::LandcoverRadius] != kLandCoverClasses * 3) {
    throw data_error("registry error: expected 18 landcover_radius channels");
  }
  if (sizes[ChannelGroup::Bioclim] != 19) {
    throw data_error("registry error: expected 19 bioclim channels");
  }
  if (sizes[ChannelGroup::Topography] != 6) {
    throw data_error("registry error: expected 6 topography channels");
  }
  if (sizes[ChannelGroup::Human] != 3) {
    throw data_error("registry error: expected 3 human channels");
  }
}

FeatureRegistry FeatureRegistry::standard(int extra_channels) {
  static const char* kClassNames[kLandCoverClasses] = {
      "closed_forest", "open_forest", "grassland", "urban", "agriculture",
      "other"};
  static const char* kTopoNames[6] = {"elevation",  "slope",
                                      "aspect_sin", "aspect_cos",
                                      "roughness",  "topo_position"};
  static const char* kHumanNames[3] = {"gdp", "distance_to_cities",
                                       "accessibility"};
  FeatureRegistry reg;
  for (int c = 0; c < kLandCoverClasses; ++c) {
    ChannelDesc ch;
    ch.name = std::string("lc_") + kClassNames[c];
    ch.group = ChannelGroup::LandcoverOnehot;
    ch.source = "landcover";
    ch.class_index = c;
    reg.channels.push_back(ch);
  }
  for (double radius : kDefaultRadiiMeters) {
    for (int c = 0; c < kLandCoverClasses; ++c) {
      ChannelDesc ch;
      ch.name = std::string("frac_") + kClassNames[c] + "_" +
                std::to_string(static_cast<int>(radius)) + "m";
      ch.group = ChannelGroup::LandcoverRadius;
      ch.source = "landcover";
      ch.class_index = c;
      ch.radius_m = radius;
      reg.channels.push_back(ch);
    }
  }
  for (int i = 1; i <= 19; ++i) {
    ChannelDesc ch;
    char name[16];
    std::snprintf(name, sizeof(name), "bioclim_%02d", i);
    ch.name = name;
    ch.group = ChannelGroup::Bioclim;
    ch.source = name;
    reg.channels.push_back(ch);
  }
  for (const char* name : kTopoNames) {
    ChannelDesc ch;
    ch.name = name;
    ch.group = ChannelGroup::Topography;
    ch.source = name;
    reg.channels.push_back(ch);
  }
  for (const char* name : kHumanNames) {
    ChannelDesc ch;
    ch.name = name;
    ch.group = ChannelGroup::Human;
    ch.source = name;
    reg.channels.push_back(ch);
  }
  static const char* kExtraNames[2] = {"latitude", "longitude"};
  if (extra_channels > 2) {
    throw data_error("registry error: standard layout supports at most 2 extra channels");
  }
  for (int i = 0; i < extra_channels; ++i) {
    ChannelDesc ch;
    ch.name = kExtraNames[i];
    ch.group = ChannelGroup::Extra;
    reg.channels.push_back(ch);
  }
  reg.validate();
  return reg;
}

namespace {

nlohmann::json registry_to_json(const FeatureRegistry& registry) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["fitted"] = registry.fitted;
  doc["channels"] = nlohmann::json::array();
  for (const auto& ch : registry.channels) {
    nlohmann::json node;
    node["name"] = ch.name;
    node["group"] = to_string(ch.group);
    node["source"] = ch.source;
    if (ch.class_index >= 0) node["class_index"] = ch.class_index;
    if (ch.radius_m > 0.0) node["radius_m"] = ch.radius_m;
    node["mean"] = ch.mean;
    node["stddev"] = ch.stddev;
    doc["channels"].push_back(std::move(node));
  }
  return doc;
}

}  // namespace

std::uint64_t FeatureRegistry::content_hash() const {
  return fnv1a64(registry_to_json(*this).dump());
}

FeatureRegistry read_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("io error: cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("format error: invalid registry JSON: " +
                     std::string(e.what()));
  }
  FeatureRegistry reg;
  reg.fitted = doc.value("fitted", false);
  if (!doc.contains("channels") || !doc["channels"].is_array()) {
    throw data_error("registry error: missing channels array");
  }
  for (const auto& node : doc["channels"]) {
    ChannelDesc ch;
    ch.name = node.value("name", std::string{});
    ch.group = channel_group_from_string(node.value("group", std::string{}));
    ch.source = node.value("source", std::string{});
    ch.class_index = node.value("class_index", -1);
    ch.radius_m = node.value("radius_m", 0.0);
    ch.mean = node.value("mean", 0.0);
    ch.stddev = node.value("stddev", 1.0);
    reg.channels.push_back(std::move(ch));
  }
  reg.validate();
  return reg;
}

void write_registry(const FeatureRegistry& registry,
                    const std::filesystem::path& path) {
  registry.validate();
  write_text_file(path, registry_to_json(registry).dump(2) + "\n");
}

std::optional<FeatureVector> assemble_features(
    CellLocation loc, const LayerMap& layers,
    const FeatureRegistry& registry) {
  registry.validate();
  const auto landcover_it = layers.find("landcover");
  if (landcover_it == layers.end()) {
    throw data_error("registry error: missing 'landcover' layer");
  }
  const RasterGrid& landcover = landcover_it->second;

  const auto onehot = onehot_landcover(landcover, loc.row, loc.col);
  if (!onehot) return std::nullopt;  // masked (water / nodata)

  // Radius fractions computed once per distinct radius.
  std::map<double, std::vector<double>> fractions_by_radius;
  for (const auto& ch : registry.channels) {
    if (ch.group == ChannelGroup::LandcoverRadius &&
        !fractions_by_radius.count(ch.radius_m)) {
      const std::array<double, 3> radii = {ch.radius_m, ch.radius_m,
                                           ch.radius_m};
      fractions_by_radius[ch.radius_m] =
          radius_fractions(landcover, loc.row, loc.col, radii);
    }
  }

  FeatureVector out;
  out.static_features.resize(registry.total_static());
  out.kbdi_annual_mean = 0.0;
  Eigen::Index i = 0;
  for (const auto& ch : registry.channels) {
    double value = 0.0;
    switch (ch.group) {
      case ChannelGroup::LandcoverOnehot:
        value = (*onehot)[static_cast<std::size_t>(ch.class_index)];
        break;
      case ChannelGroup::LandcoverRadius:
        value = fractions_by_radius.at(
            ch.radius_m)[static_cast<std::size_t>(ch.class_index)];
        break;
      case ChannelGroup::Bioclim:
      case ChannelGroup::Topography:
      case ChannelGroup::Human: {
        const auto layer_it = layers.find(ch.source);
        if (layer_it == layers.end()) {
          throw data_error("registry error: missing layer '" + ch.source +
                           "' for channel " + ch.name);
        }
        const RasterGrid& layer = layer_it->second;
        if (!layer.same_geometry(landcover)) {
          throw data_error("shape error: layer '" + ch.source +
                           "' geometry differs from landcover");
        }
        value = layer.values(loc.row, loc.col);
        if (std::isnan(value)) return std::nullopt;  // masked
        break;
      }
      case ChannelGroup::Extra:
        if (ch.name == "latitude") {
          value = landcover.cell_center_y(loc.row);
        } else if (ch.name == "longitude") {
          value = landcover.cell_center_x(loc.col);
        } else {
          const auto layer_it = layers.find(ch.source);
          if (layer_it == layers.end()) {
            throw data_error("registry error: missing layer '" + ch.source +
                             "' for extra channel " + ch.name);
          }
          value = layer_it->second.values(loc.row, loc.col);
          if (std::isnan(value)) return std::nullopt;
        }
        break;
    }
    out.static_features(i++) = value;
  }
  return out;
}

void fit_normalizer(FeatureRegistry& registry,
                    const std::vector<FeatureVector>& samples) {
  registry.validate();
  if (samples.empty()) {
    throw data_error("fit error: empty sample set");
  }
  const int n_channels = registry.total_static();
  for (const auto& s : samples) {
    if (s.static_features.size() != n_channels) {
      throw data_error("shape error: sample width does not match registry");
    }
  }
  const double n = static_cast<double>(samples.size());
  for (int c = 0; c < n_channels; ++c) {
    auto& ch = registry.channels[static_cast<std::size_t>(c)];
    if (ch.group == ChannelGroup::LandcoverOnehot) {
      ch.mean = 0.0;
      ch.stddev = 1.0;
      continue;
    }
    double mean = 0.0;
    for (const auto& s : samples) mean += s.static_features(c);
    mean /= n;
    double var = 0.0;
    for (const auto& s : samples) {
      const double d = s.static_features(c) - mean;
      var += d * d;
    }
    ch.mean = mean;
    ch.stddev = std::max(std::sqrt(var / n), 1e-8);
  }
  registry.fitted = true;
}

FeatureVector apply_normalizer(const FeatureVector& raw,
                               const FeatureRegistry& registry) {
  if (raw.static_features.size() != registry.total_static()) {
    throw data_error("shape error: vector width does not match registry");
  }
  FeatureVector out;
  out.static_features.resize(raw.static_features.size());
  for (Eigen::Index c = 0; c < raw.static_features.size(); ++c) {
    const auto& ch = registry.channels[static_cast<std::size_t>(c)];
    if (ch.group == ChannelGroup::LandcoverOnehot) {
      out.static_features(c) = raw.static_features(c);
    } else {
      out.static_features(c) = (raw.static_features(c) - ch.mean) / ch.stddev;
    }
    if (!std::isfinite(out.static_features(c))) {
      throw numeric_error("numeric error: non-finite normalized feature " +
                          ch.name);
    }
  }
  out.kbdi_annual_mean = raw.kbdi_annual_mean / kKbdiMax;
  return out;
}

}  // namespace pyrocast
