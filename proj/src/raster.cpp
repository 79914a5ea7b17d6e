#include "pyrocast/raster.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "pyrocast/binio.hpp"
#include "pyrocast/csvio.hpp"

namespace pyrocast {

using binio::get_f64;
using binio::get_u32;
using binio::put_f64;
using binio::put_u32;

RasterGrid make_raster(Eigen::Index rows, Eigen::Index cols, double origin_x,
                       double origin_y, double cell_size, double fill) {
  if (rows < 1 || cols < 1) throw data_error("geometry error: empty raster");
  if (cell_size <= 0.0) throw data_error("geometry error: nonpositive cell size");
  RasterGrid g;
  g.origin_x = origin_x;
  g.origin_y = origin_y;
  g.cell_size = cell_size;
  g.values = RasterArray::Constant(rows, cols, fill);
  return g;
}

RasterGrid read_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("io error: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < kPyr1HeaderBytes) {
    throw data_error("length error: truncated header in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, "PYR1", 4) != 0) {
    throw data_error("format error: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(p + 4);
  if (version != 1) {
    throw data_error("format error: unsupported PYR1 version " +
                     std::to_string(version));
  }
  const std::uint32_t rows = get_u32(p + 8);
  const std::uint32_t cols = get_u32(p + 12);
  if (rows < 1 || cols < 1) {
    throw data_error("format error: empty raster in " + path.string());
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
  if (cells > std::numeric_limits<std::size_t>::max() / 8 ||
      cells > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw data_error("capacity error: raster too large in " + path.string());
  }
  const double origin_x = get_f64(p + 16);
  const double origin_y = get_f64(p + 24);
  const double cell_size = get_f64(p + 32);
  const unsigned char dtype = p[40];
  if (dtype != 0) {
    throw data_error("format error: unsupported dtype " + std::to_string(dtype));
  }
  if (bytes.size() != kPyr1HeaderBytes + cells * 8) {
    throw data_error("length error: payload size mismatch in " + path.string());
  }
  if (cell_size <= 0.0) {
    throw data_error("format error: nonpositive cell size in " + path.string());
  }
  RasterGrid g;
  g.origin_x = origin_x;
  g.origin_y = origin_y;
  g.cell_size = cell_size;
  g.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* payload = p + kPyr1HeaderBytes;
  double* dst = g.values.data();
  for (std::uint64_t i = 0; i < cells; ++i) {
    dst[i] = get_f64(payload + i * 8);
  }
  return g;
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& path) {
  if (grid.rows() < 1 || grid.cols() < 1) {
    throw data_error("geometry error: empty raster");
  }
  if (grid.cell_size <= 0.0) {
    throw data_error("geometry error: nonpositive cell size");
  }
  std::string bytes;
  bytes.reserve(kPyr1HeaderBytes +
                static_cast<std::size_t>(grid.values.size()) * 8);
  bytes.append("PYR1", 4);
  put_u32(bytes, 1);
  put_u32(bytes, static_cast<std::uint32_t>(grid.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(grid.cols()));
  put_f64(bytes, grid.origin_x);
  put_f64(bytes, grid.origin_y);
  put_f64(bytes, grid.cell_size);
  bytes.push_back('\0');  // dtype 0 = f64
  const double* src = grid.values.data();
  for (Eigen::Index i = 0; i < grid.values.size(); ++i) {
    put_f64(bytes, src[i]);
  }
  write_text_file(path, bytes);
}

void validate_polygon(const ProjectPolygon& poly) {
  if (poly.project_id.empty()) {
    throw data_error("geometry error: polygon with empty project_id");
  }
  if (poly.rings.empty()) {
    throw data_error("geometry error: polygon " + poly.project_id +
                     " has no rings");
  }
  for (const auto& ring : poly.rings) {
    if (ring.size() < 4) {
      throw data_error("geometry error: degenerate ring in " + poly.project_id);
    }
    if (ring.front() != ring.back()) {
      throw data_error("geometry error: unclosed ring in " + poly.project_id);
    }
  }
}

bool point_in_polygon(const ProjectPolygon& poly, double x, double y) {
  // Classic even-odd crossing count. The (y1 > y) != (y2 > y) guard plus the
  // strict x < xint comparison give the half-open edge behavior.
  bool inside = false;
  for (const auto& ring : poly.rings) {
    const std::size_t n = ring.size() - 1;  // last vertex repeats the first
    for (std::size_t i = 0; i < n; ++i) {
      const double x1 = ring[i][0], y1 = ring[i][1];
      const double x2 = ring[i + 1][0], y2 = ring[i + 1][1];
      if ((y1 > y) != (y2 > y)) {
        const double xint = x1 + (y - y1) / (y2 - y1) * (x2 - x1);
        if (x < xint) inside = !inside;
      }
    }
  }
  return inside;
}

RasterGrid rasterize_polygon(const ProjectPolygon& poly,
                             const RasterGrid& tmpl) {
  validate_polygon(poly);
  RasterGrid mask = make_raster(tmpl.rows(), tmpl.cols(), tmpl.origin_x,
                                tmpl.origin_y, tmpl.cell_size, 0.0);
  for (Eigen::Index r = 0; r < tmpl.rows(); ++r) {
    const double cy = tmpl.cell_center_y(r);
    for (Eigen::Index c = 0; c < tmpl.cols(); ++c) {
      if (point_in_polygon(poly, tmpl.cell_center_x(c), cy)) {
        mask.values(r, c) = 1.0;
      }
    }
  }
  return mask;
}

double zonal_fraction(const RasterGrid& mask, const RasterGrid& layer,
                      double threshold) {
  if (!mask.same_geometry(layer)) {
    throw data_error("shape error: mask/layer geometry mismatch");
  }
  std::int64_t valid = 0;
  std::int64_t hits = 0;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      const double m = mask.values(r, c);
      if (std::isnan(m)) continue;
      if (m != 0.0 && m != 1.0) {
        throw data_error("domain error: mask is not a {0,1,NaN} raster");
      }
      if (m != 1.0) continue;
      const double v = layer.values(r, c);
      if (std::isnan(v)) continue;
      ++valid;
      if (v >= threshold) ++hits;
    }
  }
  if (valid == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(hits) / static_cast<double>(valid);
}

std::vector<ProjectPolygon> read_polygons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("io error: cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("format error: invalid polygon JSON in " + path.string() +
                     ": " + e.what());
  }
  if (!doc.contains("projects") || !doc["projects"].is_array()) {
    throw data_error("format error: polygon JSON missing 'projects' array");
  }
  std::vector<ProjectPolygon> polys;
  std::set<std::string> seen;
  for (const auto& node : doc["projects"]) {
    ProjectPolygon poly;
    poly.project_id = node.value("id", std::string{});
    if (!node.contains("rings") || !node["rings"].is_array()) {
      throw data_error("format error: project " + poly.project_id +
                       " missing rings");
    }
    for (const auto& ring_node : node["rings"]) {
      std::vector<std::array<double, 2>> ring;
      for (const auto& pt : ring_node) {
        if (!pt.is_array() || pt.size() != 2) {
          throw data_error("format error: bad vertex in " + poly.project_id);
        }
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
      }
      poly.rings.push_back(std::move(ring));
    }
    validate_polygon(poly);
    if (!seen.insert(poly.project_id).second) {
      throw data_error("format error: duplicate project_id " + poly.project_id);
    }
    polys.push_back(std::move(poly));
  }
  return polys;
}

void write_polygons(const std::vector<ProjectPolygon>& polys,
                    const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["projects"] = nlohmann::json::array();
  for (const auto& poly : polys) {
    validate_polygon(poly);
    nlohmann::json node;
    node["id"] = poly.project_id;
    node["rings"] = nlohmann::json::array();
    for (const auto& ring : poly.rings) {
      nlohmann::json ring_node = nlohmann::json::array();
      for (const auto& pt : ring) {
        ring_node.push_back({pt[0], pt[1]});
      }
      node["rings"].push_back(std::move(ring_node));
    }
    doc["projects"].push_back(std::move(node));
  }
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace pyrocast
