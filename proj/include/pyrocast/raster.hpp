#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "pyrocast/errors.hpp"

namespace pyrocast {

using RasterArray =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One georeferenced channel. (origin_x, origin_y) is the upper-left corner of
// the upper-left cell; y decreases with increasing row. Coordinates are
// treated as planar with grid spacing equal to cell_size, which doubles as
// the metric cell edge length for radius queries. NaN is the nodata sentinel.
struct RasterGrid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 300.0;
  RasterArray values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  double cell_center_x(Eigen::Index col) const {
    return origin_x + (static_cast<double>(col) + 0.5) * cell_size;
  }
  double cell_center_y(Eigen::Index row) const {
    return origin_y - (static_cast<double>(row) + 0.5) * cell_size;
  }

  bool same_geometry(const RasterGrid& other) const {
    return rows() == other.rows() && cols() == other.cols() &&
           origin_x == other.origin_x && origin_y == other.origin_y &&
           cell_size == other.cell_size;
  }
};

RasterGrid make_raster(Eigen::Index rows, Eigen::Index cols, double origin_x,
                       double origin_y, double cell_size, double fill);

// PYR1 on-disk format, little-endian:
//   magic "PYR1" | version u32=1 | rows u32 | cols u32
//   | origin_x f64 | origin_y f64 | cell_size f64 | dtype u8=0 (f64)
//   | payload rows*cols f64, row-major
// Header is 41 bytes. NaN cells are stored as the canonical quiet NaN.
inline constexpr std::size_t kPyr1HeaderBytes = 41;

RasterGrid read_raster(const std::filesystem::path& path);
void write_raster(const RasterGrid& grid, const std::filesystem::path& path);

struct ProjectPolygon {
  std::string project_id;
  // First ring is the outer boundary, the rest are holes; each ring is closed
  // (first vertex == last vertex, at least 4 vertices).
  std::vector<std::vector<std::array<double, 2>>> rings;
};

void validate_polygon(const ProjectPolygon& poly);

// Even-odd membership over all rings, half-open on right/bottom edges so a
// point never lands in two adjacent cells' polygons.
bool point_in_polygon(const ProjectPolygon& poly, double x, double y);

// Mask raster on the template geometry: 1.0 where the cell center is inside,
// 0.0 elsewhere. Holes subtract via the even-odd rule.
RasterGrid rasterize_polygon(const ProjectPolygon& poly,
                             const RasterGrid& tmpl);

// Fraction of masked cells whose layer value is >= threshold, counting only
// cells with non-NaN layer values. NaN if the zone has no valid cell.
double zonal_fraction(const RasterGrid& mask, const RasterGrid& layer,
                      double threshold);

// Polygon collection JSON: {"projects":[{"id":...,"rings":[[[x,y],...],...]}]}
std::vector<ProjectPolygon> read_polygons(const std::filesystem::path& path);
void write_polygons(const std::vector<ProjectPolygon>& polys,
                    const std::filesystem::path& path);

}  // namespace pyrocast
