#include "pyrocast/raster.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pyrocast/rng.hpp"

using namespace pyrocast;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "pyrocast_raster_tests";
  fs::create_directories(dir);
  return dir;
}

RasterGrid random_grid(Rng& rng, Eigen::Index max_dim = 12,
                       double nan_share = 0.15) {
  const auto rows = static_cast<Eigen::Index>(1 + rng.below(max_dim));
  const auto cols = static_cast<Eigen::Index>(1 + rng.below(max_dim));
  RasterGrid g = make_raster(rows, cols, rng.uniform(-100.0, 100.0),
                             rng.uniform(-100.0, 100.0),
                             rng.uniform(10.0, 1000.0), 0.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      g.values(r, c) = rng.uniform() < nan_share
                           ? std::numeric_limits<double>::quiet_NaN()
                           : rng.uniform(-1e6, 1e6);
    }
  }
  return g;
}

bool grids_identical(const RasterGrid& a, const RasterGrid& b) {
  if (!a.same_geometry(b)) return false;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double x = a.values(r, c);
      const double y = b.values(r, c);
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("pyr1 round trip is bit exact including NaN payloads") {
  const auto path = temp_dir() / "roundtrip.pyr";
  Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    const RasterGrid g = random_grid(rng);
    write_raster(g, path);
    const RasterGrid back = read_raster(path);
    REQUIRE(grids_identical(g, back));
  }
}

TEST_CASE("pyr1 file sizes follow the format") {
  const auto dir = temp_dir();
  RasterGrid one = make_raster(1, 1, 0.0, 0.0, 300.0, 0.5);
  write_raster(one, dir / "one.pyr");
  CHECK(fs::file_size(dir / "one.pyr") == kPyr1HeaderBytes + 8);

  RasterGrid six = make_raster(2, 3, 0.0, 0.0, 300.0, 1.0);
  write_raster(six, dir / "six.pyr");
  CHECK(fs::file_size(dir / "six.pyr") == kPyr1HeaderBytes + 48);
}

TEST_CASE("pyr1 writes are deterministic") {
  const auto dir = temp_dir();
  Rng rng(77);
  const RasterGrid g = random_grid(rng);
  write_raster(g, dir / "a.pyr");
  write_raster(g, dir / "b.pyr");
  std::ifstream fa(dir / "a.pyr", std::ios::binary);
  std::ifstream fb(dir / "b.pyr", std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), {});
  const std::string bb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(ba == bb);
}

TEST_CASE("NaN payload is stored as the canonical quiet NaN") {
  const auto path = temp_dir() / "nan.pyr";
  RasterGrid g = make_raster(1, 1, 0.0, 0.0, 300.0,
                             std::numeric_limits<double>::quiet_NaN());
  write_raster(g, path);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() == kPyr1HeaderBytes + 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(
                static_cast<unsigned char>(bytes[kPyr1HeaderBytes + i]))
            << (8 * i);
  }
  CHECK(bits == 0x7ff8000000000000ull);
  CHECK(std::isnan(read_raster(path).values(0, 0)));
}

TEST_CASE("read_raster rejects malformed files") {
  const auto dir = temp_dir();

  SUBCASE("bad magic") {
    std::ofstream out(dir / "bad_magic.pyr", std::ios::binary);
    out << "XXXX";
    out << std::string(64, '\0');
    out.close();
    CHECK_THROWS_WITH_AS(read_raster(dir / "bad_magic.pyr"),
                         doctest::Contains("format error"), data_error);
  }

  SUBCASE("truncated payload") {
    RasterGrid g = make_raster(2, 2, 0.0, 0.0, 300.0, 1.0);
    write_raster(g, dir / "trunc.pyr");
    fs::resize_file(dir / "trunc.pyr", kPyr1HeaderBytes + 8);
    CHECK_THROWS_WITH_AS(read_raster(dir / "trunc.pyr"),
                         doctest::Contains("length error"), data_error);
  }

  SUBCASE("oversized dimensions") {
    std::string bytes = "PYR1";
    const auto push_u32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) {
        bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
      }
    };
    push_u32(1);
    push_u32(0xffffffffu);
    push_u32(0xffffffffu);
    bytes.append(25, '\0');
    std::ofstream out(dir / "huge.pyr", std::ios::binary);
    out << bytes;
    out.close();
    CHECK_THROWS_WITH_AS(read_raster(dir / "huge.pyr"),
                         doctest::Contains("capacity error"), data_error);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_raster(dir / "does_not_exist.pyr"), data_error);
  }
}

TEST_CASE("rasterize covers the full template for an enclosing rectangle") {
  const RasterGrid tmpl = make_raster(4, 4, 0.0, 1200.0, 300.0, 0.0);
  ProjectPolygon poly;
  poly.project_id = "P";
  poly.rings = {{{-10.0, -10.0}, {1300.0, -10.0}, {1300.0, 1300.0},
                 {-10.0, 1300.0}, {-10.0, -10.0}}};
  const RasterGrid mask = rasterize_polygon(poly, tmpl);
  CHECK(mask.values.sum() == 16.0);
}

TEST_CASE("rasterize half-cover rectangle hits exactly the left half") {
  // Right edge on the boundary between columns 1 and 2 of a 4x4 template.
  const RasterGrid tmpl = make_raster(4, 4, 0.0, 1200.0, 300.0, 0.0);
  ProjectPolygon poly;
  poly.project_id = "H";
  poly.rings = {
      {{0.0, 0.0}, {600.0, 0.0}, {600.0, 1200.0}, {0.0, 1200.0}, {0.0, 0.0}}};
  const RasterGrid mask = rasterize_polygon(poly, tmpl);
  CHECK(mask.values.sum() == 8.0);
  for (Eigen::Index r = 0; r < 4; ++r) {
    CHECK(mask.values(r, 0) == 1.0);
    CHECK(mask.values(r, 1) == 1.0);
    CHECK(mask.values(r, 2) == 0.0);
    CHECK(mask.values(r, 3) == 0.0);
  }
}

TEST_CASE("holes subtract from the outer ring") {
  const RasterGrid tmpl = make_raster(3, 3, 0.0, 900.0, 300.0, 0.0);
  ProjectPolygon poly;
  poly.project_id = "hole";
  poly.rings = {
      {{-10.0, -10.0}, {910.0, -10.0}, {910.0, 910.0}, {-10.0, 910.0},
       {-10.0, -10.0}},
      // hole around the center cell's center (450, 450)
      {{400.0, 400.0}, {500.0, 400.0}, {500.0, 500.0}, {400.0, 500.0},
       {400.0, 400.0}}};
  const RasterGrid mask = rasterize_polygon(poly, tmpl);
  CHECK(mask.values(1, 1) == 0.0);
  CHECK(mask.values.sum() == 8.0);
}

TEST_CASE("degenerate ring is rejected") {
  const RasterGrid tmpl = make_raster(2, 2, 0.0, 600.0, 300.0, 0.0);
  ProjectPolygon poly;
  poly.project_id = "bad";
  poly.rings = {{{0.0, 0.0}, {100.0, 0.0}, {0.0, 0.0}}};
  CHECK_THROWS_WITH_AS(rasterize_polygon(poly, tmpl),
                       doctest::Contains("geometry error"), data_error);
}

TEST_CASE("rasterization agrees with a convex brute-force check") {
  Rng rng(2024);
  const RasterGrid tmpl = make_raster(12, 14, -50.0, 500.0, 37.0, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    // Random convex polygon: points on an ellipse, irrational-ish center.
    const double cx = tmpl.origin_x + rng.uniform(0.0, 14 * 37.0);
    const double cy = tmpl.origin_y - rng.uniform(0.0, 12 * 37.0);
    const double ax = rng.uniform(30.0, 250.0);
    const double ay = rng.uniform(30.0, 250.0);
    const int n = 3 + static_cast<int>(rng.below(6));
    std::vector<std::array<double, 2>> open_ring;
    double angle = rng.uniform(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      angle += (1.0 / n) * (0.4 + 0.6 * rng.uniform());
      const double theta = 2.0 * M_PI * (static_cast<double>(i) / n + 0.05 * angle);
      open_ring.push_back({cx + ax * std::cos(theta), cy + ay * std::sin(theta)});
    }
    ProjectPolygon poly;
    poly.project_id = "conv";
    poly.rings = {open_ring};
    poly.rings[0].push_back(open_ring.front());

    const RasterGrid mask = rasterize_polygon(poly, tmpl);
    for (Eigen::Index r = 0; r < tmpl.rows(); ++r) {
      for (Eigen::Index c = 0; c < tmpl.cols(); ++c) {
        const bool expected = oracles::point_in_convex(
            open_ring, tmpl.cell_center_x(c), tmpl.cell_center_y(r));
        CHECK(mask.values(r, c) == (expected ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("zonal_fraction basics") {
  RasterGrid mask = make_raster(10, 10, 0.0, 3000.0, 300.0, 1.0);
  RasterGrid layer = make_raster(10, 10, 0.0, 3000.0, 300.0, 0.9);

  SUBCASE("all cells above threshold") {
    CHECK(zonal_fraction(mask, layer, 0.5) == 1.0);
  }

  SUBCASE("11 of 100 burned") {
    layer.values.setConstant(0.0);
    int burned = 0;
    for (Eigen::Index r = 0; r < 10 && burned < 11; ++r) {
      for (Eigen::Index c = 0; c < 10 && burned < 11; ++c) {
        layer.values(r, c) = 1.0;
        ++burned;
      }
    }
    CHECK(zonal_fraction(mask, layer, 0.5) == doctest::Approx(0.11).epsilon(1e-15));
  }

  SUBCASE("empty zone yields NaN") {
    mask.values.setConstant(0.0);
    CHECK(std::isnan(zonal_fraction(mask, layer, 0.5)));
  }

  SUBCASE("geometry mismatch is a shape error") {
    RasterGrid other = make_raster(10, 10, 1.0, 3000.0, 300.0, 0.9);
    CHECK_THROWS_WITH_AS(zonal_fraction(mask, other, 0.5),
                         doctest::Contains("shape error"), data_error);
  }

  SUBCASE("non-binary mask is rejected") {
    mask.values(0, 0) = 0.25;
    CHECK_THROWS_AS(zonal_fraction(mask, layer, 0.5), data_error);
  }
}

TEST_CASE("zonal_fraction invariant under positive rescaling") {
  Rng rng(555);
  for (int trial = 0; trial < 50; ++trial) {
    RasterGrid mask = make_raster(8, 8, 0.0, 2400.0, 300.0, 0.0);
    RasterGrid layer = make_raster(8, 8, 0.0, 2400.0, 300.0, 0.0);
    for (Eigen::Index i = 0; i < 64; ++i) {
      mask.values.data()[i] = rng.uniform() < 0.6 ? 1.0 : 0.0;
      layer.values.data()[i] = rng.uniform() < 0.1
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : rng.uniform(-5.0, 5.0);
    }
    const double threshold = rng.uniform(-2.0, 2.0);
    const double scale = rng.uniform(0.1, 50.0);
    const double base = zonal_fraction(mask, layer, threshold);
    RasterGrid scaled = layer;
    scaled.values *= scale;
    const double rescaled = zonal_fraction(mask, scaled, threshold * scale);
    if (std::isnan(base)) {
      CHECK(std::isnan(rescaled));
    } else {
      CHECK(base == doctest::Approx(rescaled).epsilon(1e-12));
    }
  }
}

TEST_CASE("polygon JSON round trip and validation") {
  const auto path = temp_dir() / "polys.json";
  std::vector<ProjectPolygon> polys(2);
  polys[0].project_id = "ACR255";
  polys[0].rings = {{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}}};
  polys[1].project_id = "VCS1566";
  polys[1].rings = {{{2.0, 2.0}, {3.0, 2.0}, {3.0, 3.0}, {2.0, 3.0}, {2.0, 2.0}}};
  write_polygons(polys, path);
  const auto back = read_polygons(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].project_id == "ACR255");
  CHECK(back[1].rings[0].size() == 5);

  polys[1].project_id = "";
  CHECK_THROWS_WITH_AS(write_polygons(polys, path),
                       doctest::Contains("empty project_id"), data_error);
}

TEST_CASE("duplicate project ids are rejected on read") {
  const auto path = temp_dir() / "dup.json";
  std::ofstream out(path);
  out << R"({"projects":[
    {"id":"A","rings":[[[0,0],[1,0],[1,1],[0,0]]]},
    {"id":"A","rings":[[[0,0],[1,0],[1,1],[0,0]]]}
  ]})";
  out.close();
  CHECK_THROWS_WITH_AS(read_polygons(path), doctest::Contains("duplicate"),
                       data_error);
}
