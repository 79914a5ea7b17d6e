#include "pyrocast/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pyrocast/rng.hpp"

using namespace pyrocast;

namespace {

std::vector<ScoredProject> scored_from(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
  std::vector<ScoredProject> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = {"P" + std::to_string(i), scores[i], labels[i]};
  }
  return out;
}

RasterGrid grid_fill(Eigen::Index rows, Eigen::Index cols, double fill) {
  return make_raster(rows, cols, 0.0, static_cast<double>(rows) * 300.0, 300.0,
                     fill);
}

ProjectPolygon rect(const std::string& id, double x0, double y0, double x1,
                    double y1) {
  ProjectPolygon poly;
  poly.project_id = id;
  poly.rings = {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}};
  return poly;
}

}  // namespace

TEST_CASE("auc on the pinned fixtures") {
  CHECK(auc(scored_from({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(auc(scored_from({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})) == 0.75);
  CHECK(auc(scored_from({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0})) == 0.5);
}

TEST_CASE("auc rejects single-class input") {
  CHECK_THROWS_WITH_AS(auc(scored_from({0.5, 0.7}, {1, 1})),
                       doctest::Contains("degenerate-input error"), data_error);
}

TEST_CASE("auc equals the exhaustive pairwise oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse quantization provokes ties.
      scores[i] = std::floor(rng.uniform() * 8.0) / 8.0;
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
      has_pos |= labels[i] == 1;
      has_neg |= labels[i] == 0;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[n - 1] = 0;
    const double expected = oracles::auc_bruteforce(scores, labels);
    CHECK(auc(scored_from(scores, labels)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(405);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform(-3.0, 3.0);
      labels[i] = i % 2 == 0 ? 1 : 0;
    }
    const double base = auc(scored_from(scores, labels));
    std::vector<double> warped(n);
    for (std::size_t i = 0; i < n; ++i) {
      warped[i] = std::exp(0.5 * scores[i]) + 2.0 * scores[i];
    }
    CHECK(auc(scored_from(warped, labels)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("auc complement under score negation on tie-free inputs") {
  Rng rng(406);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    scores.push_back(rng.uniform() + i * 1e-6);  // distinct
    labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> negated;
  for (double s : scores) negated.push_back(-s);
  CHECK(auc(scored_from(scores, labels)) + auc(scored_from(negated, labels)) ==
        1.0);
}

TEST_CASE("project_scores reductions") {
  RasterGrid prob = grid_fill(10, 10, 0.3);
  const auto polys = std::vector<ProjectPolygon>{
      rect("A", 0.0, 0.0, 3000.0, 3000.0)};

  SUBCASE("uniform raster") {
    const auto scores = project_scores(prob, polys, Reduction::Mean);
    CHECK(scores[0].score == doctest::Approx(0.3));
    const auto max_scores = project_scores(prob, polys, Reduction::Max);
    CHECK(max_scores[0].score == doctest::Approx(0.3));
  }

  SUBCASE("half low half high") {
    for (Eigen::Index r = 0; r < 10; ++r) {
      for (Eigen::Index c = 0; c < 10; ++c) {
        prob.values(r, c) = c < 5 ? 0.2 : 0.6;
      }
    }
    const auto mean_scores = project_scores(prob, polys, Reduction::Mean);
    CHECK(mean_scores[0].score == doctest::Approx(0.4));
    const auto max_scores = project_scores(prob, polys, Reduction::Max);
    CHECK(max_scores[0].score == doctest::Approx(0.6));
  }

  SUBCASE("project outside the raster extent") {
    const auto outside = std::vector<ProjectPolygon>{
        rect("B", 50000.0, 50000.0, 60000.0, 60000.0)};
    CHECK_THROWS_WITH_AS(project_scores(prob, outside, Reduction::Mean),
                         doctest::Contains("coverage error"), data_error);
  }
}

TEST_CASE("compare_models") {
  const auto labels = std::vector<int>{1, 1, 0, 0};
  const auto model = scored_from({0.9, 0.7, 0.4, 0.1}, labels);

  SUBCASE("identical scores give zero delta") {
    const auto cmp = compare_models(model, model);
    CHECK(cmp.delta == 0.0);
    CHECK(cmp.auc_model == cmp.auc_benchmark);
  }

  SUBCASE("label inversion complements both AUCs") {
    auto inverted = model;
    for (auto& s : inverted) s.label = 1 - s.label;
    const auto cmp = compare_models(model, model);
    const auto cmp_inv = compare_models(inverted, inverted);
    CHECK(cmp.auc_model + cmp_inv.auc_model == doctest::Approx(1.0));
  }

  SUBCASE("misaligned project sets are rejected") {
    auto renamed = model;
    renamed[2].project_id = "other";
    CHECK_THROWS_WITH_AS(compare_models(model, renamed),
                         doctest::Contains("alignment error"), data_error);
    auto shorter = std::vector<ScoredProject>(model.begin(), model.end() - 1);
    CHECK_THROWS_AS(compare_models(model, shorter), data_error);
  }
}

TEST_CASE("benchmark CSV ingestion") {
  const auto dir = std::filesystem::temp_directory_path() / "pyrocast_eval_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "benchmark.csv";
  std::ofstream out(path);
  out << "project_id,score\nA,0.25\nB,0.5\n";
  out.close();
  const auto scores = read_benchmark_csv(path);
  CHECK(scores.at("A") == 0.25);
  CHECK(scores.at("B") == 0.5);

  std::ofstream dup(path);
  dup << "project_id,score\nA,0.25\nA,0.5\n";
  dup.close();
  CHECK_THROWS_WITH_AS(read_benchmark_csv(path), doctest::Contains("duplicate"),
                       data_error);
}

TEST_CASE("burned fraction report") {
  // 10x10 project over a 12x12 grid; window 2010-2012.
  std::map<int, RasterGrid> fire;
  for (int y = 2010; y <= 2012; ++y) {
    fire[y] = grid_fill(12, 12, 0.0);
  }
  const auto polys = std::vector<ProjectPolygon>{
      rect("A", 0.0, 600.0, 3000.0, 3600.0)};  // rows 0..9, cols 0..9

  SUBCASE("no fire anywhere") {
    const auto report = burned_fraction_report(fire, polys, {2010, 2012});
    CHECK_FALSE(report[0].any_fire);
    CHECK(report[0].max_annual_fraction == 0.0);
    CHECK(report[0].cumulative_fraction == 0.0);
  }

  SUBCASE("11 of 100 cells in one year") {
    int burned = 0;
    for (Eigen::Index r = 0; r < 10 && burned < 11; ++r) {
      for (Eigen::Index c = 0; c < 10 && burned < 11; ++c) {
        fire[2011].values(r, c) = 1.0;
        ++burned;
      }
    }
    const auto report = burned_fraction_report(fire, polys, {2010, 2012});
    CHECK(report[0].any_fire);
    CHECK(report[0].max_annual_fraction == doctest::Approx(0.11).epsilon(1e-15));
    CHECK(report[0].cumulative_fraction == doctest::Approx(0.11).epsilon(1e-15));
  }

  SUBCASE("two disjoint years union to the cumulative fraction") {
    for (int i = 0; i < 10; ++i) {
      fire[2010].values(0, i) = 1.0;  // 10 cells
    }
    for (int i = 0; i < 15; ++i) {
      fire[2012].values(2 + i / 10, i % 10) = 1.0;  // 15 distinct cells
    }
    const auto report = burned_fraction_report(fire, polys, {2010, 2012});
    CHECK(report[0].max_annual_fraction == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(report[0].cumulative_fraction == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(report[0].cumulative_fraction >= report[0].max_annual_fraction);
  }

  SUBCASE("empty window is a range error") {
    CHECK_THROWS_WITH_AS(burned_fraction_report(fire, polys, {2012, 2010}),
                         doctest::Contains("range error"), data_error);
  }

  SUBCASE("missing year raster is a coverage error") {
    CHECK_THROWS_WITH_AS(burned_fraction_report(fire, polys, {2010, 2013}),
                         doctest::Contains("coverage error"), data_error);
  }
}

TEST_CASE("cumulative >= max annual on random fire histories") {
  Rng rng(407);
  for (int trial = 0; trial < 30; ++trial) {
    std::map<int, RasterGrid> fire;
    RasterGrid nan_mask = grid_fill(10, 10, 0.0);
    for (Eigen::Index i = 0; i < 100; ++i) {
      nan_mask.values.data()[i] = rng.bernoulli(0.1) ? 1.0 : 0.0;
    }
    for (int y = 2000; y < 2006; ++y) {
      RasterGrid g = grid_fill(10, 10, 0.0);
      for (Eigen::Index i = 0; i < 100; ++i) {
        g.values.data()[i] = nan_mask.values.data()[i] == 1.0
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : (rng.bernoulli(0.15) ? 1.0 : 0.0);
      }
      fire[y] = std::move(g);
    }
    const auto polys = std::vector<ProjectPolygon>{
        rect("A", 0.0, 0.0, 3000.0, 3000.0)};
    const auto report = burned_fraction_report(fire, polys, {2000, 2005});
    CHECK(report[0].cumulative_fraction >= report[0].max_annual_fraction);
    const auto labels = project_fire_labels(fire, polys, {2000, 2005});
    CHECK(labels[0] == (report[0].any_fire ? 1 : 0));
  }
}
