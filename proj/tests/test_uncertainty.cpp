#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modalkit/datagen.hpp"
#include "modalkit/rng.hpp"
#include "modalkit/uncertainty.hpp"

using namespace modalkit;
using density::Sample;
using modes::FitConfig;
using modes::ModalCurve;
using uncertainty::Interval;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) /
                      static_cast<double>(count - 1);
  }
  return out;
}

ModalCurve toy_curve() {
  ModalCurve curve;
  curve.grid = {0.0, 0.5, 1.0};
  for (double x : curve.grid) {
    modes::ModeSet set;
    set.x = x;
    set.points.push_back({-1.0, 0.3, -1.0});
    set.points.push_back({1.0, 0.3, -1.0});
    curve.sets.push_back(std::move(set));
  }
  return curve;
}

}  // namespace

TEST_CASE("interval merging") {
  auto merged = uncertainty::merge_intervals(
      {{0.0, 1.0}, {2.0, 3.0}, {0.5, 1.5}, {2.9, 3.2}});
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].lo == 0.0);
  CHECK(merged[0].hi == 1.5);
  CHECK(merged[1].lo == 2.0);
  CHECK(merged[1].hi == 3.2);
}

TEST_CASE("higher quantile convention") {
  const std::vector<double> v{3.0, 1.0, 2.0, 4.0};
  CHECK(uncertainty::empirical_quantile_higher(v, 1.0) == 4.0);
  CHECK(uncertainty::empirical_quantile_higher(v, 0.5) == 2.0);
  CHECK(uncertainty::empirical_quantile_higher(v, 0.51) == 3.0);
  CHECK(uncertainty::empirical_quantile_higher(v, 1e-9) == 1.0);
  CHECK_THROWS_AS(uncertainty::empirical_quantile_higher({}, 0.5),
                  std::invalid_argument);
}

TEST_CASE("holdout exactly on the modes gives a degenerate band") {
  const auto curve = toy_curve();
  Sample holdout({0.0, 0.4, 0.9, 0.6}, {-1.0, 1.0, -1.0, 1.0});
  const auto band = uncertainty::prediction_band(curve, holdout, 0.9);
  CHECK(band.radius == 0.0);
  CHECK(band.total_size == 0.0);
  for (const auto& per_point : band.intervals) {
    for (const auto& iv : per_point) CHECK(iv.length() == 0.0);
  }
}

TEST_CASE("level one takes the maximum residual and covers everything") {
  const auto curve = toy_curve();
  detail::Rng rng(5);
  std::vector<double> xs(40), ys(40);
  for (std::size_t i = 0; i < 40; ++i) {
    xs[i] = rng.uniform(0.0, 1.0);
    ys[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) + 0.3 * rng.normal();
  }
  Sample holdout(xs, ys);
  const auto band = uncertainty::prediction_band(curve, holdout, 1.0);
  double max_residual = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    max_residual = std::max(
        max_residual, std::min(std::abs(ys[i] + 1.0), std::abs(ys[i] - 1.0)));
  }
  CHECK(band.radius == doctest::Approx(max_residual).epsilon(1e-15));
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(uncertainty::covers(band, xs[i], ys[i]));
  }
}

TEST_CASE("band size is monotone in the level") {
  const auto curve = toy_curve();
  detail::Rng rng(17);
  std::vector<double> xs(60), ys(60);
  for (std::size_t i = 0; i < 60; ++i) {
    xs[i] = rng.uniform(0.0, 1.0);
    ys[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) + 0.4 * rng.normal();
  }
  Sample holdout(xs, ys);
  double previous = 0.0;
  for (double level : {0.5, 0.7, 0.8, 0.9, 0.95, 1.0}) {
    const auto band = uncertainty::prediction_band(curve, holdout, level);
    CHECK(band.total_size >= previous);
    previous = band.total_size;
  }
}

TEST_CASE("empty sets fall back to the nearest non-empty grid point") {
  auto curve = toy_curve();
  curve.sets[1].points.clear();
  curve.sets[1].flagged = true;
  Sample holdout({0.5, 0.55}, {1.0, -1.0});
  int fallbacks = 0;
  const auto residuals = uncertainty::band_residuals(curve, holdout, &fallbacks);
  CHECK(fallbacks == 2);
  CHECK(residuals[0] == 0.0);  // matched against a neighbor's modes
  CHECK(residuals[1] == 0.0);
}

TEST_CASE("multi-modal bands are tighter than uni-modal bands on branched data") {
  const auto spec = datagen::three_branch_fixture();
  const auto train = datagen::generate(spec, 900, 41);
  const auto holdout = datagen::generate(spec, 450, 42);
  const auto grid = linspace(0.05, 0.95, 25);

  FitConfig cfg;
  cfg.h1 = 0.12;
  cfg.h2 = 0.3;
  const auto multi = modes::fit_multimodal(train, cfg, grid);
  const auto uni = modes::fit_unimodal(train, cfg, grid);

  const auto multi_band = uncertainty::prediction_band(multi, holdout, 0.9);
  const auto uni_band = uncertainty::prediction_band(uni, holdout, 0.9);
  CHECK(multi_band.total_size < uni_band.total_size);
}

TEST_CASE("degenerate resamples give zero deviations and a zero radius") {
  // every row identical: any with-replacement resample equals the sample
  Sample degenerate(std::vector<double>(30, 0.5), std::vector<double>(30, 1.0));
  FitConfig cfg;
  cfg.h1 = 0.2;
  cfg.h2 = 0.2;
  const auto band = uncertainty::bootstrap_confidence_band(
      degenerate, cfg, std::vector<double>{0.5}, 25, 0.9, 7);
  CHECK(band.radius == 0.0);
  CHECK(band.dropped_replicates == 0);
  for (double d : band.deviations) CHECK(d == 0.0);

  // same conclusion through the deviation-vector entry point
  const auto direct = uncertainty::confidence_band_from_deviations(
      modes::fit_multimodal(degenerate, cfg, std::vector<double>{0.5}),
      std::vector<double>(25, 0.0), 0.9);
  CHECK(direct.radius == 0.0);
}

TEST_CASE("confidence radius is non-decreasing in the level") {
  const auto spec = datagen::three_level_fixture();
  const auto sample = datagen::generate(spec, 250, 13);
  FitConfig cfg;
  cfg.h1 = 0.15;
  cfg.h2 = 0.3;
  const auto grid = linspace(0.2, 0.8, 7);
  const auto low =
      uncertainty::bootstrap_confidence_band(sample, cfg, grid, 40, 0.8, 3);
  const auto high =
      uncertainty::bootstrap_confidence_band(sample, cfg, grid, 40, 0.95, 3);
  CHECK(low.radius <= high.radius);
  // deterministic under a fixed seed
  const auto again =
      uncertainty::bootstrap_confidence_band(sample, cfg, grid, 40, 0.8, 3);
  CHECK(low.radius == again.radius);
  CHECK(low.total_size == again.total_size);
}

TEST_CASE("confidence band covers the true curve at most grid points") {
  datagen::MixtureSpec spec;
  spec.components = {{[](double) { return 1.0; },
                      [](double x) { return std::sin(3.0 * x); },
                      [](double) { return 0.3; }}};
  const auto sample = datagen::generate(spec, 300, 29);
  FitConfig cfg;
  cfg.h1 = 0.12;
  cfg.h2 = 0.22;
  const auto grid = linspace(0.1, 0.9, 17);
  const auto band =
      uncertainty::bootstrap_confidence_band(sample, cfg, grid, 100, 0.9, 8);
  int covered = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double truth = std::sin(3.0 * grid[g]);
    for (const auto& iv : band.intervals[g]) {
      if (truth >= iv.lo && truth <= iv.hi) {
        ++covered;
        break;
      }
    }
  }
  CHECK(covered >= static_cast<int>(0.8 * static_cast<double>(grid.size())));
}

TEST_CASE("bootstrap validation") {
  Sample sample({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0});
  FitConfig cfg;
  cfg.h1 = 0.3;
  cfg.h2 = 0.3;
  CHECK_THROWS_AS(uncertainty::bootstrap_confidence_band(
                      sample, cfg, std::vector<double>{0.5}, 5, 0.9, 1),
                  std::invalid_argument);
}

TEST_CASE("bootstrap errors out when most refits find no modes") {
  // box covariate kernel with data far from the only grid point: every
  // resample gives a flat slice there, so every replicate is dropped
  Sample sample({0.0, 10.0, 20.0}, {0.0, 1.0, 2.0});
  FitConfig cfg;
  cfg.kernel_x = kernels::Kernel(kernels::KernelFamily::box);
  cfg.h1 = 1.0;
  cfg.h2 = 0.5;
  CHECK_THROWS_AS(uncertainty::bootstrap_confidence_band(
                      sample, cfg, std::vector<double>{5.0}, 20, 0.9, 2),
                  std::runtime_error);
}
