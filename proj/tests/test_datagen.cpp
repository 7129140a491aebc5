#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modalkit/datagen.hpp"
#include "modalkit/rng.hpp"

using namespace modalkit;
using datagen::CensoringSpec;
using datagen::MixtureSpec;

TEST_CASE("degenerate single component reproduces its mean function") {
  MixtureSpec spec;
  spec.components = {{[](double) { return 1.0; },
                      [](double x) { return 2.0 * x - 1.0; },
                      [](double) { return 1e-9; }}};
  const auto sample = datagen::generate(spec, 50, 4);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    CHECK(sample.y[i] ==
          doctest::Approx(2.0 * sample.x[i] - 1.0).scale(1.0).epsilon(1e-7));
  }
}

TEST_CASE("component frequencies match the mixing weights") {
  const auto spec = datagen::three_level_fixture();
  const auto sample = datagen::generate(spec, 10000, 99);
  // components are well separated; classify by nearest level
  std::array<int, 3> counts{0, 0, 0};
  for (double y : sample.y) {
    if (y < -1.0) ++counts[0];
    else if (y < 1.0) ++counts[1];
    else ++counts[2];
  }
  const double bound = 3.0 / std::sqrt(10000.0);
  for (int c : counts) {
    CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) < bound);
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto spec = datagen::three_branch_fixture();
  const auto a = datagen::generate(spec, 100, 7);
  const auto b = datagen::generate(spec, 100, 7);
  const auto c = datagen::generate(spec, 100, 8);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.x != c.x);
}

TEST_CASE("mixture validation rejects bad weights") {
  MixtureSpec bad;
  bad.components = {{[](double) { return 0.7; }, [](double) { return 0.0; },
                     [](double) { return 1.0; }}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  MixtureSpec bad_sd;
  bad_sd.components = {{[](double) { return 1.0; }, [](double) { return 0.0; },
                        [](double) { return 0.0; }}};
  CHECK_THROWS_AS(bad_sd.validate(), std::invalid_argument);
}

TEST_CASE("contaminate adds noise to covariates only") {
  const auto spec = datagen::three_level_fixture();
  const auto sample = datagen::generate(spec, 300, 15);

  const auto zero = datagen::contaminate(
      sample, kernels::ErrorDistribution(kernels::ErrorFamily::laplace, 0.0), 1);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    CHECK(zero.w[i] == sample.x[i]);
  }
  CHECK(zero.y == sample.y);

  const auto noisy = datagen::contaminate(
      sample, kernels::ErrorDistribution(kernels::ErrorFamily::laplace, 0.3), 1);
  CHECK(noisy.y == sample.y);
  const auto again = datagen::contaminate(
      sample, kernels::ErrorDistribution(kernels::ErrorFamily::laplace, 0.3), 1);
  CHECK(noisy.w == again.w);
}

TEST_CASE("laplace noise has variance 2 sigma^2") {
  MixtureSpec flat;
  flat.components = {{[](double) { return 1.0; }, [](double) { return 0.0; },
                      [](double) { return 1.0; }}};
  const auto sample = datagen::generate(flat, 100000, 31);
  const double sigma = 0.5;
  const auto noisy = datagen::contaminate(
      sample, kernels::ErrorDistribution(kernels::ErrorFamily::laplace, sigma), 77);
  double mean = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) mean += noisy.w[i] - sample.x[i];
  mean /= static_cast<double>(sample.size());
  double var = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = noisy.w[i] - sample.x[i] - mean;
    var += u * u;
  }
  var /= static_cast<double>(sample.size() - 1);
  CHECK(var == doctest::Approx(2.0 * sigma * sigma).epsilon(0.05));
}

TEST_CASE("censoring edge cases") {
  const auto spec = datagen::three_level_fixture();
  const auto sample = datagen::generate(spec, 200, 8);

  CensoringSpec never;
  never.kind = CensoringSpec::Kind::constant;
  never.a = std::numeric_limits<double>::infinity();
  const auto uncensored = datagen::censor(sample, never, 5);
  CHECK(uncensored.event_count() == sample.size());
  CHECK(uncensored.time == sample.y);

  CensoringSpec always;
  always.kind = CensoringSpec::Kind::constant;
  always.a = -100.0;  // below every response
  const auto censored = datagen::censor(sample, always, 5);
  CHECK(censored.event_count() == 0);
  for (double t : censored.time) CHECK(t == -100.0);
}

TEST_CASE("censoring fraction matches its Monte-Carlo probability") {
  MixtureSpec flat;
  flat.components = {{[](double) { return 1.0; }, [](double) { return 1.0; },
                      [](double) { return 0.5; }}};
  const auto sample = datagen::generate(flat, 10000, 64);
  CensoringSpec exp_censoring;
  exp_censoring.kind = CensoringSpec::Kind::exponential;
  exp_censoring.a = 0.8;
  const auto censored = datagen::censor(sample, exp_censoring, 3);
  const double observed_fraction =
      1.0 - static_cast<double>(censored.event_count()) /
                static_cast<double>(sample.size());

  // independent Monte-Carlo estimate of P(C < Y) with different seeds
  detail::Rng rng(90210);
  int below = 0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double y = rng.normal(1.0, 0.5);
    const double c = rng.exponential(0.8);
    if (c < y) ++below;
  }
  const double expected = static_cast<double>(below) / draws;
  CHECK(std::abs(observed_fraction - expected) < 0.02);
}

TEST_CASE("true modes equal well-separated component means") {
  const auto spec = datagen::three_level_fixture();
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto truth = datagen::true_modes(spec, grid);
  for (const auto& set : truth.sets) {
    REQUIRE(set.points.size() == 3);
    CHECK(std::abs(set.points[0].y - (-2.0)) < 1e-3);
    CHECK(std::abs(set.points[1].y - 0.0) < 1e-3);
    CHECK(std::abs(set.points[2].y - 2.0) < 1e-3);
  }
}

TEST_CASE("true modes agree with a dense density scan") {
  const auto spec = datagen::three_branch_fixture();
  const std::vector<double> grid{0.1, 0.5, 0.95};
  const auto truth = datagen::true_modes(spec, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    // dense scan oracle on the exact conditional density
    std::vector<double> scan_modes;
    const double lo = -3.5, hi = 4.0, step = 1e-3;
    double prev = spec.conditional_pdf(grid[g], lo - step);
    double cur = spec.conditional_pdf(grid[g], lo);
    for (double y = lo; y <= hi; y += step) {
      const double next = spec.conditional_pdf(grid[g], y + step);
      if (cur >= prev && cur > next) scan_modes.push_back(y);
      prev = cur;
      cur = next;
    }
    REQUIRE(scan_modes.size() == truth.sets[g].points.size());
    for (std::size_t m = 0; m < scan_modes.size(); ++m) {
      CHECK(std::abs(scan_modes[m] - truth.sets[g].points[m].y) < 1e-3);
    }
  }
}

TEST_CASE("branches merge near the right edge of the three-branch fixture") {
  const auto spec = datagen::three_branch_fixture();
  const auto truth = datagen::true_modes(spec, std::vector<double>{1.0});
  // x - 2 and sin(4x) are only 0.24 apart at x = 1, well inside one sd
  CHECK(truth.sets[0].points.size() < 3);
}
