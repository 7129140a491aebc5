#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modalkit/kernels.hpp"
#include "modalkit/rng.hpp"
#include "oracles.hpp"

using namespace modalkit;
using kernels::DeconvKernel;
using kernels::ErrorDistribution;
using kernels::ErrorFamily;
using kernels::Kernel;
using kernels::KernelFamily;

namespace {
const Kernel gaussian{KernelFamily::gaussian};
const Kernel box{KernelFamily::box};
const Kernel epanechnikov{KernelFamily::epanechnikov};
const Kernel fourier{KernelFamily::fourier};
}  // namespace

TEST_CASE("kernel values at reference points") {
  CHECK(gaussian(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(gaussian(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-12));
  CHECK(box(0.5) == 0.5);
  CHECK(box(1.0) == 0.5);
  CHECK(box(1.0000001) == 0.0);
  CHECK(epanechnikov(0.0) == 0.75);
  CHECK(epanechnikov(2.0) == 0.0);
}

TEST_CASE("kernel symmetry and nonnegativity") {
  for (const Kernel& k : {gaussian, box, epanechnikov}) {
    for (double u = -4.0; u <= 4.0; u += 0.173) {
      CHECK(k(u) == k(-u));
      CHECK(k(u) >= 0.0);
    }
  }
  // the fourier base is symmetric but signed
  CHECK(fourier(3.0) == doctest::Approx(fourier(-3.0)).epsilon(1e-12));
}

TEST_CASE("kernels integrate to one") {
  for (const Kernel& k : {gaussian, box, epanechnikov}) {
    const double r = k.support_radius();
    const double integral = oracles::simpson([&](double u) { return k(u); },
                                             -r, r, 20000);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  }
  // t^-4 tails: integrate far out and allow a looser tolerance
  const double integral = oracles::simpson([&](double u) { return fourier(u); },
                                           -400.0, 400.0, 400000);
  CHECK(integral == doctest::Approx(1.0).epsilon(2e-5));
}

TEST_CASE("gaussian derivative identities") {
  CHECK(gaussian.deriv1(0.0) == 0.0);
  CHECK(gaussian.deriv1(1.0) ==
        doctest::Approx(-0.24197072451914337).epsilon(1e-12));
  for (double u = -5.0; u <= 5.0; u += 0.1) {
    CHECK(gaussian.deriv1(u) == doctest::Approx(-u * gaussian(u)).epsilon(1e-14));
  }
}

TEST_CASE("derivatives match central finite differences") {
  for (int i = 0; i < 100; ++i) {
    const double u = -5.0 + 10.0 * i / 99.0;
    const double fd1 =
        oracles::central_diff([&](double v) { return gaussian(v); }, u, 1e-5);
    const double fd2 =
        oracles::central_diff2([&](double v) { return gaussian(v); }, u, 1e-5);
    CHECK(gaussian.deriv1(u) == doctest::Approx(fd1).epsilon(1e-7));
    CHECK(gaussian.deriv2(u) == doctest::Approx(fd2).epsilon(1e-5));
  }
  // epanechnikov interior point, analytic derivative of 0.75 (1 - u^2)
  CHECK(epanechnikov.deriv1(0.5) == doctest::Approx(-0.75).epsilon(1e-12));
  const double fd = oracles::central_diff(
      [&](double v) { return epanechnikov(v); }, 0.5, 1e-6);
  CHECK(epanechnikov.deriv1(0.5) == doctest::Approx(fd).epsilon(1e-8));
  // fourier closed forms, spot-checked across the series/closed-form split;
  // the second difference needs a coarser step because the closed form
  // carries ~1e-13 cancellation noise just above the split point
  for (double u : {0.05, 0.3, 0.69, 0.71, 1.7, 6.3, 24.0}) {
    const double fd1 =
        oracles::central_diff([&](double v) { return fourier(v); }, u, 1e-6);
    CHECK(fourier.deriv1(u) == doctest::Approx(fd1).epsilon(1e-6));
    const double fd2 =
        oracles::central_diff2([&](double v) { return fourier(v); }, u, 1e-3);
    CHECK(fourier.deriv2(u) == doctest::Approx(fd2).epsilon(1e-5));
  }
}

TEST_CASE("box kernel is not differentiable on its edge") {
  CHECK_THROWS_AS(box.deriv1(1.0), std::domain_error);
  CHECK_THROWS_AS(box.deriv2(-1.0), std::domain_error);
  CHECK(box.deriv1(0.3) == 0.0);
}

TEST_CASE("characteristic functions") {
  CHECK(gaussian.cf(0.0) == 1.0);
  CHECK(box.cf(0.0) == 1.0);
  CHECK(epanechnikov.cf(0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fourier.cf(0.0) == 1.0);
  CHECK(fourier.cf(1.0) == 0.0);
  // cf equals the cosine transform of the kernel
  for (double s : {0.3, 1.2, 2.5}) {
    const double direct = oracles::simpson(
        [&](double u) { return epanechnikov(u) * std::cos(s * u); }, -1.0, 1.0,
        4000);
    CHECK(epanechnikov.cf(s) == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("error distribution characteristic functions") {
  const ErrorDistribution laplace(ErrorFamily::laplace, 0.4);
  const ErrorDistribution normal(ErrorFamily::gaussian, 0.4);
  CHECK(laplace.cf(0.0) == 1.0);
  CHECK(normal.cf(0.0) == 1.0);
  for (double s = -30.0; s <= 30.0; s += 0.7) {
    CHECK(std::abs(laplace.cf(s)) <= 1.0);
    CHECK(std::abs(normal.cf(s)) <= 1.0);
  }
  CHECK_THROWS_AS(ErrorDistribution(ErrorFamily::laplace, -1.0),
                  std::invalid_argument);
}

TEST_CASE("laplace deconvolution closed form") {
  // (t^2 - 1) vanishes at t = 1, so any scale and bandwidth give K_G(1)
  for (double sigma : {0.05, 0.2, 0.45}) {
    const DeconvKernel ku(gaussian, {ErrorFamily::laplace, sigma}, 0.5);
    CHECK(ku(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-12));
  }
  // frozen value for sigma = 0.1, h = 0.5, t = 0: K_G(0) * 1.04
  const DeconvKernel ku(gaussian, {ErrorFamily::laplace, 0.1}, 0.5);
  CHECK(ku(0.0) == doctest::Approx(0.41489997161749005).epsilon(1e-10));
  // cross-check against the Fourier inversion integral
  const double by_quadrature = oracles::deconv_by_fourier(
      [&](double s) { return gaussian.cf(s); },
      [&](double s) { return 1.0 / (1.0 + 0.01 * s * s); }, 0.5, 0.0, 14.0,
      8000);
  CHECK(ku(0.0) == doctest::Approx(by_quadrature).epsilon(1e-6));
}

TEST_CASE("zero error scale reduces to the base kernel") {
  const DeconvKernel ku(gaussian, {ErrorFamily::laplace, 0.0}, 0.7);
  for (double t = -3.0; t <= 3.0; t += 0.37) {
    CHECK(ku(t) == gaussian(t));
  }
}

TEST_CASE("laplace closed form matches quadrature on random triples") {
  detail::Rng rng(20240817);
  for (int rep = 0; rep < 20; ++rep) {
    const double h1 = rng.uniform(0.2, 1.5);
    const double sigma = rng.uniform(0.05, 1.0) * h1;  // sigma / h1 <= 1
    const double t = rng.uniform(-4.0, 4.0);
    const DeconvKernel ku(gaussian, {ErrorFamily::laplace, sigma}, h1);
    const double expected = oracles::deconv_by_fourier(
        [&](double s) { return gaussian.cf(s); },
        [&](double s) { return 1.0 / (1.0 + sigma * sigma * s * s); }, h1, t,
        14.0, 8000);
    CHECK(ku(t) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("gaussian error requires the fourier base") {
  CHECK_THROWS_AS(DeconvKernel(gaussian, {ErrorFamily::gaussian, 0.2}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(DeconvKernel(box, {ErrorFamily::laplace, 0.2}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(DeconvKernel(epanechnikov, {ErrorFamily::laplace, 0.2}, 0.5),
                  std::invalid_argument);

  const DeconvKernel ku(fourier, {ErrorFamily::gaussian, 0.15}, 0.5);
  for (double t : {0.0, 0.8, 2.4}) {
    const double expected = oracles::deconv_by_fourier(
        [&](double s) { return fourier.cf(s); },
        [&](double s) { return std::exp(-0.5 * 0.15 * 0.15 * s * s); }, 0.5, t,
        1.0, 4000);
    CHECK(ku(t) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("deconvolution kernels are symmetric and integrate to one") {
  const DeconvKernel laplace_ku(gaussian, {ErrorFamily::laplace, 0.2}, 0.5);
  const DeconvKernel fourier_ku(fourier, {ErrorFamily::gaussian, 0.1}, 0.4);
  for (double t = 0.1; t < 4.0; t += 0.53) {
    CHECK(laplace_ku(t) == doctest::Approx(laplace_ku(-t)).epsilon(1e-12));
    CHECK(fourier_ku(t) == doctest::Approx(fourier_ku(-t)).epsilon(1e-9));
  }
  const double laplace_mass = oracles::simpson(
      [&](double t) { return laplace_ku(t); }, -10.0, 10.0, 20000);
  CHECK(laplace_mass == doctest::Approx(1.0).epsilon(1e-4));
  // |t|^-4 tails put less than 2e-5 of mass beyond 60; integrate one side
  const double fourier_mass = 2.0 * oracles::simpson(
      [&](double t) { return fourier_ku(t); }, 0.0, 60.0, 12000);
  CHECK(fourier_mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("family names round-trip") {
  for (auto family : {KernelFamily::gaussian, KernelFamily::box,
                      KernelFamily::epanechnikov, KernelFamily::fourier}) {
    CHECK(kernels::kernel_family_from_name(kernels::to_string(family)) == family);
  }
  CHECK_THROWS_AS(kernels::kernel_family_from_name("triangle"),
                  std::invalid_argument);
}
