#pragma once

#include <cstdint>
#include <random>

namespace modalkit::detail {

// splitmix64 finalizer; used to derive independent per-replicate seeds from
// one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded draws on top of mt19937_64. The transforms are written out instead
// of using <random> distributions so that identical seeds give identical
// streams on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal via Box-Muller (two uniforms per draw)
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.1415926535897932384626433832795 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) {
    return -std::log(1.0 - uniform()) / rate;
  }

  // Laplace with density exp(-|u|/scale) / (2 scale); variance 2 scale^2.
  double laplace(double scale) {
    const double u = uniform() - 0.5;
    const double mag = -scale * std::log(1.0 - 2.0 * std::abs(u));
    return u < 0.0 ? -mag : mag;
  }

  // unbiased integer on [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace modalkit::detail
