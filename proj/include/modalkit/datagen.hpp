#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "modalkit/density.hpp"
#include "modalkit/modes.hpp"

namespace modalkit::datagen {

// One mixture component with covariate-dependent weight, mean, and standard
// deviation.
struct MixtureComponent {
  std::function<double(double)> weight;
  std::function<double(double)> mean;
  std::function<double(double)> sd;
};

// Conditional gaussian mixture Y | X = x ~ sum_l w_l(x) N(m_l(x), s_l(x)^2)
// with X uniform on [x_min, x_max]. Weights must sum to one and sds must be
// positive; both are checked on a grid at construction time via validate().
struct MixtureSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  std::vector<MixtureComponent> components;

  void validate() const;
  // conditional density of Y given X = x and its first two y-derivatives
  double conditional_pdf(double x, double y) const;
  double conditional_pdf_dy(double x, double y) const;
  double conditional_pdf_dyy(double x, double y) const;
};

density::Sample generate(const MixtureSpec& spec, std::size_t n,
                         std::uint64_t seed);

// Adds seeded iid noise to the covariates only.
density::ContaminatedSample contaminate(const density::Sample& sample,
                                        const kernels::ErrorDistribution& error,
                                        std::uint64_t seed);

struct CensoringSpec {
  enum class Kind { constant, uniform, exponential };
  Kind kind = Kind::exponential;
  double a = 1.0;  // constant value / lower bound / rate
  double b = 0.0;  // upper bound (uniform only)
};

// Draws censoring times independently of the data; time = min(y, c),
// event = 1 when the response survived censoring. The result may have no
// events at all; estimators that need events reject such samples themselves.
density::CensoredSample censor(const density::Sample& sample,
                               const CensoringSpec& censoring,
                               std::uint64_t seed);

// Exact conditional local modes of the mixture density per grid point (dense
// scan plus Newton refinement on the analytic density). For well-separated
// components these agree with the component means to high accuracy.
modes::ModalCurve true_modes(const MixtureSpec& spec,
                             std::span<const double> grid);

// Three crossing branches x-2, sin(4x), x+2 with sd 0.25 and equal weights
// on X ~ U[0, 1]; branches approach each other near x = 1.
MixtureSpec three_branch_fixture();

// Three flat, well-separated levels at -2, 0, 2 with sd 0.3.
MixtureSpec three_level_fixture();

}  // namespace modalkit::datagen
