#pragma once

#include <limits>
#include <span>
#include <vector>

#include "modalkit/density.hpp"

namespace modalkit::modes {

// One conditional local mode: its location, joint-density value there, and
// the (negative) second y-derivative of the density.
struct ModePoint {
  double y = 0.0;
  double density = 0.0;
  double curvature = 0.0;
};

// Conditional local modes at one covariate value, strictly increasing in y.
// `flagged` marks grid points where no candidate survived (flat density or
// every candidate rejected); such sets are empty but not an error.
struct ModeSet {
  double x = 0.0;
  std::vector<ModePoint> points;
  bool flagged = false;

  bool empty() const { return points.empty(); }
  std::vector<double> mode_values() const;
};

// Multi-valued modal curve: one ModeSet per grid point.
struct ModalCurve {
  std::vector<double> grid;
  std::vector<ModeSet> sets;

  std::size_t size() const { return grid.size(); }
};

struct MeanshiftConfig {
  int max_iter = 500;
  // |y_{t+1} - y_t| threshold; NaN selects 1e-7 * response span.
  double conv_tol = std::numeric_limits<double>::quiet_NaN();
  // cluster width for merging converged candidates; NaN selects h2 / 2.
  double merge_tol = std::numeric_limits<double>::quiet_NaN();
  int init_count = 30;
  // bound on the relative fixed-point residual h2^2 |dp/dy| / (p * span);
  // candidates at or above it are discarded.
  double grad_tol = 1e-8;
  int threads = 1;
};

// One partial meanshift update of the response coordinate at fixed x:
//   y' = sum_i Y_i w_i / sum_i w_i,  w_i = weight_i Kx((X_i-x)/h1) K2((Y_i-y)/h2).
// Throws std::domain_error when the denominator vanishes and
// std::invalid_argument for the deconvolution variant (signed weights).
double partial_meanshift_step(const density::JointDensityModel& model, double x,
                              double y);

// Meanshift iterates y_0, y_1, ... until |step| < conv_tol or max_iter.
std::vector<double> meanshift_trajectory(const density::JointDensityModel& model,
                                         double x, double y0,
                                         const MeanshiftConfig& cfg = {});

// Relative fixed-point residual used by grad_tol; +inf where the density is
// not positive.
double normalized_gradient(const density::JointDensityModel& model, double x,
                           double y);

// All conditional local modes over the grid. Meanshift from init_count
// equally spaced starts per grid point (dense scan with local refinement for
// the deconvolution variant), Newton-polished, merged within merge_tol, and
// filtered by the gradient/curvature checks.
ModalCurve fit_multimodal(const density::JointDensityModel& model,
                          std::span<const double> grid,
                          const MeanshiftConfig& cfg = {});

// Conditional global mode per grid point, returned as a modal curve with
// singleton sets. Equals the highest-density member of fit_multimodal's set
// for a gaussian response kernel; falls back to a dense scan (plus
// golden-section refinement where the kernel is differentiable) otherwise.
ModalCurve fit_unimodal(const density::JointDensityModel& model,
                        std::span<const double> grid,
                        const MeanshiftConfig& cfg = {});

// Recipe for fitting standard-variant models from plain samples; this is the
// unit of work for cross-validation folds and bootstrap replicates.
struct FitConfig {
  kernels::Kernel kernel_x{kernels::KernelFamily::gaussian};
  kernels::Kernel kernel_y{kernels::KernelFamily::gaussian};
  double h1 = 0.0;
  double h2 = 0.0;
  MeanshiftConfig meanshift{};
};

ModalCurve fit_multimodal(const density::Sample& sample, const FitConfig& cfg,
                          std::span<const double> grid);
ModalCurve fit_unimodal(const density::Sample& sample, const FitConfig& cfg,
                        std::span<const double> grid);

}  // namespace modalkit::modes
