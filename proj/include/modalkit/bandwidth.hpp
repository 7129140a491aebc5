#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "modalkit/density.hpp"
#include "modalkit/modes.hpp"

namespace modalkit::bandwidth {

// Normal reference rule h = 1.06 min(sd, IQR/1.34) n^{-1/5}; the IQR uses
// linearly interpolated quantiles. Throws on zero spread.
double silverman_rule(std::span<const double> values);

// count geometrically spaced values from lo to hi inclusive
std::vector<double> log_spaced(double lo, double hi, int count);

struct TracePoint {
  double h1 = 0.0;
  double h2 = 0.0;
  double criterion = 0.0;
};

struct BandwidthChoice {
  double h1 = 0.0;
  double h2 = 0.0;
  std::string method;
  std::vector<TracePoint> trace;        // criterion per candidate
  std::vector<TracePoint> trace_extra;  // simex: second-stage criterion
  double h1_star = std::numeric_limits<double>::quiet_NaN();
  double h1_double_star = std::numeric_limits<double>::quiet_NaN();
  bool boundary_minimizer = false;  // minimizer sits on a grid edge
  int skipped_terms = 0;            // leave-one-out terms with no kernel mass
};

struct CvConfig {
  std::vector<double> h1_candidates;
  std::vector<double> h2_candidates;
  // kernels of the conditional-density estimate; kernel_x doubles as the
  // deconvolution base in cv_simex
  kernels::Kernel kernel_x{kernels::KernelFamily::gaussian};
  kernels::Kernel kernel_y{kernels::KernelFamily::gaussian};
  // weight window; NaN selects the query range trimmed by 5% per side
  double omega_lo = std::numeric_limits<double>::quiet_NaN();
  double omega_hi = std::numeric_limits<double>::quiet_NaN();
  // response integration grid; NaN selects the response range padded by
  // 4 * max h2 candidate
  double y_lo = std::numeric_limits<double>::quiet_NaN();
  double y_hi = std::numeric_limits<double>::quiet_NaN();
  int y_grid_size = 161;
};

// Candidate grids centered on the Silverman values, spanning [1/4, 4] times
// the center geometrically.
CvConfig default_cv_config(const density::Sample& sample, int h1_count = 9,
                           int h2_count = 9);

// Leave-one-out cross-validation of the conditional density:
//   CV(h1,h2) = (1/n) sum_i int p2_{-i}(y|X_i)^2 w(X_i) dy
//             - (2/n) sum_i w(X_i) p_{-i}(Y_i|X_i)
// integrated numerically on the configured response grid. Terms whose
// leave-one-out covariate mass vanishes are skipped and counted.
BandwidthChoice cv_conditional_density(const density::Sample& sample,
                                       const CvConfig& cfg);

// Simulation-extrapolation selector for contaminated covariates: h2 comes
// from the Silverman rule on the responses; for each replicate the sample is
// contaminated once more (W* = W + U*) and again (W** = W* + U**), the
// deconvolution estimators built on the noisier covariates are scored by the
// CV criterion at the less noisy ones, and the averaged criteria yield
// minimizers h1* and h1** that extrapolate back to h1 = (h1*)^2 / h1**.
BandwidthChoice cv_simex(const density::ContaminatedSample& sample,
                         const CvConfig& cfg, int replicates,
                         std::uint64_t seed);

// Chooses the candidate whose fitted modal curve yields the smallest average
// prediction-band size over cross-validation folds at the given level.
BandwidthChoice prediction_band_cv(const density::Sample& sample,
                                   const CvConfig& cfg,
                                   std::span<const double> grid, double level,
                                   int folds, std::uint64_t seed,
                                   const modes::MeanshiftConfig& ms = {});

// Bootstrap estimate of the integrated squared Hausdorff distance between
// refitted and original modal curves, minimized over the candidates.
BandwidthChoice modal_cv_bootstrap(const density::Sample& sample,
                                   const CvConfig& cfg,
                                   std::span<const double> grid, int n_boot,
                                   std::uint64_t seed,
                                   const modes::MeanshiftConfig& ms = {});

}  // namespace modalkit::bandwidth
