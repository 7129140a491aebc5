#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modalkit/density.hpp"
#include "modalkit/modes.hpp"

namespace modalkit::uncertainty {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// Sorts and merges overlapping or touching intervals.
std::vector<Interval> merge_intervals(std::vector<Interval> intervals);

// Empirical quantile with the "higher" convention: the smallest order
// statistic whose rank is >= level * n. Conservative; level in (0, 1].
double empirical_quantile_higher(std::vector<double> values, double level);

// Distance from a holdout response to the nearest mode at the grid point
// closest to its covariate; empty sets fall back to the nearest non-empty
// grid point (counted in fallback_points).
std::vector<double> band_residuals(const modes::ModalCurve& curve,
                                   const density::Sample& holdout,
                                   int* fallback_points = nullptr);

// sum over grid cells of trapezoid width x merged length of [mode +- radius]
double merged_band_size(const modes::ModalCurve& curve, double radius,
                        std::span<const double> cell_weights);

// Union of intervals of a data-driven radius around every conditional mode.
struct PredictionBand {
  double level = 0.0;
  double radius = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<Interval>> intervals;  // merged, per grid point
  double total_size = 0.0;
  int fallback_points = 0;
};

// Radius = higher-quantile of the holdout residuals at the requested level.
PredictionBand prediction_band(const modes::ModalCurve& curve,
                               const density::Sample& holdout, double level);

bool covers(const PredictionBand& band, double x, double y);

// Curve dilated by the bootstrap quantile of sup-Hausdorff deviations.
struct ConfidenceBand {
  double level = 0.0;
  double radius = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<Interval>> intervals;
  double total_size = 0.0;
  int dropped_replicates = 0;
  std::vector<double> deviations;  // one sup-deviation per kept replicate
};

ConfidenceBand confidence_band_from_deviations(const modes::ModalCurve& curve,
                                               std::span<const double> deviations,
                                               double level);

// Empirical bootstrap: refit on n-out-of-n resamples, record the sup over the
// grid of the Hausdorff distance to the base fit, dilate the base fit by the
// level-quantile of those deviations. Replicates whose refit is empty at
// every grid point are dropped; more than 10% dropped is an error.
ConfidenceBand bootstrap_confidence_band(const density::Sample& sample,
                                         const modes::FitConfig& fit,
                                         std::span<const double> grid,
                                         int n_boot, double level,
                                         std::uint64_t seed);

}  // namespace modalkit::uncertainty
