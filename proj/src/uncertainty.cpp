#include "modalkit/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "modalkit/metrics.hpp"
#include "modalkit/parallel.hpp"
#include "modalkit/rng.hpp"

namespace modalkit::uncertainty {

namespace {

std::size_t nearest_grid_index(std::span<const double> grid, double x) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  const auto lo = hi - 1;
  // ties resolve to the lower grid point
  return (x - grid[lo]) <= (grid[hi] - x) ? lo : hi;
}

double nearest_mode_distance(const modes::ModeSet& set, double y) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : set.points) {
    best = std::min(best, std::abs(y - p.y));
  }
  return best;
}

std::vector<std::vector<Interval>> dilate(const modes::ModalCurve& curve,
                                          double radius) {
  std::vector<std::vector<Interval>> out(curve.size());
  for (std::size_t g = 0; g < curve.size(); ++g) {
    std::vector<Interval> raw;
    raw.reserve(curve.sets[g].points.size());
    for (const auto& p : curve.sets[g].points) {
      raw.push_back({p.y - radius, p.y + radius});
    }
    out[g] = merge_intervals(std::move(raw));
  }
  return out;
}

double total_size(const std::vector<std::vector<Interval>>& intervals,
                  std::span<const double> weights) {
  double acc = 0.0;
  for (std::size_t g = 0; g < intervals.size(); ++g) {
    double len = 0.0;
    for (const auto& iv : intervals[g]) len += iv.length();
    acc += weights[g] * len;
  }
  return acc;
}

}  // namespace

std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
  if (intervals.empty()) return intervals;
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  merged.push_back(intervals.front());
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, intervals[i].hi);
    } else {
      merged.push_back(intervals[i]);
    }
  }
  return merged;
}

double empirical_quantile_higher(std::vector<double> values, double level) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  if (!(level > 0.0) || level > 1.0) {
    throw std::invalid_argument("quantile level must be in (0, 1]");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<double> band_residuals(const modes::ModalCurve& curve,
                                   const density::Sample& holdout,
                                   int* fallback_points) {
  if (curve.size() == 0) {
    throw std::invalid_argument("modal curve is empty");
  }
  int fallbacks = 0;
  std::vector<double> residuals(holdout.size());
  for (std::size_t v = 0; v < holdout.size(); ++v) {
    std::size_t g = nearest_grid_index(curve.grid, holdout.x[v]);
    if (curve.sets[g].empty()) {
      // nearest non-empty grid point by covariate distance, lower index wins ties
      double best = std::numeric_limits<double>::infinity();
      std::size_t pick = curve.size();
      for (std::size_t j = 0; j < curve.size(); ++j) {
        if (curve.sets[j].empty()) continue;
        const double d = std::abs(curve.grid[j] - holdout.x[v]);
        if (d < best) {
          best = d;
          pick = j;
        }
      }
      if (pick == curve.size()) {
        throw std::runtime_error("modal curve has no modes at any grid point");
      }
      g = pick;
      ++fallbacks;
    }
    residuals[v] = nearest_mode_distance(curve.sets[g], holdout.y[v]);
  }
  if (fallback_points != nullptr) *fallback_points = fallbacks;
  return residuals;
}

double merged_band_size(const modes::ModalCurve& curve, double radius,
                        std::span<const double> cell_weights) {
  if (cell_weights.size() != curve.size()) {
    throw std::invalid_argument("cell weight length mismatch");
  }
  return total_size(dilate(curve, radius), cell_weights);
}

PredictionBand prediction_band(const modes::ModalCurve& curve,
                               const density::Sample& holdout, double level) {
  if (!(level > 0.0) || level > 1.0) {
    throw std::invalid_argument("prediction level must be in (0, 1]");
  }
  PredictionBand band;
  band.level = level;
  band.grid = curve.grid;
  band.radius = empirical_quantile_higher(
      band_residuals(curve, holdout, &band.fallback_points), level);
  band.intervals = dilate(curve, band.radius);
  band.total_size =
      total_size(band.intervals, metrics::trapezoid_weights(curve.grid));
  return band;
}

bool covers(const PredictionBand& band, double x, double y) {
  const std::size_t g = nearest_grid_index(band.grid, x);
  for (const auto& iv : band.intervals[g]) {
    if (y >= iv.lo && y <= iv.hi) return true;
  }
  return false;
}

ConfidenceBand confidence_band_from_deviations(const modes::ModalCurve& curve,
                                               std::span<const double> deviations,
                                               double level) {
  ConfidenceBand band;
  band.level = level;
  band.grid = curve.grid;
  band.deviations.assign(deviations.begin(), deviations.end());
  band.radius = empirical_quantile_higher(band.deviations, level);
  band.intervals = dilate(curve, band.radius);
  band.total_size =
      total_size(band.intervals, metrics::trapezoid_weights(curve.grid));
  return band;
}

ConfidenceBand bootstrap_confidence_band(const density::Sample& sample,
                                         const modes::FitConfig& fit,
                                         std::span<const double> grid,
                                         int n_boot, double level,
                                         std::uint64_t seed) {
  if (n_boot < 20) {
    throw std::invalid_argument("bootstrap needs at least 20 replicates");
  }
  const modes::ModalCurve base = modes::fit_multimodal(sample, fit, grid);

  const std::size_t n = sample.size();
  const auto b_count = static_cast<std::size_t>(n_boot);

  // resample index sets are drawn up front so replicates stay independent of
  // the execution order
  std::vector<std::vector<std::size_t>> picks(b_count);
  for (std::size_t b = 0; b < b_count; ++b) {
    detail::Rng rng(detail::derive_seed(seed, b));
    picks[b].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      picks[b][i] = static_cast<std::size_t>(rng.below(n));
    }
  }

  std::vector<double> deviations(b_count,
                                 std::numeric_limits<double>::quiet_NaN());
  detail::parallel_for(b_count, fit.meanshift.threads, [&](std::size_t b) {
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = sample.x[picks[b][i]];
      ys[i] = sample.y[picks[b][i]];
    }
    modes::FitConfig local = fit;
    local.meanshift.threads = 1;
    const modes::ModalCurve refit =
        modes::fit_multimodal(density::Sample(std::move(xs), std::move(ys)),
                              local, grid);
    bool all_empty = true;
    for (const auto& set : refit.sets) all_empty = all_empty && set.empty();
    if (all_empty) return;  // dropped replicate, NaN marker stays

    const auto report = metrics::error_report(refit, base);
    deviations[b] = report.uniform;
  });

  std::vector<double> kept;
  kept.reserve(b_count);
  for (double d : deviations) {
    if (!std::isnan(d)) kept.push_back(d);
  }
  const auto dropped = static_cast<int>(b_count - kept.size());
  if (static_cast<double>(dropped) > 0.1 * static_cast<double>(b_count)) {
    throw std::runtime_error(
        "more than 10% of bootstrap refits produced no modes");
  }

  ConfidenceBand band = confidence_band_from_deviations(base, kept, level);
  band.dropped_replicates = dropped;
  return band;
}

}  // namespace modalkit::uncertainty
