#include "modalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modalkit::metrics {

namespace {

double directed_distance(std::span<const double> from, std::span<const double> to) {
  double worst = 0.0;
  for (double a : from) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double b : to) {
      nearest = std::min(nearest, std::abs(a - b));
    }
    worst = std::max(worst, nearest);
  }
  return worst;
}

void update_range(const modes::ModeSet& set, double& lo, double& hi) {
  for (const auto& p : set.points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
}

}  // namespace

double hausdorff(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("Hausdorff distance requires non-empty sets");
  }
  return std::max(directed_distance(a, b), directed_distance(b, a));
}

std::vector<double> trapezoid_weights(std::span<const double> grid) {
  const std::size_t g = grid.size();
  if (g == 0) {
    throw std::invalid_argument("grid must be non-empty");
  }
  std::vector<double> weights(g, 0.0);
  if (g == 1) {
    weights[0] = 1.0;
    return weights;
  }
  for (std::size_t i = 0; i + 1 < g; ++i) {
    const double step = grid[i + 1] - grid[i];
    if (!(step > 0.0)) {
      throw std::invalid_argument("grid must be strictly increasing");
    }
    weights[i] += 0.5 * step;
    weights[i + 1] += 0.5 * step;
  }
  return weights;
}

ErrorReport error_report(const modes::ModalCurve& estimate,
                         const modes::ModalCurve& truth) {
  const auto weights = trapezoid_weights(truth.grid);
  return error_report(estimate, truth, weights);
}

ErrorReport error_report(const modes::ModalCurve& estimate,
                         const modes::ModalCurve& truth,
                         std::span<const double> weights) {
  const std::size_t g = truth.size();
  if (estimate.size() != g || weights.size() != g) {
    throw std::invalid_argument("error report inputs differ in grid length");
  }
  for (std::size_t i = 0; i < g; ++i) {
    const double scale = std::max({1.0, std::abs(truth.grid[i])});
    if (std::abs(estimate.grid[i] - truth.grid[i]) > 1e-9 * scale) {
      throw std::invalid_argument("estimate and truth use different grids");
    }
  }

  // finite penalty for one-sided empty sets: the combined mode-value range
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g; ++i) {
    update_range(estimate.sets[i], lo, hi);
    update_range(truth.sets[i], lo, hi);
  }
  const double penalty = lo <= hi ? std::max(hi - lo, 1e-12) : 1.0;

  ErrorReport report;
  report.grid = truth.grid;
  report.pointwise.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    const auto est_vals = estimate.sets[i].mode_values();
    const auto tru_vals = truth.sets[i].mode_values();
    double delta;
    if (est_vals.empty() && tru_vals.empty()) {
      delta = 0.0;
      report.flagged.push_back(i);
    } else if (est_vals.empty() || tru_vals.empty()) {
      delta = penalty;
      report.flagged.push_back(i);
    } else {
      delta = hausdorff(est_vals, tru_vals);
    }
    report.pointwise[i] = delta;
    report.mise += weights[i] * delta * delta;
    report.uniform = std::max(report.uniform, delta);
  }
  return report;
}

}  // namespace modalkit::metrics
