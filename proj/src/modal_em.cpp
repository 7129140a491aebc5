#include "modalkit/modal_em.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "modalkit/bandwidth.hpp"
#include "modalkit/rng.hpp"

namespace modalkit::modal_em {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

void require_h(double h) {
  if (!std::isfinite(h) || h <= 0.0) {
    throw std::invalid_argument("modal EM bandwidth must be positive");
  }
}

LineCoef weighted_least_squares(const density::Sample& data,
                                std::span<const double> weights) {
  const std::size_t n = data.size();
  double sw = 0.0, swx = 0.0, swxx = 0.0, swy = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    const double x = data.x[i];
    sw += w;
    swx += w * x;
    swxx += w * x * x;
    swy += w * data.y[i];
    swxy += w * x * data.y[i];
  }
  const double det = sw * swxx - swx * swx;
  const double scale = std::abs(sw * swxx) + swx * swx;
  if (!(std::abs(det) > 1e-13 * std::max(scale, 1e-300))) {
    throw std::runtime_error(
        "weighted least squares is singular (covariates carry no spread "
        "under the current weights)");
  }
  LineCoef coef;
  coef.intercept = (swxx * swy - swx * swxy) / det;
  coef.slope = (sw * swxy - swx * swy) / det;
  return coef;
}

// One EM run from the given initial line; records the objective after
// initialization and after every M-step.
LinearModalFit run_em(const density::Sample& data, LineCoef init, double h,
                      int max_iter, double conv_tol) {
  LinearModalFit fit;
  fit.h = h;
  fit.intercept = init.intercept;
  fit.slope = init.slope;
  fit.objective_trace.push_back(
      modal_objective(data, fit.intercept, fit.slope, h));
  for (int it = 0; it < max_iter; ++it) {
    const auto weights = em_weights(data, fit.intercept, fit.slope, h);
    const LineCoef next = em_mstep(data, weights);
    const double delta = std::max(std::abs(next.intercept - fit.intercept),
                                  std::abs(next.slope - fit.slope));
    fit.intercept = next.intercept;
    fit.slope = next.slope;
    fit.objective_trace.push_back(
        modal_objective(data, fit.intercept, fit.slope, h));
    fit.n_iter = it + 1;
    if (delta < conv_tol) break;
  }
  return fit;
}

}  // namespace

double modal_objective(const density::Sample& data, double intercept,
                       double slope, double h) {
  require_h(h);
  const std::size_t n = data.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (data.y[i] - intercept - slope * data.x[i]) / h;
    acc += kInvSqrt2Pi * std::exp(-0.5 * r * r);
  }
  return acc / (static_cast<double>(n) * h);
}

std::vector<double> em_weights(const density::Sample& data, double intercept,
                               double slope, double h) {
  require_h(h);
  const std::size_t n = data.size();
  std::vector<double> weights(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (data.y[i] - intercept - slope * data.x[i]) / h;
    weights[i] = std::exp(-0.5 * r * r);
    sum += weights[i];
  }
  if (sum <= 0.0) {
    // every kernel term underflowed: fall back to uniform weights
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
    return weights;
  }
  for (auto& w : weights) w /= sum;
  return weights;
}

LineCoef em_mstep(const density::Sample& data, std::span<const double> weights) {
  if (weights.size() != data.size()) {
    throw std::invalid_argument("weight vector length mismatch");
  }
  return weighted_least_squares(data, weights);
}

LineCoef ols_fit(const density::Sample& data) {
  const std::vector<double> uniform(data.size(), 1.0 / static_cast<double>(data.size()));
  return weighted_least_squares(data, uniform);
}

std::vector<LinearModalFit> fit_linear_modal_runs(const density::Sample& data,
                                                  const EmConfig& cfg) {
  if (data.size() < 2) {
    throw std::invalid_argument("modal EM requires at least two observations");
  }
  if (cfg.n_starts <= 0 || cfg.max_iter <= 0 || cfg.conv_tol <= 0.0) {
    throw std::invalid_argument("EM configuration values must be positive");
  }

  const LineCoef pilot = ols_fit(data);

  double h = cfg.h;
  if (std::isnan(h)) {
    std::vector<double> residuals(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      residuals[i] = data.y[i] - pilot.intercept - pilot.slope * data.x[i];
    }
    h = bandwidth::silverman_rule(residuals);
  }
  require_h(h);

  // restart pool: OLS pilot, then lines through random pairs. Pair selection
  // looks at covariates only, which keeps the restarts (and the winner)
  // shift-equivariant in the responses.
  std::vector<LineCoef> starts;
  starts.reserve(static_cast<std::size_t>(cfg.n_starts));
  starts.push_back(pilot);
  detail::Rng rng(detail::derive_seed(cfg.seed, 0x9a7));
  const std::size_t n = data.size();
  int attempts = 0;
  while (starts.size() < static_cast<std::size_t>(cfg.n_starts) &&
         attempts < 64 * cfg.n_starts) {
    ++attempts;
    const auto i = static_cast<std::size_t>(rng.below(n));
    const auto j = static_cast<std::size_t>(rng.below(n));
    if (i == j || data.x[i] == data.x[j]) continue;
    LineCoef line;
    line.slope = (data.y[j] - data.y[i]) / (data.x[j] - data.x[i]);
    line.intercept = data.y[i] - line.slope * data.x[i];
    starts.push_back(line);
  }

  std::vector<LinearModalFit> runs;
  runs.reserve(starts.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    LinearModalFit fit = run_em(data, starts[s], h, cfg.max_iter, cfg.conv_tol);
    fit.start_index = static_cast<int>(s);
    runs.push_back(std::move(fit));
  }
  return runs;
}

LinearModalFit fit_linear_modal(const density::Sample& data,
                                const EmConfig& cfg) {
  const auto runs = fit_linear_modal_runs(data, cfg);
  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s) {
    if (runs[s].objective() > runs[best].objective()) best = s;
  }
  return runs[best];
}

BoxLossCounts box_loss_counts(const density::Sample& data, double intercept,
                              double slope, double h) {
  BoxLossCounts counts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = std::abs(intercept + slope * data.x[i] - data.y[i]);
    if (r <= h) {
      ++counts.hits;
    } else {
      ++counts.misses;
    }
  }
  return counts;
}

}  // namespace modalkit::modal_em
