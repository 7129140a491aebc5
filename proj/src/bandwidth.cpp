#include "modalkit/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "modalkit/metrics.hpp"
#include "modalkit/rng.hpp"
#include "modalkit/uncertainty.hpp"

namespace modalkit::bandwidth {

namespace {

double sample_sd(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

// linearly interpolated quantile at position (n-1) p
double interpolated_quantile(std::vector<double> sorted_values, double p) {
  std::sort(sorted_values.begin(), sorted_values.end());
  const double pos = p * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

struct YGrid {
  std::vector<double> points;
  std::vector<double> weights;
};

YGrid make_ygrid(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) {
    throw std::invalid_argument("response integration grid is degenerate");
  }
  YGrid grid;
  grid.points.resize(static_cast<std::size_t>(count));
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int j = 0; j < count; ++j) {
    grid.points[static_cast<std::size_t>(j)] = lo + step * j;
  }
  grid.weights.assign(static_cast<std::size_t>(count), step);
  grid.weights.front() = 0.5 * step;
  grid.weights.back() = 0.5 * step;
  return grid;
}

struct Window {
  double lo;
  double hi;
};

Window resolve_omega(const CvConfig& cfg, std::span<const double> query_x) {
  if (!std::isnan(cfg.omega_lo) && !std::isnan(cfg.omega_hi)) {
    return {cfg.omega_lo, cfg.omega_hi};
  }
  const auto [mn, mx] = std::minmax_element(query_x.begin(), query_x.end());
  const double range = *mx - *mn;
  if (!(range > 0.0)) {
    throw std::invalid_argument("covariates carry no spread");
  }
  return {*mn + 0.05 * range, *mx - 0.05 * range};
}

YGrid resolve_ygrid(const CvConfig& cfg, std::span<const double> responses,
                    double h2_max) {
  double lo = cfg.y_lo;
  double hi = cfg.y_hi;
  if (std::isnan(lo) || std::isnan(hi)) {
    const auto [mn, mx] = std::minmax_element(responses.begin(), responses.end());
    lo = *mn - 4.0 * h2_max;
    hi = *mx + 4.0 * h2_max;
  }
  return make_ygrid(lo, hi, cfg.y_grid_size);
}

// Leave-one-out CV criterion for the conditional density built on
// (data_x, data_y) and evaluated at the paired query points; index i is
// excluded on both sides.
double cv_criterion(std::span<const double> query_x,
                    std::span<const double> query_y,
                    std::span<const double> data_x,
                    std::span<const double> data_y,
                    const std::function<double(double)>& kx,
                    const kernels::Kernel& k2, double h1, double h2,
                    const Window& omega, const YGrid& ygrid, int* skipped) {
  const std::size_t n = query_x.size();
  const std::size_t ny = ygrid.points.size();

  // response-kernel columns on the integration grid, row-major in j
  std::vector<double> g(ny * n);
  for (std::size_t jy = 0; jy < ny; ++jy) {
    for (std::size_t j = 0; j < n; ++j) {
      g[jy * n + j] = k2((data_y[j] - ygrid.points[jy]) / h2) / h2;
    }
  }

  std::vector<double> kxr(n);
  std::vector<double> cond(ny);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (query_x[i] < omega.lo || query_x[i] > omega.hi) continue;

    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      kxr[j] = j == i ? 0.0 : kx((data_x[j] - query_x[i]) / h1);
      denom += kxr[j];
    }
    if (!(denom > 0.0)) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }

    double integral = 0.0;
    for (std::size_t jy = 0; jy < ny; ++jy) {
      const double* row = g.data() + jy * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += kxr[j] * row[j];
      const double c = dot / denom;
      cond[jy] = c;
      integral += ygrid.weights[jy] * c * c;
    }

    double loo = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (kxr[j] == 0.0) continue;
      loo += kxr[j] * k2((data_y[j] - query_y[i]) / h2) / h2;
    }
    loo /= denom;

    acc += integral - 2.0 * loo;
  }
  return acc / static_cast<double>(n);
}

void select_minimum(BandwidthChoice& choice,
                    const std::vector<double>& h1c,
                    const std::vector<double>& h2c) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < choice.trace.size(); ++i) {
    if (choice.trace[i].criterion < choice.trace[best].criterion) best = i;
  }
  choice.h1 = choice.trace[best].h1;
  choice.h2 = choice.trace[best].h2;
  const bool h1_edge = h1c.size() > 1 && (choice.h1 == h1c.front() || choice.h1 == h1c.back());
  const bool h2_edge = h2c.size() > 1 && (choice.h2 == h2c.front() || choice.h2 == h2c.back());
  choice.boundary_minimizer = h1_edge || h2_edge;
}

void require_candidates(const std::vector<double>& candidates, const char* what) {
  if (candidates.empty()) {
    throw std::invalid_argument(std::string(what) + " candidate grid is empty");
  }
  for (double h : candidates) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw std::invalid_argument(std::string(what) + " candidates must be positive");
    }
  }
}

density::Sample subset(const density::Sample& sample,
                       std::span<const std::size_t> idx) {
  std::vector<double> xs(idx.size()), ys(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    xs[k] = sample.x[idx[k]];
    ys[k] = sample.y[idx[k]];
  }
  return density::Sample(std::move(xs), std::move(ys));
}

}  // namespace

double silverman_rule(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("Silverman rule needs at least two values");
  }
  const double sd = sample_sd(values);
  std::vector<double> sorted(values.begin(), values.end());
  const double iqr = interpolated_quantile(sorted, 0.75) -
                     interpolated_quantile(std::move(sorted), 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;  // heavy ties can zero the IQR
  if (!(spread > 0.0)) {
    throw std::invalid_argument("Silverman rule is undefined for zero spread");
  }
  return 1.06 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw std::invalid_argument("log_spaced needs 0 < lo <= hi and count >= 1");
  }
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double ratio = hi / lo;
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] =
        lo * std::pow(ratio, static_cast<double>(k) / (count - 1));
  }
  return out;
}

CvConfig default_cv_config(const density::Sample& sample, int h1_count,
                           int h2_count) {
  CvConfig cfg;
  const double h1 = silverman_rule(sample.x);
  const double h2 = silverman_rule(sample.y);
  cfg.h1_candidates = log_spaced(h1 / 4.0, h1 * 4.0, h1_count);
  cfg.h2_candidates = log_spaced(h2 / 4.0, h2 * 4.0, h2_count);
  return cfg;
}

BandwidthChoice cv_conditional_density(const density::Sample& sample,
                                       const CvConfig& cfg) {
  if (sample.size() < 3) {
    throw std::invalid_argument("conditional-density CV needs at least 3 points");
  }
  require_candidates(cfg.h1_candidates, "h1");
  require_candidates(cfg.h2_candidates, "h2");

  const Window omega = resolve_omega(cfg, sample.x);
  const double h2_max =
      *std::max_element(cfg.h2_candidates.begin(), cfg.h2_candidates.end());
  const YGrid ygrid = resolve_ygrid(cfg, sample.y, h2_max);

  const auto& k1 = cfg.kernel_x;
  const std::function<double(double)> kx = [&k1](double d) { return k1(d); };

  BandwidthChoice choice;
  choice.method = "cv";
  for (double h1 : cfg.h1_candidates) {
    for (double h2 : cfg.h2_candidates) {
      const double crit =
          cv_criterion(sample.x, sample.y, sample.x, sample.y, kx,
                       cfg.kernel_y, h1, h2, omega, ygrid, &choice.skipped_terms);
      choice.trace.push_back({h1, h2, crit});
    }
  }
  select_minimum(choice, cfg.h1_candidates, cfg.h2_candidates);
  return choice;
}

BandwidthChoice cv_simex(const density::ContaminatedSample& sample,
                         const CvConfig& cfg, int replicates,
                         std::uint64_t seed) {
  if (sample.size() < 3) {
    throw std::invalid_argument("CV-SIMEX needs at least 3 points");
  }
  if (replicates < 1) {
    throw std::invalid_argument("CV-SIMEX needs at least one replicate");
  }
  require_candidates(cfg.h1_candidates, "h1");

  const std::size_t n = sample.size();
  const double h2 = silverman_rule(sample.y);
  const YGrid ygrid = resolve_ygrid(cfg, sample.y, h2);

  const std::size_t n_cand = cfg.h1_candidates.size();
  std::vector<kernels::DeconvKernel> ku;
  ku.reserve(n_cand);
  for (double h1 : cfg.h1_candidates) {
    ku.emplace_back(cfg.kernel_x, sample.error, h1);
  }

  std::vector<double> star(n_cand, 0.0), dstar(n_cand, 0.0);
  int skipped = 0;
  std::vector<double> w_star(n), w_dstar(n);
  for (int r = 0; r < replicates; ++r) {
    detail::Rng rng(detail::derive_seed(seed, static_cast<std::uint64_t>(r)));
    for (std::size_t i = 0; i < n; ++i) {
      const double noise = sample.error.family() == kernels::ErrorFamily::gaussian
                               ? rng.normal(0.0, sample.error.scale())
                               : rng.laplace(sample.error.scale());
      w_star[i] = sample.w[i] + noise;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double noise = sample.error.family() == kernels::ErrorFamily::gaussian
                               ? rng.normal(0.0, sample.error.scale())
                               : rng.laplace(sample.error.scale());
      w_dstar[i] = w_star[i] + noise;
    }
    const Window omega_star = resolve_omega(cfg, sample.w);
    const Window omega_dstar = resolve_omega(cfg, w_star);
    for (std::size_t c = 0; c < n_cand; ++c) {
      const double h1 = cfg.h1_candidates[c];
      const auto& kuc = ku[c];
      const std::function<double(double)> kx = [&kuc](double d) { return kuc(d); };
      star[c] += cv_criterion(sample.w, sample.y, w_star, sample.y, kx,
                              cfg.kernel_y, h1, h2, omega_star, ygrid, &skipped);
      dstar[c] += cv_criterion(w_star, sample.y, w_dstar, sample.y, kx,
                               cfg.kernel_y, h1, h2, omega_dstar, ygrid, &skipped);
    }
  }

  BandwidthChoice choice;
  choice.method = "simex";
  choice.h2 = h2;
  choice.skipped_terms = skipped;
  std::size_t best_star = 0, best_dstar = 0;
  for (std::size_t c = 0; c < n_cand; ++c) {
    const double s = star[c] / replicates;
    const double d = dstar[c] / replicates;
    choice.trace.push_back({cfg.h1_candidates[c], h2, s});
    choice.trace_extra.push_back({cfg.h1_candidates[c], h2, d});
    if (s < choice.trace[best_star].criterion) best_star = c;
    if (d < choice.trace_extra[best_dstar].criterion) best_dstar = c;
  }
  choice.h1_star = cfg.h1_candidates[best_star];
  choice.h1_double_star = cfg.h1_candidates[best_dstar];
  choice.h1 = choice.h1_star * choice.h1_star / choice.h1_double_star;
  choice.boundary_minimizer =
      n_cand > 1 && (best_star == 0 || best_star + 1 == n_cand ||
                     best_dstar == 0 || best_dstar + 1 == n_cand);
  return choice;
}

BandwidthChoice prediction_band_cv(const density::Sample& sample,
                                   const CvConfig& cfg,
                                   std::span<const double> grid, double level,
                                   int folds, std::uint64_t seed,
                                   const modes::MeanshiftConfig& ms) {
  require_candidates(cfg.h1_candidates, "h1");
  require_candidates(cfg.h2_candidates, "h2");
  if (!(level > 0.0) || level >= 1.0) {
    throw std::invalid_argument("prediction level must be in (0, 1)");
  }
  const std::size_t n = sample.size();
  if (folds < 2 || n < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("need at least two cross-validation folds");
  }
  const std::size_t fold_size = (n + folds - 1) / static_cast<std::size_t>(folds);
  if (n - fold_size < 10) {
    throw std::invalid_argument("training folds need at least 10 points");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  detail::Rng rng(detail::derive_seed(seed, 0xF01d));
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  const auto weights = metrics::trapezoid_weights(grid);
  const auto [ymn, ymx] = std::minmax_element(sample.y.begin(), sample.y.end());
  const double y_span = *ymx - *ymn;
  const double x_span = grid.back() - grid.front();
  const double penalty_size = 4.0 * std::max(y_span, 1e-12) * std::max(x_span, 1e-12);

  BandwidthChoice choice;
  choice.method = "predband";
  for (double h1 : cfg.h1_candidates) {
    for (double h2 : cfg.h2_candidates) {
      modes::FitConfig fit_cfg{cfg.kernel_x, cfg.kernel_y, h1, h2, ms};
      double avg_size = 0.0;
      for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, val;
        for (std::size_t k = 0; k < n; ++k) {
          const bool in_fold =
              k / fold_size == static_cast<std::size_t>(f);
          (in_fold ? val : train).push_back(order[k]);
        }
        if (val.empty()) continue;
        const auto fit = modes::fit_multimodal(subset(sample, train), fit_cfg, grid);
        double size;
        try {
          int fallbacks = 0;
          const auto residuals =
              uncertainty::band_residuals(fit, subset(sample, val), &fallbacks);
          choice.skipped_terms += fallbacks;
          const double radius =
              uncertainty::empirical_quantile_higher(residuals, level);
          size = uncertainty::merged_band_size(fit, radius, weights);
        } catch (const std::runtime_error&) {
          size = penalty_size;  // no modes anywhere on this fold
        }
        avg_size += size / folds;
      }
      choice.trace.push_back({h1, h2, avg_size});
    }
  }
  select_minimum(choice, cfg.h1_candidates, cfg.h2_candidates);
  return choice;
}

BandwidthChoice modal_cv_bootstrap(const density::Sample& sample,
                                   const CvConfig& cfg,
                                   std::span<const double> grid, int n_boot,
                                   std::uint64_t seed,
                                   const modes::MeanshiftConfig& ms) {
  require_candidates(cfg.h1_candidates, "h1");
  require_candidates(cfg.h2_candidates, "h2");
  if (n_boot < 1) {
    throw std::invalid_argument("modal CV needs at least one bootstrap draw");
  }
  const std::size_t n = sample.size();
  const auto b_count = static_cast<std::size_t>(n_boot);
  std::vector<std::vector<std::size_t>> picks(b_count);
  for (std::size_t b = 0; b < b_count; ++b) {
    detail::Rng rng(detail::derive_seed(seed, b));
    picks[b].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      picks[b][i] = static_cast<std::size_t>(rng.below(n));
    }
  }

  const auto weights = metrics::trapezoid_weights(grid);
  const double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);

  // Bootstrap refits are scored against the original-sample fit at the
  // Silverman reference bandwidths. Scoring against the same-candidate fit
  // would collapse to a pure variance estimate (the bootstrap KDE is
  // centered on the original KDE) and always reward the largest candidate.
  modes::FitConfig pilot_cfg{cfg.kernel_x, cfg.kernel_y,
                             silverman_rule(sample.x), silverman_rule(sample.y),
                             ms};
  const auto target = modes::fit_multimodal(sample, pilot_cfg, grid);

  BandwidthChoice choice;
  choice.method = "modalcv";
  for (double h1 : cfg.h1_candidates) {
    for (double h2 : cfg.h2_candidates) {
      modes::FitConfig fit_cfg{cfg.kernel_x, cfg.kernel_y, h1, h2, ms};
      double crit = 0.0;
      for (std::size_t b = 0; b < b_count; ++b) {
        const auto refit =
            modes::fit_multimodal(subset(sample, picks[b]), fit_cfg, grid);
        const auto report = metrics::error_report(refit, target, weights);
        crit += report.mise / weight_total;
      }
      choice.trace.push_back({h1, h2, crit / static_cast<double>(b_count)});
    }
  }
  select_minimum(choice, cfg.h1_candidates, cfg.h2_candidates);
  return choice;
}

}  // namespace modalkit::bandwidth
