#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "modalkit/density.hpp"

namespace modalkit::modal_em {

struct LineCoef {
  double intercept = 0.0;
  double slope = 0.0;
};

struct EmConfig {
  // gaussian kernel width of the modal objective; NaN selects the Silverman
  // rule applied to the residuals of an OLS pilot fit.
  double h = std::numeric_limits<double>::quiet_NaN();
  int n_starts = 20;
  int max_iter = 1000;
  double conv_tol = 1e-8;  // on max(|d intercept|, |d slope|)
  std::uint64_t seed = 0;
};

struct LinearModalFit {
  double intercept = 0.0;
  double slope = 0.0;
  double h = 0.0;
  // objective value after initialization and after every M-step of the
  // winning restart; non-decreasing up to 1e-12.
  std::vector<double> objective_trace;
  int n_iter = 0;
  int start_index = 0;

  double objective() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
};

// Modal objective (1/n h) sum_i K_G((Y_i - b0 - b1 X_i) / h).
double modal_objective(const density::Sample& data, double intercept,
                       double slope, double h);

// E-step weights pi_i proportional to K_G(residual_i / h), normalized to sum
// to one. When every kernel term underflows to zero the weights fall back to
// the uniform 1/n.
std::vector<double> em_weights(const density::Sample& data, double intercept,
                               double slope, double h);

// M-step: weighted least squares line. Throws std::runtime_error when the
// weighted design is numerically rank deficient.
LineCoef em_mstep(const density::Sample& data, std::span<const double> weights);

// Ordinary least squares (uniform-weight M-step).
LineCoef ols_fit(const density::Sample& data);

// Multi-start modal EM: start 1 is the OLS pilot, the remaining starts are
// lines through seeded random pairs of observations. fit_linear_modal returns
// the restart with the highest final objective (ties broken by lowest start
// index); fit_linear_modal_runs exposes every restart in start order.
std::vector<LinearModalFit> fit_linear_modal_runs(const density::Sample& data,
                                                  const EmConfig& cfg = {});
LinearModalFit fit_linear_modal(const density::Sample& data,
                                const EmConfig& cfg = {});

struct BoxLossCounts {
  int hits = 0;
  int misses = 0;
};

// Counts of |b0 + b1 X_i - Y_i| <= h vs > h; maximizing hits over a candidate
// set is the same as minimizing misses.
BoxLossCounts box_loss_counts(const density::Sample& data, double intercept,
                              double slope, double h);

}  // namespace modalkit::modal_em
