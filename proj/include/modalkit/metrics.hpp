#pragma once

#include <span>
#include <vector>

#include "modalkit/modes.hpp"

namespace modalkit::metrics {

// Hausdorff distance between non-empty finite sets of reals:
// max(max_a min_b |a-b|, max_b min_a |a-b|).
double hausdorff(std::span<const double> a, std::span<const double> b);

// Trapezoid quadrature weights on a strictly increasing grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

struct ErrorReport {
  std::vector<double> grid;
  std::vector<double> pointwise;          // Hausdorff distance per grid point
  double mise = 0.0;                      // sum of weights * pointwise^2
  double uniform = 0.0;                   // max pointwise
  std::vector<std::size_t> flagged;       // grid indices scored by the
                                          // empty-set penalty
};

// Pointwise Hausdorff error, MISE, and uniform error of an estimated modal
// curve against a reference on the same grid. Grid points where exactly one
// of the two sets is empty score the combined mode-value range as a finite
// penalty and are flagged; two empty sets score zero.
ErrorReport error_report(const modes::ModalCurve& estimate,
                         const modes::ModalCurve& truth);
ErrorReport error_report(const modes::ModalCurve& estimate,
                         const modes::ModalCurve& truth,
                         std::span<const double> weights);

}  // namespace modalkit::metrics
