#include "modalkit/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdint>
#include <stdexcept>

namespace modalkit::density {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " must be finite");
    }
  }
}

void require_bandwidth(double h, const char* what) {
  if (!std::isfinite(h) || h <= 0.0) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

// Running product of integer ratios, kept as an exact reduced fraction while
// numerator and denominator fit in 53 bits. A telescoping product (the
// zero-censoring Kaplan-Meier) then yields the correctly rounded value of the
// true rational, bitwise equal to the directly computed empirical survival.
struct RatioProduct {
  std::uint64_t num = 1;
  std::uint64_t den = 1;
  double approx = 1.0;
  bool exact = true;

  void multiply(std::uint64_t a, std::uint64_t b) {
    if (exact) {
      if (a == 0) {
        num = 0;
        den = 1;
        return;
      }
      constexpr std::uint64_t limit = 1ULL << 53;
      if (num <= limit / a && den <= limit / b) {
        num *= a;
        den *= b;
        const std::uint64_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        return;
      }
      approx = static_cast<double>(num) / static_cast<double>(den);
      exact = false;
    }
    approx *= static_cast<double>(a) / static_cast<double>(b);
  }

  double value() const {
    return exact ? static_cast<double>(num) / static_cast<double>(den) : approx;
  }
};

// Kaplan-Meier on (time, indicator) with the per-observation product form;
// indicator ties at equal times are ordered indicator-1-first.
SurvivalCurve km_impl(std::span<const double> times,
                      std::span<const std::uint8_t> indicator) {
  const std::size_t n = times.size();
  if (n == 0) {
    throw std::invalid_argument("Kaplan-Meier requires a non-empty sample");
  }
  if (indicator.size() != n) {
    throw std::invalid_argument("times and indicators differ in length");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return indicator[a] > indicator[b];
  });

  std::vector<double> jump_times;
  std::vector<double> values;
  jump_times.reserve(n);
  values.reserve(n);
  RatioProduct surv;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t i = order[rank];
    const std::uint64_t at_risk = n - rank;
    surv.multiply(at_risk - indicator[i], at_risk);
    if (rank + 1 < n && times[order[rank + 1]] == times[i]) {
      continue;  // fold tied observations into one jump
    }
    jump_times.push_back(times[i]);
    values.push_back(surv.value());
  }
  return SurvivalCurve(std::move(jump_times), std::move(values),
                       times[order[n - 1]]);
}

}  // namespace

Sample::Sample(std::vector<double> x_in, std::vector<double> y_in)
    : x(std::move(x_in)), y(std::move(y_in)) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("sample columns differ in length");
  }
  if (x.empty()) {
    throw std::invalid_argument("sample must be non-empty");
  }
  require_finite(x, "covariates");
  require_finite(y, "responses");
}

CensoredSample::CensoredSample(std::vector<double> x_in,
                               std::vector<double> time_in,
                               std::vector<std::uint8_t> event_in)
    : x(std::move(x_in)), time(std::move(time_in)), event(std::move(event_in)) {
  if (x.size() != time.size() || x.size() != event.size()) {
    throw std::invalid_argument("censored sample columns differ in length");
  }
  if (x.empty()) {
    throw std::invalid_argument("censored sample must be non-empty");
  }
  require_finite(x, "covariates");
  require_finite(time, "observation times");
  for (auto d : event) {
    if (d > 1) {
      throw std::invalid_argument("event indicators must be 0 or 1");
    }
  }
}

std::size_t CensoredSample::event_count() const {
  return static_cast<std::size_t>(
      std::count(event.begin(), event.end(), std::uint8_t{1}));
}

ContaminatedSample::ContaminatedSample(std::vector<double> w_in,
                                       std::vector<double> y_in,
                                       kernels::ErrorDistribution error_in)
    : w(std::move(w_in)), y(std::move(y_in)), error(error_in) {
  if (w.size() != y.size()) {
    throw std::invalid_argument("contaminated sample columns differ in length");
  }
  if (w.empty()) {
    throw std::invalid_argument("contaminated sample must be non-empty");
  }
  if (error.scale() <= 0.0) {
    throw std::invalid_argument("measurement error scale must be positive");
  }
  require_finite(w, "contaminated covariates");
  require_finite(y, "responses");
}

SurvivalCurve::SurvivalCurve(std::vector<double> jump_times,
                             std::vector<double> values, double max_time)
    : jump_times_(std::move(jump_times)),
      values_(std::move(values)),
      max_time_(max_time) {}

double SurvivalCurve::operator()(double t) const {
  if (t >= max_time_) return 0.0;
  // index of the last jump time <= t
  auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double SurvivalCurve::left_limit(double t) const {
  if (t > max_time_) return 0.0;
  // product over jump times strictly below t
  auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

SurvivalCurve kaplan_meier(std::span<const double> times,
                           std::span<const std::uint8_t> event) {
  bool any_event = false;
  for (auto d : event) any_event = any_event || d == 1;
  if (!any_event) {
    throw std::invalid_argument(
        "Kaplan-Meier requires at least one uncensored observation");
  }
  return km_impl(times, event);
}

SurvivalCurve kaplan_meier(const CensoredSample& sample) {
  return kaplan_meier(sample.time, sample.event);
}

SurvivalCurve censoring_survival(const CensoredSample& sample) {
  std::vector<std::uint8_t> flipped(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    flipped[i] = sample.event[i] ? 0 : 1;
  }
  return km_impl(sample.time, flipped);
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::standard: return "standard";
    case Variant::censored: return "censored";
    case Variant::deconvolution: return "deconvolution";
  }
  return "?";
}

JointDensityModel::JointDensityModel(
    Variant variant, std::vector<double> covariates,
    std::vector<double> responses, std::vector<double> weights,
    kernels::Kernel k1, kernels::Kernel k2, double h1, double h2,
    std::optional<kernels::DeconvKernel> ku)
    : variant_(variant),
      covariates_(std::move(covariates)),
      responses_(std::move(responses)),
      weights_(std::move(weights)),
      k1_(k1),
      k2_(k2),
      h1_(h1),
      h2_(h2),
      ku_(std::move(ku)) {
  auto [lo, hi] = std::minmax_element(responses_.begin(), responses_.end());
  response_min_ = *lo;
  response_max_ = *hi;
}

JointDensityModel JointDensityModel::standard(Sample sample, kernels::Kernel k1,
                                              kernels::Kernel k2, double h1,
                                              double h2) {
  require_bandwidth(h1, "h1");
  require_bandwidth(h2, "h2");
  std::vector<double> weights(sample.size(), 1.0);
  return JointDensityModel(Variant::standard, std::move(sample.x),
                           std::move(sample.y), std::move(weights), k1, k2, h1,
                           h2, std::nullopt);
}

JointDensityModel JointDensityModel::censored(CensoredSample sample,
                                              kernels::Kernel k1,
                                              kernels::Kernel k2, double h1,
                                              double h2) {
  require_bandwidth(h1, "h1");
  require_bandwidth(h2, "h2");
  if (sample.event_count() == 0) {
    throw std::invalid_argument(
        "censored model requires at least one uncensored observation");
  }
  const SurvivalCurve g = censoring_survival(sample);
  std::vector<double> weights(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (!sample.event[i]) {
      weights[i] = 0.0;
      continue;
    }
    // Left limit keeps the largest uncensored time usable; G(T-) > 0 holds
    // whenever the observation itself is at or before the largest time.
    const double g_left = g.left_limit(sample.time[i]);
    weights[i] = g_left > 0.0 ? 1.0 / g_left : 0.0;
  }
  return JointDensityModel(Variant::censored, std::move(sample.x),
                           std::move(sample.time), std::move(weights), k1, k2,
                           h1, h2, std::nullopt);
}

JointDensityModel JointDensityModel::deconvolution(ContaminatedSample sample,
                                                   kernels::Kernel base1,
                                                   kernels::Kernel k2, double h1,
                                                   double h2) {
  require_bandwidth(h1, "h1");
  require_bandwidth(h2, "h2");
  kernels::DeconvKernel ku(base1, sample.error, h1);
  std::vector<double> weights(sample.size(), 1.0);
  return JointDensityModel(Variant::deconvolution, std::move(sample.w),
                           std::move(sample.y), std::move(weights), base1, k2,
                           h1, h2, std::move(ku));
}

double JointDensityModel::covariate_factor(double d) const {
  return ku_ ? (*ku_)(d) : k1_(d);
}

void JointDensityModel::require_differentiable_k2() const {
  if (!k2_.differentiable()) {
    throw std::invalid_argument(
        "response-kernel derivatives are unavailable for the box kernel");
  }
}

double JointDensityModel::pdf(double x, double y) const {
  const std::size_t n = size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_[i] == 0.0) continue;
    acc += weights_[i] * covariate_factor((covariates_[i] - x) / h1_) *
           k2_((responses_[i] - y) / h2_);
  }
  return acc / (static_cast<double>(n) * h1_ * h2_);
}

double JointDensityModel::pdf_dy(double x, double y) const {
  require_differentiable_k2();
  const std::size_t n = size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_[i] == 0.0) continue;
    // d/dy K2((Y_i - y)/h2) = -K2'(u)/h2
    acc -= weights_[i] * covariate_factor((covariates_[i] - x) / h1_) *
           k2_.deriv1((responses_[i] - y) / h2_);
  }
  return acc / (static_cast<double>(n) * h1_ * h2_ * h2_);
}

double JointDensityModel::pdf_dyy(double x, double y) const {
  require_differentiable_k2();
  const std::size_t n = size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_[i] == 0.0) continue;
    acc += weights_[i] * covariate_factor((covariates_[i] - x) / h1_) *
           k2_.deriv2((responses_[i] - y) / h2_);
  }
  return acc / (static_cast<double>(n) * h1_ * h2_ * h2_ * h2_);
}

ConditionalSlice::ConditionalSlice(const JointDensityModel& model, double x)
    : model_(&model), x_(x) {
  const auto covs = model.covariates();
  const auto wts = model.weights();
  const std::size_t n = covs.size();
  factors_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    factors_[i] =
        wts[i] == 0.0 ? 0.0 : wts[i] * model.covariate_factor((covs[i] - x) / model.h1());
  }
  norm_ = 1.0 / (static_cast<double>(n) * model.h1() * model.h2());
}

bool ConditionalSlice::flat() const {
  for (double f : factors_) {
    if (f != 0.0) return false;
  }
  return true;
}

double ConditionalSlice::pdf(double y) const {
  const auto resp = model_->responses();
  const auto& k2 = model_->kernel_y();
  const double h2 = model_->h2();
  double acc = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i] == 0.0) continue;
    acc += factors_[i] * k2((resp[i] - y) / h2);
  }
  return acc * norm_;
}

double ConditionalSlice::pdf_dy(double y) const {
  const auto resp = model_->responses();
  const auto& k2 = model_->kernel_y();
  const double h2 = model_->h2();
  double acc = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i] == 0.0) continue;
    acc -= factors_[i] * k2.deriv1((resp[i] - y) / h2);
  }
  return acc * norm_ / h2;
}

double ConditionalSlice::pdf_dyy(double y) const {
  const auto resp = model_->responses();
  const auto& k2 = model_->kernel_y();
  const double h2 = model_->h2();
  double acc = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i] == 0.0) continue;
    acc += factors_[i] * k2.deriv2((resp[i] - y) / h2);
  }
  return acc * norm_ / (h2 * h2);
}

double ConditionalSlice::meanshift_step(double y) const {
  const auto resp = model_->responses();
  const auto& k2 = model_->kernel_y();
  const double h2 = model_->h2();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i] == 0.0) continue;
    const double w = factors_[i] * k2((resp[i] - y) / h2);
    num += w * resp[i];
    den += w;
  }
  if (den <= 0.0) {
    throw std::domain_error(
        "meanshift step diverged: zero kernel mass at the query point");
  }
  return num / den;
}

}  // namespace modalkit::density
