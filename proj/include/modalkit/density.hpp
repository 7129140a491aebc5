#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "modalkit/kernels.hpp"

namespace modalkit::density {

// Fully observed (covariate, response) pairs.
struct Sample {
  std::vector<double> x;
  std::vector<double> y;

  Sample() = default;
  Sample(std::vector<double> x, std::vector<double> y);

  std::size_t size() const { return x.size(); }
};

// Right-censored responses: time = min(Y, C), event = 1 when Y was observed.
struct CensoredSample {
  std::vector<double> x;
  std::vector<double> time;
  std::vector<std::uint8_t> event;

  CensoredSample() = default;
  CensoredSample(std::vector<double> x, std::vector<double> time,
                 std::vector<std::uint8_t> event);

  std::size_t size() const { return x.size(); }
  std::size_t event_count() const;
};

// Covariates observed with additive noise: w = x + u, u ~ error.
struct ContaminatedSample {
  std::vector<double> w;
  std::vector<double> y;
  kernels::ErrorDistribution error;

  ContaminatedSample(std::vector<double> w, std::vector<double> y,
                     kernels::ErrorDistribution error);

  std::size_t size() const { return w.size(); }
};

// Right-continuous non-increasing step function on the real line with
// S(t) = 1 before the first jump and S(t) = 0 for t >= the largest
// observation.
class SurvivalCurve {
public:
  SurvivalCurve(std::vector<double> jump_times, std::vector<double> values,
                double max_time);

  double operator()(double t) const;   // S(t), right-continuous
  double left_limit(double t) const;   // S(t-)

  const std::vector<double>& jump_times() const { return jump_times_; }
  const std::vector<double>& values() const { return values_; }

private:
  std::vector<double> jump_times_;  // distinct observation times, ascending
  std::vector<double> values_;      // S just after the matching jump time
  double max_time_;
};

// Kaplan-Meier estimator of the survival function of the event variable.
// Ties are ordered with events before censorings at the same time.
SurvivalCurve kaplan_meier(std::span<const double> times,
                           std::span<const std::uint8_t> event);
SurvivalCurve kaplan_meier(const CensoredSample& sample);

// Kaplan-Meier estimator of the censoring survival function (indicators
// flipped). Its left limits supply the inverse-probability weights of the
// censored density estimator.
SurvivalCurve censoring_survival(const CensoredSample& sample);

enum class Variant { standard, censored, deconvolution };

std::string_view to_string(Variant variant);

class JointDensityModel;

// Evaluation of the joint density at one fixed covariate value; the
// covariate kernel factors are computed once and reused across response
// values. Immutable and safe to share across threads.
class ConditionalSlice {
public:
  double pdf(double y) const;
  double pdf_dy(double y) const;
  double pdf_dyy(double y) const;

  // One partial meanshift update from y; throws std::domain_error when all
  // covariate factors vanish (flat slice).
  double meanshift_step(double y) const;

  double x() const { return x_; }
  bool flat() const;  // all covariate factors zero
  const JointDensityModel& model() const { return *model_; }

private:
  friend class JointDensityModel;
  ConditionalSlice(const JointDensityModel& model, double x);

  const JointDensityModel* model_;
  double x_;
  std::vector<double> factors_;  // weight_i * Kx((x_i - x) / h1)
  double norm_;                  // 1 / (n h1 h2)
};

// Kernel density estimate of the joint covariate/response density in one of
// three variants:
//   standard       (1/n h1 h2) sum K1((Xi-x)/h1) K2((Yi-y)/h2)
//   censored       same sum over (Xi, Ti) weighted by event_i / G(Ti-),
//                  G = censoring-survival Kaplan-Meier estimate
//   deconvolution  K1 replaced by the deconvolution kernel K_U on (Wi, Yi)
// Immutable after construction; all evaluations are pure.
class JointDensityModel {
public:
  static JointDensityModel standard(Sample sample, kernels::Kernel k1,
                                    kernels::Kernel k2, double h1, double h2);
  static JointDensityModel censored(CensoredSample sample, kernels::Kernel k1,
                                    kernels::Kernel k2, double h1, double h2);
  static JointDensityModel deconvolution(ContaminatedSample sample,
                                         kernels::Kernel base1,
                                         kernels::Kernel k2, double h1,
                                         double h2);

  Variant variant() const { return variant_; }

  double pdf(double x, double y) const;
  // Analytic partial derivatives in y; require a differentiable response
  // kernel (box K2 throws std::invalid_argument).
  double pdf_dy(double x, double y) const;
  double pdf_dyy(double x, double y) const;

  ConditionalSlice slice(double x) const { return ConditionalSlice(*this, x); }

  std::size_t size() const { return covariates_.size(); }
  std::span<const double> covariates() const { return covariates_; }
  std::span<const double> responses() const { return responses_; }
  std::span<const double> weights() const { return weights_; }
  double h1() const { return h1_; }
  double h2() const { return h2_; }
  const kernels::Kernel& kernel_x() const { return k1_; }
  const kernels::Kernel& kernel_y() const { return k2_; }

  double response_min() const { return response_min_; }
  double response_max() const { return response_max_; }
  double response_span() const { return response_max_ - response_min_; }

  // Covariate kernel factor Kx(d) at scaled distance d = (x_i - x)/h1;
  // K1 for standard/censored, K_U for deconvolution.
  double covariate_factor(double d) const;

private:
  JointDensityModel(Variant variant, std::vector<double> covariates,
                    std::vector<double> responses, std::vector<double> weights,
                    kernels::Kernel k1, kernels::Kernel k2, double h1, double h2,
                    std::optional<kernels::DeconvKernel> ku);

  void require_differentiable_k2() const;

  Variant variant_;
  std::vector<double> covariates_;
  std::vector<double> responses_;
  std::vector<double> weights_;
  kernels::Kernel k1_;
  kernels::Kernel k2_;
  double h1_;
  double h2_;
  std::optional<kernels::DeconvKernel> ku_;
  double response_min_;
  double response_max_;
};

}  // namespace modalkit::density
