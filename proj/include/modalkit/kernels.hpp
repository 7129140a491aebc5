#pragma once

#include <string_view>

namespace modalkit::kernels {

// Univariate symmetric kernels. `fourier` is the kernel with characteristic
// function (1 - s^2)^3 on [-1, 1]; it is signed and exists as a base for
// deconvolution with gaussian measurement error, where a compactly supported
// Fourier transform is required for the inversion integral to converge.
enum class KernelFamily { gaussian, box, epanechnikov, fourier };

KernelFamily kernel_family_from_name(std::string_view name);
std::string_view to_string(KernelFamily family);

class Kernel {
public:
  constexpr Kernel() = default;
  constexpr explicit Kernel(KernelFamily family) : family_(family) {}

  KernelFamily family() const { return family_; }

  // Density value K(u).
  double operator()(double u) const;
  // First derivative K'(u). The box kernel is not differentiable at |u| = 1
  // and throws std::domain_error there; elsewhere its derivative is 0.
  double deriv1(double u) const;
  // Second derivative K''(u), same domain restrictions as deriv1.
  double deriv2(double u) const;
  // Characteristic function (Fourier transform) of the kernel.
  double cf(double s) const;
  // Half-width of the effective support used for quadrature checks:
  // 8 for gaussian, 1 for box/epanechnikov, +inf for fourier (t^-4 tails).
  double support_radius() const;

  bool differentiable() const { return family_ != KernelFamily::box; }

private:
  KernelFamily family_ = KernelFamily::gaussian;
};

enum class ErrorFamily { gaussian, laplace };

ErrorFamily error_family_from_name(std::string_view name);
std::string_view to_string(ErrorFamily family);

// Known measurement-error distribution, centered at zero. `scale` is the
// classical scale parameter: standard deviation for gaussian, diversity b
// for laplace (variance 2 b^2). scale = 0 means exact observation.
class ErrorDistribution {
public:
  ErrorDistribution(ErrorFamily family, double scale);

  ErrorFamily family() const { return family_; }
  double scale() const { return scale_; }
  // Characteristic function phi_U(s); phi_U(0) = 1 and |phi_U| <= 1.
  double cf(double s) const;

private:
  ErrorFamily family_;
  double scale_;
};

// Deconvolution kernel K_U(t) = (1/2pi) int exp(-i t s) phi_K(s) / phi_U(s/h) ds.
// Supported combinations:
//   * zero error scale: reduces to the base kernel,
//   * laplace error + gaussian base: closed form K_G(t) [1 - (sigma/h)^2 (t^2 - 1)],
//   * fourier base + any error: adaptive quadrature over the compact cf support.
// Anything else (notably gaussian error over a gaussian base) is rejected at
// construction because the inversion integral diverges.
class DeconvKernel {
public:
  DeconvKernel(Kernel base, ErrorDistribution error, double bandwidth);

  double operator()(double t) const;

  const Kernel& base() const { return base_; }
  const ErrorDistribution& error() const { return error_; }
  double bandwidth() const { return bandwidth_; }

private:
  enum class Eval { base_only, laplace_closed_form, fourier_quadrature };

  Kernel base_;
  ErrorDistribution error_;
  double bandwidth_;
  Eval eval_;
};

}  // namespace modalkit::kernels
