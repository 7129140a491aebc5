#include "modalkit/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace modalkit::kernels {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
constexpr double kPi = 3.1415926535897932384626433832795;

double gaussian_eval(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

// Moments of (1 - s^2)^3 over [0, 1]: c_{2k} = int s^{2k} (1-s^2)^3 ds.
constexpr double kFourierC0 = 16.0 / 35.0;
constexpr double kFourierC2 = 16.0 / 315.0;
constexpr double kFourierC4 = 16.0 / 1155.0;
constexpr double kFourierC6 = 16.0 / 3003.0;
constexpr double kFourierC8 = 16.0 / 6435.0;

// K(t) = (1/pi) int_0^1 (1-s^2)^3 cos(ts) ds. The closed form cancels
// catastrophically near t = 0, so small |t| uses the cosine series instead.
double fourier_eval(double t) {
  const double a = std::abs(t);
  if (a <= 0.7) {
    const double t2 = t * t;
    return (kFourierC0 - kFourierC2 * t2 / 2.0 + kFourierC4 * t2 * t2 / 24.0 -
            kFourierC6 * t2 * t2 * t2 / 720.0 +
            kFourierC8 * t2 * t2 * t2 * t2 / 40320.0) /
           kPi;
  }
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double t7 = t3 * t3 * t;
  const double num =
      (720.0 - 288.0 * t2) * std::sin(t) + (48.0 * t3 - 720.0 * t) * std::cos(t);
  return num / (kPi * t7);
}

double fourier_deriv1(double t) {
  const double a = std::abs(t);
  if (a <= 0.7) {
    const double t2 = t * t;
    return (-kFourierC2 * t + kFourierC4 * t * t2 / 6.0 -
            kFourierC6 * t * t2 * t2 / 120.0 +
            kFourierC8 * t * t2 * t2 * t2 / 5040.0) /
           kPi;
  }
  const double t2 = t * t;
  const double t4 = t2 * t2;
  const double t8 = t4 * t4;
  const double num = (5040.0 * t - 480.0 * t2 * t) * std::cos(t) +
                     (-48.0 * t4 + 2160.0 * t2 - 5040.0) * std::sin(t);
  return num / (kPi * t8);
}

double fourier_deriv2(double t) {
  const double a = std::abs(t);
  if (a <= 0.7) {
    const double t2 = t * t;
    return (-kFourierC2 + kFourierC4 * t2 / 2.0 - kFourierC6 * t2 * t2 / 24.0 +
            kFourierC8 * t2 * t2 * t2 / 720.0) /
           kPi;
  }
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double t4 = t2 * t2;
  const double t5 = t4 * t;
  const double t9 = t4 * t4 * t;
  const double num = (-48.0 * t5 + 4560.0 * t3 - 40320.0 * t) * std::cos(t) +
                     (672.0 * t4 - 18000.0 * t2 + 40320.0) * std::sin(t);
  return num / (kPi * t9);
}

double adaptive_simpson_rec(const auto& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const auto& f, double a, double b, double tol) {
  const double fa = f(a);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

KernelFamily kernel_family_from_name(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "box") return KernelFamily::box;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  if (name == "fourier") return KernelFamily::fourier;
  throw std::invalid_argument("unknown kernel family: " + std::string(name));
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::box: return "box";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::fourier: return "fourier";
  }
  return "?";
}

double Kernel::operator()(double u) const {
  switch (family_) {
    case KernelFamily::gaussian:
      return gaussian_eval(u);
    case KernelFamily::box:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelFamily::epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::fourier:
      return fourier_eval(u);
  }
  return 0.0;
}

double Kernel::deriv1(double u) const {
  switch (family_) {
    case KernelFamily::gaussian:
      return -u * gaussian_eval(u);
    case KernelFamily::box:
      if (std::abs(u) == 1.0) {
        throw std::domain_error("box kernel is not differentiable at |u| = 1");
      }
      return 0.0;
    case KernelFamily::epanechnikov:
      return std::abs(u) < 1.0 ? -1.5 * u : 0.0;
    case KernelFamily::fourier:
      return fourier_deriv1(u);
  }
  return 0.0;
}

double Kernel::deriv2(double u) const {
  switch (family_) {
    case KernelFamily::gaussian: {
      return (u * u - 1.0) * gaussian_eval(u);
    }
    case KernelFamily::box:
      if (std::abs(u) == 1.0) {
        throw std::domain_error("box kernel is not differentiable at |u| = 1");
      }
      return 0.0;
    case KernelFamily::epanechnikov:
      return std::abs(u) < 1.0 ? -1.5 : 0.0;
    case KernelFamily::fourier:
      return fourier_deriv2(u);
  }
  return 0.0;
}

double Kernel::cf(double s) const {
  switch (family_) {
    case KernelFamily::gaussian:
      return std::exp(-0.5 * s * s);
    case KernelFamily::box:
      return std::abs(s) < 1e-8 ? 1.0 - s * s / 6.0 : std::sin(s) / s;
    case KernelFamily::epanechnikov: {
      if (std::abs(s) < 1e-4) {
        return 1.0 - s * s / 10.0;
      }
      return 3.0 * (std::sin(s) - s * std::cos(s)) / (s * s * s);
    }
    case KernelFamily::fourier: {
      if (std::abs(s) >= 1.0) return 0.0;
      const double w = 1.0 - s * s;
      return w * w * w;
    }
  }
  return 0.0;
}

double Kernel::support_radius() const {
  switch (family_) {
    case KernelFamily::gaussian:
      return 8.0;
    case KernelFamily::box:
    case KernelFamily::epanechnikov:
      return 1.0;
    case KernelFamily::fourier:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

ErrorFamily error_family_from_name(std::string_view name) {
  if (name == "gaussian") return ErrorFamily::gaussian;
  if (name == "laplace") return ErrorFamily::laplace;
  throw std::invalid_argument("unknown error distribution: " + std::string(name));
}

std::string_view to_string(ErrorFamily family) {
  return family == ErrorFamily::gaussian ? "gaussian" : "laplace";
}

ErrorDistribution::ErrorDistribution(ErrorFamily family, double scale)
    : family_(family), scale_(scale) {
  if (!std::isfinite(scale) || scale < 0.0) {
    throw std::invalid_argument("error distribution scale must be finite and >= 0");
  }
}

double ErrorDistribution::cf(double s) const {
  const double a = scale_ * s;
  if (family_ == ErrorFamily::gaussian) {
    return std::exp(-0.5 * a * a);
  }
  return 1.0 / (1.0 + a * a);
}

DeconvKernel::DeconvKernel(Kernel base, ErrorDistribution error, double bandwidth)
    : base_(base), error_(error), bandwidth_(bandwidth), eval_(Eval::base_only) {
  if (!std::isfinite(bandwidth) || bandwidth <= 0.0) {
    throw std::invalid_argument("deconvolution bandwidth must be positive");
  }
  if (error.scale() == 0.0) {
    eval_ = Eval::base_only;
  } else if (base.family() == KernelFamily::fourier) {
    eval_ = Eval::fourier_quadrature;
  } else if (base.family() == KernelFamily::gaussian &&
             error.family() == ErrorFamily::laplace) {
    eval_ = Eval::laplace_closed_form;
  } else {
    throw std::invalid_argument(
        "unsupported kernel/error combination for deconvolution: base '" +
        std::string(to_string(base.family())) + "' with '" +
        std::string(to_string(error.family())) +
        "' error (the inversion integral does not converge; use a gaussian "
        "base with laplace error, or the fourier base)");
  }
}

double DeconvKernel::operator()(double t) const {
  switch (eval_) {
    case Eval::base_only:
      return base_(t);
    case Eval::laplace_closed_form: {
      const double r = error_.scale() / bandwidth_;
      return gaussian_eval(t) * (1.0 - r * r * (t * t - 1.0));
    }
    case Eval::fourier_quadrature: {
      const double h = bandwidth_;
      const auto integrand = [&](double s) {
        const double w = 1.0 - s * s;
        return w * w * w / error_.cf(s / h) * std::cos(t * s);
      };
      return adaptive_simpson(integrand, 0.0, 1.0, 1e-11) / kPi;
    }
  }
  return 0.0;
}

}  // namespace modalkit::kernels
