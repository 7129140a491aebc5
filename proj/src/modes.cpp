#include "modalkit/modes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "modalkit/parallel.hpp"

namespace modalkit::modes {

namespace {

struct ResolvedConfig {
  int max_iter;
  double conv_tol;
  double merge_tol;
  int init_count;
  double grad_tol;
  int threads;
  double y_lo;      // search interval: [min Y - h2, max Y + h2]
  double y_hi;
  double span_scale;  // max(response span, h2), the residual normalizer
};

ResolvedConfig resolve(const density::JointDensityModel& model,
                       const MeanshiftConfig& cfg) {
  if (cfg.max_iter <= 0 || cfg.init_count <= 0) {
    throw std::invalid_argument("meanshift iteration counts must be positive");
  }
  if (cfg.grad_tol <= 0.0) {
    throw std::invalid_argument("grad_tol must be positive");
  }
  ResolvedConfig r;
  r.max_iter = cfg.max_iter;
  r.init_count = cfg.init_count;
  r.grad_tol = cfg.grad_tol;
  r.threads = cfg.threads;
  const double span = model.response_span();
  r.span_scale = std::max(span, model.h2());
  r.conv_tol = std::isnan(cfg.conv_tol) ? 1e-7 * r.span_scale : cfg.conv_tol;
  r.merge_tol = std::isnan(cfg.merge_tol) ? 0.5 * model.h2() : cfg.merge_tol;
  if (r.conv_tol <= 0.0 || r.merge_tol <= 0.0) {
    throw std::invalid_argument("meanshift tolerances must be positive");
  }
  r.y_lo = model.response_min() - model.h2();
  r.y_hi = model.response_max() + model.h2();
  return r;
}

double residual(const density::ConditionalSlice& slice, double y,
                double span_scale) {
  const double p = slice.pdf(y);
  if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
  const double h2 = slice.model().h2();
  return h2 * h2 * std::abs(slice.pdf_dy(y)) / (p * span_scale);
}

// Newton refinement of a near-stationary candidate; reverts when the step
// leaves the search interval or lowers the density.
double polish(const density::ConditionalSlice& slice, double y,
              const ResolvedConfig& cfg) {
  const double p_start = slice.pdf(y);
  double cur = y;
  for (int it = 0; it < 16; ++it) {
    const double d1 = slice.pdf_dy(cur);
    const double d2 = slice.pdf_dyy(cur);
    if (!(d2 < 0.0)) break;
    double step = -d1 / d2;
    const double cap = 0.5 * slice.model().h2();
    if (std::abs(step) > cap) step = std::copysign(cap, step);
    const double next = cur + step;
    if (!std::isfinite(next) || next < cfg.y_lo || next > cfg.y_hi) break;
    cur = next;
    if (std::abs(step) < 1e-16 * cfg.span_scale) break;
  }
  if (!std::isfinite(cur)) return y;
  const double p_end = slice.pdf(cur);
  return p_end >= p_start - 1e-12 * std::max(std::abs(p_start), 1.0) ? cur : y;
}

// Meanshift candidates from equally spaced starts over the search interval.
std::vector<double> meanshift_candidates(const density::ConditionalSlice& slice,
                                         const ResolvedConfig& cfg) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.init_count));
  for (int k = 0; k < cfg.init_count; ++k) {
    double y = cfg.init_count == 1
                   ? 0.5 * (cfg.y_lo + cfg.y_hi)
                   : cfg.y_lo + (cfg.y_hi - cfg.y_lo) * k / (cfg.init_count - 1);
    bool ok = true;
    for (int t = 0; t < cfg.max_iter; ++t) {
      double next;
      try {
        next = slice.meanshift_step(y);
      } catch (const std::domain_error&) {
        ok = false;
        break;
      }
      const double delta = std::abs(next - y);
      y = next;
      if (delta <= cfg.conv_tol) break;
    }
    if (ok && std::isfinite(y)) out.push_back(y);
  }
  return out;
}

// Dense scan used for the deconvolution variant, whose signed weights rule
// out the meanshift update.
std::vector<double> scan_candidates(const density::ConditionalSlice& slice,
                                    const ResolvedConfig& cfg) {
  const double h2 = slice.model().h2();
  const double span = cfg.y_hi - cfg.y_lo;
  auto count = static_cast<std::size_t>(std::ceil(span / (0.1 * h2))) + 1;
  count = std::clamp<std::size_t>(count, 201, 4001);
  std::vector<double> p(count);
  const double dy = span / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) {
    p[j] = slice.pdf(cfg.y_lo + dy * static_cast<double>(j));
  }
  std::vector<double> out;
  for (std::size_t j = 1; j + 1 < count; ++j) {
    const bool is_max = p[j] >= p[j - 1] && p[j] >= p[j + 1] &&
                        (p[j] > p[j - 1] || p[j] > p[j + 1]);
    if (is_max && p[j] > 0.0) {
      out.push_back(cfg.y_lo + dy * static_cast<double>(j));
    }
  }
  return out;
}

ModeSet build_mode_set(const density::ConditionalSlice& slice, double x,
                       std::vector<double> candidates,
                       const ResolvedConfig& cfg) {
  ModeSet set;
  set.x = x;

  std::vector<ModePoint> valid;
  for (double y : candidates) {
    const double refined = polish(slice, y, cfg);
    if (!std::isfinite(refined) || refined < cfg.y_lo || refined > cfg.y_hi) {
      continue;
    }
    const double curv = slice.pdf_dyy(refined);
    if (!(curv < 0.0)) continue;
    if (!(residual(slice, refined, cfg.span_scale) < cfg.grad_tol)) continue;
    valid.push_back({refined, slice.pdf(refined), curv});
  }
  if (valid.empty()) {
    set.flagged = true;
    return set;
  }

  std::sort(valid.begin(), valid.end(), [](const ModePoint& a, const ModePoint& b) {
    return a.y < b.y;
  });

  // chain-cluster within merge_tol; keep the densest member of each cluster
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    std::size_t best = begin;
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (valid[i].density > valid[best].density) best = i;
    }
    set.points.push_back(valid[best]);
  };
  for (std::size_t i = begin + 1; i < valid.size(); ++i) {
    if (valid[i].y - valid[i - 1].y > cfg.merge_tol) {
      flush(i);
      begin = i;
    }
  }
  flush(valid.size());
  return set;
}

ModeSet fit_point(const density::JointDensityModel& model, double x,
                  const ResolvedConfig& cfg) {
  const auto slice = model.slice(x);
  if (slice.flat()) {
    ModeSet set;
    set.x = x;
    set.flagged = true;
    return set;
  }
  auto candidates = model.variant() == density::Variant::deconvolution
                        ? scan_candidates(slice, cfg)
                        : meanshift_candidates(slice, cfg);
  return build_mode_set(slice, x, std::move(candidates), cfg);
}

void require_gaussian_k2(const density::JointDensityModel& model) {
  if (model.kernel_y().family() != kernels::KernelFamily::gaussian) {
    throw std::invalid_argument(
        "multimodal fitting requires a gaussian response kernel");
  }
}

double golden_section_max(const density::ConditionalSlice& slice, double lo,
                          double hi) {
  constexpr double kInvPhi = 0.6180339887498948482045868343656;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = slice.pdf(c), fd = slice.pdf(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(b));
       ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = slice.pdf(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = slice.pdf(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<double> ModeSet::mode_values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.y);
  return out;
}

double partial_meanshift_step(const density::JointDensityModel& model, double x,
                              double y) {
  if (model.variant() == density::Variant::deconvolution) {
    throw std::invalid_argument(
        "partial meanshift requires nonnegative weights; the deconvolution "
        "variant is fitted by a dense scan instead");
  }
  return model.slice(x).meanshift_step(y);
}

std::vector<double> meanshift_trajectory(const density::JointDensityModel& model,
                                         double x, double y0,
                                         const MeanshiftConfig& cfg) {
  if (model.variant() == density::Variant::deconvolution) {
    throw std::invalid_argument(
        "partial meanshift requires nonnegative weights; the deconvolution "
        "variant is fitted by a dense scan instead");
  }
  const auto r = resolve(model, cfg);
  const auto slice = model.slice(x);
  std::vector<double> path{y0};
  double y = y0;
  for (int t = 0; t < r.max_iter; ++t) {
    const double next = slice.meanshift_step(y);
    path.push_back(next);
    const double delta = std::abs(next - y);
    y = next;
    if (delta <= r.conv_tol) break;
  }
  return path;
}

double normalized_gradient(const density::JointDensityModel& model, double x,
                           double y) {
  const auto slice = model.slice(x);
  return residual(slice, y, std::max(model.response_span(), model.h2()));
}

ModalCurve fit_multimodal(const density::JointDensityModel& model,
                          std::span<const double> grid,
                          const MeanshiftConfig& cfg) {
  if (grid.empty()) {
    throw std::invalid_argument("fit grid must be non-empty");
  }
  require_gaussian_k2(model);
  const auto r = resolve(model, cfg);

  ModalCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.sets.resize(grid.size());
  detail::parallel_for(grid.size(), r.threads, [&](std::size_t g) {
    curve.sets[g] = fit_point(model, grid[g], r);
  });
  return curve;
}

ModalCurve fit_unimodal(const density::JointDensityModel& model,
                        std::span<const double> grid,
                        const MeanshiftConfig& cfg) {
  if (grid.empty()) {
    throw std::invalid_argument("fit grid must be non-empty");
  }
  const auto r = resolve(model, cfg);

  ModalCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.sets.resize(grid.size());

  if (model.kernel_y().family() == kernels::KernelFamily::gaussian) {
    const ModalCurve multi = fit_multimodal(model, grid, cfg);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const ModeSet& set = multi.sets[g];
      ModeSet single;
      single.x = grid[g];
      single.flagged = set.flagged;
      if (!set.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < set.points.size(); ++i) {
          if (set.points[i].density > set.points[best].density) best = i;
        }
        single.points.push_back(set.points[best]);
      }
      curve.sets[g] = std::move(single);
    }
    return curve;
  }

  // general response kernels: dense argmax scan, refined where differentiable
  detail::parallel_for(grid.size(), r.threads, [&](std::size_t g) {
    const auto slice = model.slice(grid[g]);
    ModeSet single;
    single.x = grid[g];
    if (slice.flat()) {
      single.flagged = true;
      curve.sets[g] = std::move(single);
      return;
    }
    const double span = r.y_hi - r.y_lo;
    auto count = static_cast<std::size_t>(
                     std::ceil(span / (0.02 * model.h2()))) + 1;
    count = std::clamp<std::size_t>(count, 401, 20001);
    const double dy = span / static_cast<double>(count - 1);
    std::size_t best = 0;
    double best_p = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
      const double p = slice.pdf(r.y_lo + dy * static_cast<double>(j));
      if (p > best_p) {
        best_p = p;
        best = j;
      }
    }
    if (!(best_p > 0.0)) {
      single.flagged = true;
      curve.sets[g] = std::move(single);
      return;
    }
    double y = r.y_lo + dy * static_cast<double>(best);
    double curvature = 0.0;
    if (model.kernel_y().differentiable()) {
      const double lo = std::max(r.y_lo, y - dy);
      const double hi = std::min(r.y_hi, y + dy);
      y = golden_section_max(slice, lo, hi);
      curvature = slice.pdf_dyy(y);
    }
    single.points.push_back({y, slice.pdf(y), curvature});
    curve.sets[g] = std::move(single);
  });
  return curve;
}

ModalCurve fit_multimodal(const density::Sample& sample, const FitConfig& cfg,
                          std::span<const double> grid) {
  const auto model = density::JointDensityModel::standard(
      sample, cfg.kernel_x, cfg.kernel_y, cfg.h1, cfg.h2);
  return fit_multimodal(model, grid, cfg.meanshift);
}

ModalCurve fit_unimodal(const density::Sample& sample, const FitConfig& cfg,
                        std::span<const double> grid) {
  const auto model = density::JointDensityModel::standard(
      sample, cfg.kernel_x, cfg.kernel_y, cfg.h1, cfg.h2);
  return fit_unimodal(model, grid, cfg.meanshift);
}

}  // namespace modalkit::modes
