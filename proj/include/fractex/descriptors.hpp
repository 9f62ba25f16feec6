#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fractex/surface_edt.hpp"

namespace fractex::descriptors {

/// Samples (t_k, u_k) = (ln r_k, ln V(r_k)) for r_k >= 1, plus ln V(0).
struct DescriptorCurve {
  std::vector<double> t;
  std::vector<double> u;
  double v0 = 0.0;
  bool include_r0 = false;

  std::size_t size() const noexcept { return t.size(); }

  /// Classifier input: [v0 if include_r0] followed by u.
  std::vector<double> features() const;
};

DescriptorCurve vbfd_descriptors(const surface::VolumeCurve& curve, bool include_r0 = true);

struct FitRange {
  double t_lo;
  double t_hi;
};

struct FractalDimensionEstimate {
  double fd;
  double slope;
  double intercept;
  FitRange range;
  double residual;  // RMS of the line fit
  std::size_t points;
};

/// OLS line through (t, u) restricted to `range` (inclusive); fd = 3 - slope.
FractalDimensionEstimate estimate_fd(const DescriptorCurve& desc,
                                     std::optional<FitRange> range = std::nullopt);

/// 3 - (du/dt convolved with a Gaussian of scale `a`), on the input grid.
DescriptorCurve smoothed_derivative(const DescriptorCurve& desc, double a);

/// Gaussian-attenuated spectral derivative du/dt on a uniform grid of the
/// same length as the input.
DescriptorCurve fourier_derivative(const DescriptorCurve& desc, double a);

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of (x, y),
/// x strictly increasing.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);
  double operator()(double xq) const;

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace fractex::descriptors
