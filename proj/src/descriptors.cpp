#include "fractex/descriptors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "fractex/error.hpp"

namespace fractex::descriptors {

std::vector<double> DescriptorCurve::features() const {
  std::vector<double> f;
  f.reserve(u.size() + 1);
  if (include_r0) f.push_back(v0);
  f.insert(f.end(), u.begin(), u.end());
  return f;
}

DescriptorCurve vbfd_descriptors(const surface::VolumeCurve& curve, bool include_r0) {
  if (curve.size() == 0 || curve.squared_radii.front() != 0) {
    throw ValidationError("volume curve must start at r = 0");
  }
  DescriptorCurve d;
  d.include_r0 = include_r0;
  d.v0 = std::log(static_cast<double>(curve.volumes.front()));
  for (std::size_t k = 1; k < curve.size(); ++k) {
    d.t.push_back(0.5 * std::log(static_cast<double>(curve.squared_radii[k])));
    d.u.push_back(std::log(static_cast<double>(curve.volumes[k])));
  }
  return d;
}

FractalDimensionEstimate estimate_fd(const DescriptorCurve& desc, std::optional<FitRange> range) {
  const FitRange r = range.value_or(FitRange{desc.t.empty() ? 0.0 : desc.t.front(),
                                             desc.t.empty() ? 0.0 : desc.t.back()});
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < desc.size(); ++k) {
    if (desc.t[k] >= r.t_lo && desc.t[k] <= r.t_hi) pts.emplace_back(desc.t[k], desc.u[k]);
  }
  if (pts.size() < 3) throw DomainError("fractal dimension fit needs at least 3 points");

  double mt = 0, mu = 0;
  for (auto [t, u] : pts) {
    mt += t;
    mu += u;
  }
  mt /= static_cast<double>(pts.size());
  mu /= static_cast<double>(pts.size());
  double stt = 0, stu = 0;
  for (auto [t, u] : pts) {
    stt += (t - mt) * (t - mt);
    stu += (t - mt) * (u - mu);
  }
  if (stt <= 0) throw DomainError("fit range has no spread in log r");
  const double slope = stu / stt;
  const double intercept = mu - slope * mt;
  double ss = 0;
  for (auto [t, u] : pts) {
    const double e = u - (intercept + slope * t);
    ss += e * e;
  }
  return {3.0 - slope, slope, intercept, r, std::sqrt(ss / static_cast<double>(pts.size())),
          pts.size()};
}

namespace {

void require_increasing(const std::vector<double>& t) {
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw DomainError("descriptor abscissae must be strictly increasing");
  }
}

// Three-point derivative on an irregular grid; exact for quadratics.
std::vector<double> irregular_derivative(const std::vector<double>& t, const std::vector<double>& u) {
  const std::size_t n = t.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a, b, c;  // stencil indices; i is one of them
    if (i == 0) {
      a = 0, b = 1, c = 2;
    } else if (i == n - 1) {
      a = n - 3, b = n - 2, c = n - 1;
    } else {
      a = i - 1, b = i, c = i + 1;
    }
    // Derivative of the Lagrange interpolant through a, b, c at t[i].
    const double x = t[i];
    const double la = ((x - t[b]) + (x - t[c])) / ((t[a] - t[b]) * (t[a] - t[c]));
    const double lb = ((x - t[a]) + (x - t[c])) / ((t[b] - t[a]) * (t[b] - t[c]));
    const double lc = ((x - t[a]) + (x - t[b])) / ((t[c] - t[a]) * (t[c] - t[b]));
    d[i] = la * u[a] + lb * u[b] + lc * u[c];
  }
  return d;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

DescriptorCurve smoothed_derivative(const DescriptorCurve& desc, double a) {
  if (!(a > 0)) throw DomainError("smoothing scale must be > 0");
  const std::size_t n = desc.size();
  if (n < 5) throw DomainError("smoothed derivative needs at least 5 points");
  require_increasing(desc.t);

  const auto deriv = irregular_derivative(desc.t, desc.u);
  // Cell widths turn the kernel sum into a quadrature of the convolution
  // integral on the irregular grid.
  std::vector<double> cell(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = j == 0 ? desc.t[0] : 0.5 * (desc.t[j - 1] + desc.t[j]);
    const double hi = j == n - 1 ? desc.t[n - 1] : 0.5 * (desc.t[j] + desc.t[j + 1]);
    cell[j] = hi - lo;
  }
  const double support = 4.0 * a;
  DescriptorCurve out;
  out.t = desc.t;
  out.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double num = 0, mass = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dt = desc.t[j] - desc.t[i];
      if (std::abs(dt) > support * (1.0 + 1e-9)) continue;  // symmetric under rounding
      const double w = std::exp(-0.5 * dt * dt / (a * a)) * cell[j];
      num += w * deriv[j];
      mass += w;
    }
    out.u[i] = 3.0 - num / mass;
  }
  return out;
}

DescriptorCurve fourier_derivative(const DescriptorCurve& desc, double a) {
  if (!(a > 0)) throw DomainError("smoothing scale must be > 0");
  const std::size_t n = desc.size();
  if (n < 8) throw DomainError("Fourier derivative needs at least 8 points");
  require_increasing(desc.t);

  const double t0 = desc.t.front();
  const double span = desc.t.back() - t0;
  const double h = span / static_cast<double>(n - 1);
  MonotoneCubic interp(desc.t, desc.u);
  std::vector<double> grid(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = i + 1 == n ? desc.t.back() : t0 + h * static_cast<double>(i);
    y[i] = interp(grid[i]);
  }

  // Remove the chord so both ends vanish, then odd-extend: the periodic
  // signal is continuous with a continuous first derivative.
  const double chord = (y[n - 1] - y[0]) / span;
  const std::size_t len = 2 * (n - 1);
  double* sig = fftw_alloc_real(len);
  fftw_complex* spec = fftw_alloc_complex(len / 2 + 1);
  for (std::size_t i = 0; i < n; ++i) sig[i] = y[i] - (y[0] + chord * (grid[i] - t0));
  sig[0] = 0.0;
  sig[n - 1] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) sig[len - i] = -sig[i];

  fftw_plan fwd, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), sig, spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, sig, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  const double two_pi = 2.0 * std::numbers::pi;
  const double period = static_cast<double>(len) * h;
  for (std::size_t k = 0; k <= len / 2; ++k) {
    const double f = static_cast<double>(k) / period;
    const double atten = std::exp(-0.5 * (two_pi * a * f) * (two_pi * a * f));
    // multiply by j * 2 pi f * G(f)
    const double re = spec[k][0], im = spec[k][1];
    const double s = two_pi * f * atten;
    spec[k][0] = -im * s;
    spec[k][1] = re * s;
  }
  spec[len / 2][0] = spec[len / 2][1] = 0.0;  // Nyquist has no defined derivative
  fftw_execute(inv);

  DescriptorCurve out;
  out.t = grid;
  out.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.u[i] = sig[i] / static_cast<double>(len) + chord;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(sig);
  fftw_free(spec);
  return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw DomainError("interpolation needs >= 2 matching samples");
  require_increasing(x_);
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    del[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = del[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (del[k - 1] * del[k] > 0) {
      const double w1 = 2 * h[k] + h[k - 1];
      const double w2 = h[k] + 2 * h[k - 1];
      slope_[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
    }
  }
  // Shape-preserving one-sided end slopes.
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0) {
      s = 0;
    } else if (d0 * d1 <= 0 && std::abs(s) > std::abs(3 * d0)) {
      s = 3 * d0;
    }
    return s;
  };
  slope_[0] = end_slope(h[0], h[1], del[0], del[1]);
  slope_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

double MonotoneCubic::operator()(double xq) const {
  const std::size_t n = x_.size();
  std::size_t k;
  if (xq <= x_.front()) {
    k = 0;
  } else if (xq >= x_.back()) {
    k = n - 2;
  } else {
    k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
  }
  const double h = x_[k + 1] - x_[k];
  const double s = (xq - x_[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * y_[k] + h10 * h * slope_[k] + h01 * y_[k + 1] + h11 * h * slope_[k + 1];
}

}  // namespace fractex::descriptors
