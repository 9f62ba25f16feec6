#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fractex/descriptors.hpp"
#include "fractex/error.hpp"
#include "fractex/synthetic.hpp"
#include "oracles.hpp"

using namespace fractex;
using descriptors::DescriptorCurve;

namespace {

DescriptorCurve line_curve(const std::vector<double>& t, double s, double c) {
  DescriptorCurve d;
  d.t = t;
  for (double x : t) d.u.push_back(s * x + c);
  return d;
}

std::vector<double> log_radii(double r_max) {
  const auto r = surface::radius_set(r_max).radii();
  std::vector<double> t;
  for (std::size_t k = 1; k < r.size(); ++k) t.push_back(std::log(r[k]));
  return t;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST(Vbfd, TwoPointCurve) {
  const surface::VolumeCurve c{{0, 1}, {4, 28}};
  const auto d = descriptors::vbfd_descriptors(c, true);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.t[0], 0.0);
  EXPECT_DOUBLE_EQ(d.u[0], std::log(28.0));
  EXPECT_DOUBLE_EQ(d.v0, std::log(4.0));
  EXPECT_EQ(d.features(), (std::vector<double>{std::log(4.0), std::log(28.0)}));
  EXPECT_EQ(descriptors::vbfd_descriptors(c, false).features(), (std::vector<double>{std::log(28.0)}));
}

TEST(Vbfd, LengthAtRadiusTen) {
  const auto c = surface::volume_curve(imageio::GrayImage(4, 4, std::uint8_t{9}), 10.0);
  EXPECT_EQ(descriptors::vbfd_descriptors(c, true).features().size(), 86u);
  EXPECT_EQ(descriptors::vbfd_descriptors(c, false).features().size(), 85u);
}

TEST(Vbfd, DoublingShiftsByLn2) {
  std::mt19937_64 rng(4);
  const auto c = surface::volume_curve(oracle::random_image(rng, 6, 6), 4.0);
  auto c2 = c;
  for (auto& v : c2.volumes) v *= 2;
  const auto a = descriptors::vbfd_descriptors(c).features();
  const auto b = descriptors::vbfd_descriptors(c2).features();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i] - a[i], std::log(2.0), 1e-12);
}

TEST(Vbfd, CurveMustStartAtZero) {
  EXPECT_THROW(descriptors::vbfd_descriptors(surface::VolumeCurve{{1, 2}, {7, 19}}), ValidationError);
}

TEST(EstimateFd, ExactLine) {
  const auto e = descriptors::estimate_fd(line_curve(log_radii(6), 1.0, 0.7));
  EXPECT_NEAR(e.slope, 1.0, 1e-12);
  EXPECT_NEAR(e.fd, 2.0, 1e-12);
  EXPECT_NEAR(e.intercept, 0.7, 1e-12);
  EXPECT_LT(e.residual, 1e-12);
}

TEST(EstimateFd, RangeRestrictsPoints) {
  const auto d = line_curve({0, 1, 2, 3, 4, 5}, 2.0, 0.0);
  const auto e = descriptors::estimate_fd(d, descriptors::FitRange{1.0, 3.0});
  EXPECT_EQ(e.points, 3u);
  EXPECT_NEAR(e.fd, 1.0, 1e-12);
}

TEST(EstimateFd, TooFewPoints) {
  EXPECT_THROW(descriptors::estimate_fd(line_curve({0, 1}, 1.0, 0.0)), DomainError);
}

TEST(EstimateFd, FlatPlaneNearTwo) {
  const auto c = surface::volume_curve(imageio::GrayImage(64, 64, std::uint8_t{128}), 10.0);
  const auto e = descriptors::estimate_fd(descriptors::vbfd_descriptors(c));
  EXPECT_GE(e.fd, 1.8);
  EXPECT_LE(e.fd, 2.2);
}

TEST(Smoothed, LineGivesConstant) {
  const auto t = log_radii(10);
  const auto out = descriptors::smoothed_derivative(line_curve(t, 0.8, 3.0), 0.1);
  ASSERT_EQ(out.size(), t.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out.u[i], 2.2, 1e-9) << i;
}

TEST(Smoothed, QuadraticInterior) {
  // u = t^2 has u' = 2t; Gaussian smoothing of a linear function is exact
  // away from the ends.
  std::vector<double> t;
  for (int i = 0; i < 200; ++i) t.push_back(0.05 * i);
  DescriptorCurve d;
  d.t = t;
  for (double x : t) d.u.push_back(x * x);
  const auto out = descriptors::smoothed_derivative(d, 0.2);
  for (std::size_t i = 40; i < 160; ++i) EXPECT_NEAR(out.u[i], 3.0 - 2.0 * t[i], 1e-6) << i;
}

TEST(Smoothed, BadScale) {
  EXPECT_THROW(descriptors::smoothed_derivative(line_curve(log_radii(5), 1, 0), 0.0), DomainError);
  EXPECT_THROW(descriptors::smoothed_derivative(line_curve(log_radii(5), 1, 0), -1.0), DomainError);
}

TEST(Smoothed, NoiseAndConstantSeparate) {
  // zero-mean white noise of +-16 levels around mid-gray
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(-16, 16);
  std::vector<std::uint8_t> px(64 * 64);
  for (auto& p : px) p = static_cast<std::uint8_t>(128 + d(rng));
  const imageio::GrayImage noise(64, 64, px);
  const imageio::GrayImage flat(64, 64, std::uint8_t{128});
  const auto dn = descriptors::smoothed_derivative(descriptors::vbfd_descriptors(surface::volume_curve(noise, 10)), 0.1);
  const auto df = descriptors::smoothed_derivative(descriptors::vbfd_descriptors(surface::volume_curve(flat, 10)), 0.1);
  EXPECT_GT(mean(dn.u) - mean(df.u), 0.3) << mean(dn.u) << " vs " << mean(df.u);
}

TEST(Smoothed, SameLengthAndConstantInvariant) {
  std::mt19937_64 rng(6);
  const auto d = descriptors::vbfd_descriptors(surface::volume_curve(oracle::random_image(rng, 16, 16, 0, 40), 8));
  auto lifted = d;
  for (auto& u : lifted.u) u += 12.5;
  const auto a = descriptors::smoothed_derivative(d, 0.12);
  const auto b = descriptors::smoothed_derivative(lifted, 0.12);
  ASSERT_EQ(a.size(), d.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.u[i], b.u[i], 1e-9);
}

TEST(EstimateFd, SanityBandOnSmoothTextures) {
  // Gently varying heightfields at least 5 r_max wide. With one voxel per
  // column, steep gradients leave the surface disconnected, and on small
  // images the dilation around the image border dominates; both push fd
  // below the band.
  for (int size : {48, 64}) {
    for (double amp : {3.0, 6.0, 10.0}) {
      for (double r_max : {5.0, 8.0}) {
        std::vector<std::uint8_t> px(static_cast<std::size_t>(size * size));
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x) {
            px[static_cast<std::size_t>(y * size + x)] =
                static_cast<std::uint8_t>(128 + amp * std::sin(0.3 * x) * std::cos(0.2 * y));
          }
        }
        const auto e = descriptors::estimate_fd(
            descriptors::vbfd_descriptors(surface::volume_curve(imageio::GrayImage(size, size, px), r_max)));
        EXPECT_GT(e.fd, 1.8) << size << " " << amp << " " << r_max;
        EXPECT_LT(e.fd, 3.05);
      }
    }
  }
}

TEST(Fourier, Sinusoid) {
  const double w = 3.0;
  std::vector<double> t;
  for (int i = 0; i < 256; ++i) t.push_back(2.0 * std::numbers::pi * i / 255.0);
  DescriptorCurve d;
  d.t = t;
  for (double x : t) d.u.push_back(std::sin(w * x));
  const auto out = descriptors::fourier_derivative(d, 1e-3);
  ASSERT_EQ(out.size(), t.size());
  for (std::size_t i = 20; i + 20 < out.size(); ++i) {
    EXPECT_NEAR(out.u[i], w * std::cos(w * out.t[i]), 0.05 * w) << i;
  }
}

TEST(Fourier, ConstantGivesZero) {
  const auto out = descriptors::fourier_derivative(line_curve(log_radii(10), 0.0, 5.5), 0.1);
  for (double v : out.u) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Fourier, LineGivesSlope) {
  const auto out = descriptors::fourier_derivative(line_curve(log_radii(10), 1.3, -2.0), 0.1);
  for (double v : out.u) EXPECT_NEAR(v, 1.3, 1e-9);
}

TEST(Fourier, OutputGridUniform) {
  const auto t = log_radii(10);
  const auto out = descriptors::fourier_derivative(line_curve(t, 1.0, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(out.t.front(), t.front());
  EXPECT_DOUBLE_EQ(out.t.back(), t.back());
  const double h = out.t[1] - out.t[0];
  for (std::size_t i = 1; i < out.size(); ++i) EXPECT_NEAR(out.t[i] - out.t[i - 1], h, 1e-12);
}

TEST(Fourier, AgreesWithSmoothedOnSmoothCurve) {
  const auto t = log_radii(10);
  DescriptorCurve d;
  d.t = t;
  for (double x : t) d.u.push_back(1.2 * x + 0.3 * std::sin(2.0 * x) + 4.0);
  const double a = 0.1;
  const auto f = descriptors::fourier_derivative(d, a);
  const auto s = descriptors::smoothed_derivative(d, a);
  const descriptors::MonotoneCubic si(s.t, s.u);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double ref = 3.0 - si(f.t[i]);  // smoothed du/dt
    num += (f.u[i] - ref) * (f.u[i] - ref);
    den += ref * ref;
  }
  EXPECT_LT(std::sqrt(num / den), 0.10);
}

TEST(MonotoneCubic, InterpolatesAndStaysMonotone) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5}, y{0, 0.1, 0.1, 2, 2.1, 5};
  const descriptors::MonotoneCubic m(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(m(x[i]), y[i]);
  double prev = -1;
  for (int k = 0; k <= 500; ++k) {
    const double v = m(5.0 * k / 500.0);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_NEAR(m(1.5), 0.1, 1e-15);  // flat segment stays flat
}
