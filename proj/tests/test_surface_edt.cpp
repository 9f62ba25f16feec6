#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fractex/error.hpp"
#include "fractex/surface_edt.hpp"
#include "oracles.hpp"

using namespace fractex;
using imageio::GrayImage;
using surface::SurfaceVolume;
using surface::Voxel;

TEST(Embed, SinglePixel) {
  const auto vol = surface::embed_surface(GrayImage(1, 1, std::uint8_t{5}), 2.0);
  EXPECT_EQ(vol.pad(), 2u);
  ASSERT_EQ(vol.surface().size(), 1u);
  EXPECT_EQ(vol.surface()[0], (Voxel{2, 2, 8}));
  EXPECT_EQ(vol.dims()[0], 5u);
  EXPECT_EQ(vol.dims()[1], 5u);
  EXPECT_GE(vol.dims()[2], 8u + 2u + 1u);
}

TEST(Embed, ConstantImageIsOnePlane) {
  const auto vol = surface::embed_surface(GrayImage(6, 4, std::uint8_t{77}), 3.0);
  for (const auto& v : vol.surface()) EXPECT_EQ(v.z, 77 + 1 + 3);
}

TEST(Embed, ExtremeHeights) {
  const GrayImage img(2, 2, std::vector<std::uint8_t>{0, 255, 0, 255});
  const auto vol = surface::embed_surface(img, 1.0);
  std::vector<std::int64_t> heights;
  for (const auto& v : vol.surface()) heights.push_back(v.z - static_cast<std::int64_t>(vol.pad()));
  std::sort(heights.begin(), heights.end());
  EXPECT_EQ(heights, (std::vector<std::int64_t>{1, 1, 256, 256}));
}

TEST(Embed, ZeroShiftAndFractionalRadius) {
  const auto vol = surface::embed_surface(GrayImage(1, 1, std::uint8_t{0}), 2.5, {0});
  EXPECT_EQ(vol.pad(), 3u);
  EXPECT_EQ(vol.surface()[0], (Voxel{3, 3, 3}));
}

TEST(Edt, UnitAndDiagonalOffsets) {
  const auto vol = surface::embed_surface(GrayImage(1, 1, std::uint8_t{5}), 2.0);
  const auto f = surface::exact_edt(vol);
  EXPECT_EQ(f.at(2, 2, 8), 0u);
  EXPECT_EQ(f.at(3, 2, 8), 1u);
  EXPECT_EQ(f.at(3, 3, 9), 3u);
  EXPECT_EQ(f.at(0, 0, 8), 8u);
  EXPECT_EQ(f.at(2, 2, 0), 64u);
}

TEST(Edt, MatchesBruteForceOnRandomImages) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 5), h = 1 + static_cast<int>(rng() % 5);
    const GrayImage img = oracle::random_image(rng, w, h, 0, trial % 2 ? 255 : 6);
    const auto vol = surface::embed_surface(img, 1.0 + static_cast<double>(rng() % 3));
    const auto f = surface::exact_edt(vol);
    const auto ref = oracle::brute_force_sqdist(vol);
    ASSERT_TRUE(std::equal(ref.begin(), ref.end(), f.values().begin(), f.values().end())) << "trial " << trial;
  }
}

TEST(Edt, ArbitraryVoxelSets) {
  // Not a heightfield: several voxels per column and isolated points.
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const surface::Dims dims{1 + rng() % 9, 1 + rng() % 9, 1 + rng() % 9};
    std::vector<Voxel> pts;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      pts.push_back({static_cast<std::int64_t>(rng() % dims[0]), static_cast<std::int64_t>(rng() % dims[1]),
                     static_cast<std::int64_t>(rng() % dims[2])});
    }
    const SurfaceVolume vol(dims, 0, pts);
    const auto f = surface::exact_edt(vol);
    const auto ref = oracle::brute_force_sqdist(vol);
    ASSERT_TRUE(std::equal(ref.begin(), ref.end(), f.values().begin(), f.values().end())) << "trial " << trial;
  }
}

TEST(RadiusSet, SmallCases) {
  const auto rs = surface::radius_set(2);
  EXPECT_EQ(std::vector<std::uint32_t>(rs.squared().begin(), rs.squared().end()),
            (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
  const auto r1 = surface::radius_set(1);
  EXPECT_EQ(r1.size(), 2u);
  const auto r2 = surface::radius_set(2).radii();
  EXPECT_DOUBLE_EQ(r2[1], 1.0);
  EXPECT_DOUBLE_EQ(r2[2], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r2[3], std::sqrt(3.0));
}

TEST(RadiusSet, TenGives86) { EXPECT_EQ(surface::radius_set(10).size(), 86u); }

TEST(RadiusSet, MatchesTripleLoop) {
  for (int r = 1; r <= 14; ++r) {
    const auto rs = surface::radius_set(r);
    const auto ref = oracle::enumerate_squared_radii(r);
    EXPECT_TRUE(std::equal(ref.begin(), ref.end(), rs.squared().begin(), rs.squared().end())) << r;
  }
}

TEST(RadiusSet, LegendreExclusions) {
  for (std::uint64_t n : {7u, 15u, 23u, 28u, 31u, 39u, 47u, 55u, 60u, 63u, 71u, 79u, 87u, 92u, 95u}) {
    EXPECT_FALSE(surface::is_sum_of_three_squares(n)) << n;
  }
  int excluded = 0;
  for (std::uint64_t n = 1; n <= 100; ++n) excluded += surface::is_sum_of_three_squares(n) ? 0 : 1;
  EXPECT_EQ(excluded, 15);
}

TEST(RadiusSet, BelowOneRejected) {
  EXPECT_THROW(surface::radius_set(-1), DomainError);
  EXPECT_THROW(surface::radius_set(0.5), DomainError);
  EXPECT_THROW(surface::radius_set(std::nan("")), DomainError);
}

TEST(Volumes, SingleVoxelBalls) {
  const auto c = surface::volume_curve(GrayImage(1, 1, std::uint8_t{100}), 2.0);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_EQ(c.volumes, (std::vector<std::uint64_t>{1, 7, 19, 27, 33}));
}

TEST(Volumes, V0IsPixelCount) {
  std::mt19937_64 rng(2);
  const auto c = surface::volume_curve(oracle::random_image(rng, 9, 4), 3.0);
  EXPECT_EQ(c.volumes.front(), 36u);
}

TEST(Volumes, MatchBruteForceCounts) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 15; ++trial) {
    const GrayImage img = oracle::random_image(rng, 1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5));
    const double r = 1.0 + static_cast<double>(rng() % 3);
    const auto vol = surface::embed_surface(img, r);
    const auto field = surface::exact_edt(vol);
    const auto rs = surface::radius_set(r);
    const auto got = surface::dilation_volumes(field, rs);
    EXPECT_EQ(got.volumes, oracle::brute_force_volumes(oracle::brute_force_sqdist(vol), rs.squared()));
  }
}

TEST(Volumes, MonotoneNondecreasing) {
  std::mt19937_64 rng(14);
  const auto c = surface::volume_curve(oracle::random_image(rng, 12, 12), 6.0);
  EXPECT_TRUE(std::is_sorted(c.volumes.begin(), c.volumes.end()));
}

TEST(Volumes, TranslationAndIntensityOffsetInvariant) {
  std::mt19937_64 rng(15);
  const GrayImage img = oracle::random_image(rng, 6, 5, 20, 200);
  std::vector<std::uint8_t> lifted(30);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      lifted[static_cast<std::size_t>(y * 6 + x)] = static_cast<std::uint8_t>(img.at(x, y) + 40);
    }
  }
  const auto base = surface::volume_curve(img, 4.0);
  EXPECT_EQ(surface::volume_curve(GrayImage(6, 5, lifted), 4.0), base);
  // transposing the image is a rigid motion of the surface
  std::vector<std::uint8_t> tp(30);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) tp[static_cast<std::size_t>(x * 5 + y)] = img.at(x, y);
  }
  EXPECT_EQ(surface::volume_curve(GrayImage(5, 6, tp), 4.0), base);
}

TEST(Volumes, ShiftDoesNotChangeCurve) {
  std::mt19937_64 rng(16);
  const GrayImage img = oracle::random_image(rng, 5, 5);
  EXPECT_EQ(surface::volume_curve(img, 3.0, {0}), surface::volume_curve(img, 3.0, {1}));
}

TEST(Volumes, RadiusBeyondPaddingIsDomainError) {
  const auto vol = surface::embed_surface(GrayImage(2, 2, std::uint8_t{3}), 2.0);
  const auto field = surface::exact_edt(vol);
  EXPECT_THROW(surface::dilation_volumes(field, surface::radius_set(3.0)), DomainError);
}

TEST(Volumes, CsvDump) {
  const auto c = surface::volume_curve(GrayImage(1, 1, std::uint8_t{0}), 1.0);
  const std::string csv = surface::volume_curve_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,log_r,V,log_V");
  EXPECT_NE(csv.find("\n0,,1,0\n"), std::string::npos) << csv;
}
