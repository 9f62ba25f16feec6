#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fractex/imageio.hpp"

// Grayscale image -> voxel surface -> exact squared Euclidean distance
// field -> cumulative dilation volumes over the discrete radius set.
namespace fractex::surface {

using Dims = std::array<std::size_t, 3>;  // (X, Y, Z)

struct Voxel {
  std::int64_t x, y, z;
  bool operator==(const Voxel&) const = default;
};

struct EmbedOptions {
  // Heights are Img + height_shift, so the default maps 0..255 onto 1..256.
  int height_shift = 1;
};

/// One surface voxel per image column, surrounded by `pad` empty voxels on
/// every face.
class SurfaceVolume {
 public:
  SurfaceVolume(Dims dims, std::size_t pad, std::vector<Voxel> surface);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t pad() const noexcept { return pad_; }
  std::span<const Voxel> surface() const noexcept { return surface_; }
  std::size_t voxel_count() const noexcept { return dims_[0] * dims_[1] * dims_[2]; }

 private:
  Dims dims_;
  std::size_t pad_;
  std::vector<Voxel> surface_;
};

/// Surface voxel at (x + pad, y + pad, Img(x,y) + shift + pad) with
/// pad = ceil(r_max); dims = (W + 2 pad, H + 2 pad, 256 + shift + 2 pad).
SurfaceVolume embed_surface(const imageio::GrayImage& img, double r_max,
                            const EmbedOptions& opts = {});

/// Exact squared distances, stored x-fastest: index = x + X*(y + Y*z).
class DistanceField {
 public:
  DistanceField(Dims dims, std::size_t pad, std::vector<std::uint32_t> values);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t pad() const noexcept { return pad_; }
  std::span<const std::uint32_t> values() const noexcept { return values_; }

  std::uint32_t at(std::size_t x, std::size_t y, std::size_t z) const {
    return values_[x + dims_[0] * (y + dims_[1] * z)];
  }

 private:
  Dims dims_;
  std::size_t pad_;
  std::vector<std::uint32_t> values_;
};

/// Separable lower-envelope EDT (one pass per axis, linear in voxel count).
DistanceField exact_edt(const SurfaceVolume& vol);

/// Distinct squared radii s = i^2 + j^2 + k^2 <= r_max^2, ascending from 0.
class RadiusSet {
 public:
  explicit RadiusSet(double r_max);

  double r_max() const noexcept { return r_max_; }
  std::span<const std::uint32_t> squared() const noexcept { return squared_; }
  std::size_t size() const noexcept { return squared_.size(); }
  double radius(std::size_t k) const;
  std::vector<double> radii() const;

 private:
  double r_max_;
  std::vector<std::uint32_t> squared_;
};

RadiusSet radius_set(double r_max);

/// True when n is a sum of three integer squares (Legendre: n != 4^a(8b+7)).
bool is_sum_of_three_squares(std::uint64_t n);

struct VolumeCurve {
  std::vector<std::uint32_t> squared_radii;
  std::vector<std::uint64_t> volumes;  // V(r_k): voxels with d^2 <= r_k^2

  double radius(std::size_t k) const;
  std::size_t size() const noexcept { return volumes.size(); }
  bool operator==(const VolumeCurve&) const = default;
};

/// Histogram of squared distances, prefix-summed at each radius.
VolumeCurve dilation_volumes(const DistanceField& field, const RadiusSet& rs);

/// embed -> EDT -> volumes in one call.
VolumeCurve volume_curve(const imageio::GrayImage& img, double r_max,
                         const EmbedOptions& opts = {});

/// Debug dump: `r,log_r,V,log_V`, log_r empty at r = 0.
std::string volume_curve_csv(const VolumeCurve& curve);

}  // namespace fractex::surface
