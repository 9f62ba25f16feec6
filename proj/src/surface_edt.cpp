#include "fractex/surface_edt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fractex/csv.hpp"
#include "fractex/error.hpp"

namespace fractex::surface {

namespace {

constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
constexpr int kGrayLevels = 256;

std::size_t padding_for(double r_max) {
  if (!(r_max >= 1.0) || !std::isfinite(r_max)) {
    throw DomainError("r_max must be a finite value >= 1");
  }
  return static_cast<std::size_t>(std::ceil(r_max));
}

// Largest integer s with s <= r_max^2, robust to r_max^2 landing a hair
// below an integer (e.g. sqrt(2)^2).
std::uint32_t max_squared(double r_max) {
  const double sq = r_max * r_max;
  auto s = static_cast<std::uint64_t>(std::floor(sq));
  if (static_cast<double>(s + 1) - sq <= 1e-9 * std::max(1.0, sq)) ++s;
  if (s > std::numeric_limits<std::uint32_t>::max() / 2) throw DomainError("r_max too large");
  return static_cast<std::uint32_t>(s);
}

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

// Lower envelope of parabolas (x - i)^2 + g(i) over the finite samples of
// one line, evaluated back in place. Integer arithmetic throughout.
class LinePass {
 public:
  explicit LinePass(std::size_t max_len) : g_(max_len), site_(max_len), start_(max_len) {}

  void run(std::uint32_t* data, std::size_t n, std::size_t stride) {
    for (std::size_t i = 0; i < n; ++i) g_[i] = data[i * stride];

    std::ptrdiff_t q = -1;
    for (std::size_t u = 0; u < n; ++u) {
      if (g_[u] == kInf) continue;
      const auto uu = static_cast<std::int64_t>(u);
      while (q >= 0 && eval(start_[q], site_[q]) > eval(start_[q], uu)) --q;
      if (q < 0) {
        q = 0;
        site_[0] = uu;
        start_[0] = 0;
      } else {
        const std::int64_t w = 1 + separator(site_[q], uu);
        if (w < static_cast<std::int64_t>(n)) {
          ++q;
          site_[q] = uu;
          start_[q] = std::max<std::int64_t>(w, 0);
        }
      }
    }
    if (q < 0) return;  // no finite sample on this line

    for (std::size_t u = n; u-- > 0;) {
      const auto uu = static_cast<std::int64_t>(u);
      const std::int64_t v = eval(uu, site_[q]);
      data[u * stride] = static_cast<std::uint32_t>(v);
      if (uu == start_[q]) --q;
    }
  }

 private:
  std::int64_t eval(std::int64_t x, std::int64_t i) const {
    return (x - i) * (x - i) + static_cast<std::int64_t>(g_[static_cast<std::size_t>(i)]);
  }

  // Last x at which parabola i is no worse than parabola u (i < u).
  std::int64_t separator(std::int64_t i, std::int64_t u) const {
    const std::int64_t num = u * u - i * i + static_cast<std::int64_t>(g_[static_cast<std::size_t>(u)]) -
                             static_cast<std::int64_t>(g_[static_cast<std::size_t>(i)]);
    return floor_div(num, 2 * (u - i));
  }

  std::vector<std::uint32_t> g_;
  std::vector<std::int64_t> site_;
  std::vector<std::int64_t> start_;
};

}  // namespace

SurfaceVolume::SurfaceVolume(Dims dims, std::size_t pad, std::vector<Voxel> surface)
    : dims_(dims), pad_(pad), surface_(std::move(surface)) {
  for (const auto& v : surface_) {
    if (v.x < 0 || v.y < 0 || v.z < 0 || static_cast<std::size_t>(v.x) >= dims_[0] ||
        static_cast<std::size_t>(v.y) >= dims_[1] || static_cast<std::size_t>(v.z) >= dims_[2]) {
      throw ValidationError("surface voxel outside volume");
    }
  }
}

SurfaceVolume embed_surface(const imageio::GrayImage& img, double r_max, const EmbedOptions& opts) {
  if (opts.height_shift < 0) throw DomainError("height shift must be >= 0");
  const std::size_t pad = padding_for(r_max);
  const auto w = static_cast<std::size_t>(img.width());
  const auto h = static_cast<std::size_t>(img.height());
  const Dims dims{w + 2 * pad, h + 2 * pad,
                  static_cast<std::size_t>(kGrayLevels + opts.height_shift) + 2 * pad};
  const auto sq = [](std::size_t d) { return static_cast<std::uint64_t>(d) * d; };
  if (sq(dims[0]) + sq(dims[1]) + sq(dims[2]) >= kInf) throw DomainError("volume too large");

  std::vector<Voxel> surface;
  surface.reserve(w * h);
  const auto p = static_cast<std::int64_t>(pad);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      surface.push_back({x + p, y + p, static_cast<std::int64_t>(img.at(x, y)) + opts.height_shift + p});
    }
  }
  return SurfaceVolume(dims, pad, std::move(surface));
}

DistanceField::DistanceField(Dims dims, std::size_t pad, std::vector<std::uint32_t> values)
    : dims_(dims), pad_(pad), values_(std::move(values)) {
  if (values_.size() != dims_[0] * dims_[1] * dims_[2]) {
    throw ValidationError("distance field size does not match dims");
  }
}

DistanceField exact_edt(const SurfaceVolume& vol) {
  if (vol.surface().empty()) throw DomainError("EDT requires at least one surface voxel");
  const auto [nx, ny, nz] = vol.dims();
  std::vector<std::uint32_t> d(vol.voxel_count(), kInf);
  for (const auto& v : vol.surface()) {
    d[static_cast<std::size_t>(v.x) + nx * (static_cast<std::size_t>(v.y) + ny * static_cast<std::size_t>(v.z))] = 0;
  }

  LinePass pass(std::max({nx, ny, nz}));
  const std::size_t plane = nx * ny;
  // z first: the surface is a height field, so every image column holds
  // exactly one site and padding columns stay empty.
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) pass.run(d.data() + x + nx * y, nz, plane);
  }
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) pass.run(d.data() + nx * (y + ny * z), nx, 1);
  }
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t x = 0; x < nx; ++x) pass.run(d.data() + x + plane * z, ny, nx);
  }
  return DistanceField(vol.dims(), vol.pad(), std::move(d));
}

bool is_sum_of_three_squares(std::uint64_t n) {
  if (n == 0) return true;
  while (n % 4 == 0) n /= 4;
  return n % 8 != 7;
}

RadiusSet::RadiusSet(double r_max) : r_max_(r_max) {
  padding_for(r_max);
  const std::uint32_t smax = max_squared(r_max);
  for (std::uint32_t s = 0; s <= smax; ++s) {
    if (is_sum_of_three_squares(s)) squared_.push_back(s);
  }
}

double RadiusSet::radius(std::size_t k) const { return std::sqrt(static_cast<double>(squared_.at(k))); }

std::vector<double> RadiusSet::radii() const {
  std::vector<double> r(squared_.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = radius(k);
  return r;
}

RadiusSet radius_set(double r_max) { return RadiusSet(r_max); }

double VolumeCurve::radius(std::size_t k) const {
  return std::sqrt(static_cast<double>(squared_radii.at(k)));
}

VolumeCurve dilation_volumes(const DistanceField& field, const RadiusSet& rs) {
  if (static_cast<double>(field.pad()) < rs.r_max()) {
    throw DomainError("radius set r_max " + csv::format_double(rs.r_max()) +
                      " exceeds field padding " + std::to_string(field.pad()) +
                      "; volumes would be clipped");
  }
  const std::uint32_t smax = rs.squared().back();
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(smax) + 1, 0);
  for (const std::uint32_t v : field.values()) {
    if (v <= smax) ++hist[v];
  }
  VolumeCurve curve;
  curve.squared_radii.assign(rs.squared().begin(), rs.squared().end());
  curve.volumes.reserve(rs.size());
  std::uint64_t acc = 0;
  std::size_t next = 0;
  for (std::uint32_t s = 0; s <= smax; ++s) {
    acc += hist[s];
    if (s == rs.squared()[next]) {
      curve.volumes.push_back(acc);
      ++next;
    }
  }
  return curve;
}

VolumeCurve volume_curve(const imageio::GrayImage& img, double r_max, const EmbedOptions& opts) {
  return dilation_volumes(exact_edt(embed_surface(img, r_max, opts)), radius_set(r_max));
}

std::string volume_curve_csv(const VolumeCurve& curve) {
  std::string out = "r,log_r,V,log_V\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double r = curve.radius(k);
    out += csv::format_double(r) + ",";
    if (curve.squared_radii[k] > 0) out += csv::format_double(std::log(r));
    out += "," + std::to_string(curve.volumes[k]) + "," +
           csv::format_double(std::log(static_cast<double>(curve.volumes[k]))) + "\n";
  }
  return out;
}

}  // namespace fractex::surface
