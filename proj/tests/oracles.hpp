#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is deliberately naive.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fractex/classify.hpp"
#include "fractex/fda.hpp"
#include "fractex/imageio.hpp"
#include "fractex/surface_edt.hpp"

namespace oracle {

/// Squared distance from every voxel to its nearest surface voxel, by
/// scanning all surface voxels.
std::vector<std::uint32_t> brute_force_sqdist(const fractex::surface::SurfaceVolume& vol);

/// Counts voxels with d^2 <= s for every squared radius s.
std::vector<std::uint64_t> brute_force_volumes(std::span<const std::uint32_t> sqdist,
                                               std::span<const std::uint32_t> squared_radii);

/// Squared radii by triple loop over offsets.
std::vector<std::uint32_t> enumerate_squared_radii(int r_max);

fractex::imageio::GrayImage random_image(std::mt19937_64& rng, int w, int h, int lo = 0, int hi = 255);

/// Recursive Cox-de Boor value of basis function i of order p. The last
/// non-empty span is closed on the right.
double cox_de_boor(std::span<const double> knots, int i, int p, double t);

/// Clamped basis over a random domain with random strictly increasing
/// interior knots.
fractex::fda::BasisSpec random_basis(std::mt19937_64& rng, int order, int count);

/// Least squares by assembling the dense design matrix with cox_de_boor
/// and solving the normal equations with an LU factorization.
Eigen::VectorXd dense_least_squares(std::span<const double> knots, int order, int count,
                                    std::span<const double> t, std::span<const double> y);

/// Gram matrix by dense midpoint-free quadrature: composite Simpson on
/// every knot span with `per_span` panels.
Eigen::MatrixXd dense_gram(std::span<const double> knots, int order, int count, int per_span = 64);

/// Per-class diagonal Gaussian log posterior evaluated term by term.
Eigen::VectorXd bayes_log_posterior(const fractex::classify::FeatureTable& train,
                                    const Eigen::VectorXd& x);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
