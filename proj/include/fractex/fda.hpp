#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fractex/descriptors.hpp"

// Functional representation of descriptor curves: least-squares B-spline
// coefficients (alpha) and their Gram-Cholesky transform (beta).
namespace fractex::fda {

enum class KnotPlacement {
  Uniform,   // interior knots evenly spaced over the domain
  Adaptive,  // interior knots follow the sample density
};

/// Clamped B-spline basis: `order` p (degree p - 1), `count` q functions,
/// q + p knots with each end repeated p times.
class BasisSpec {
 public:
  static BasisSpec from_knots(int order, int count, std::vector<double> knots);

  int order() const noexcept { return order_; }
  int count() const noexcept { return count_; }
  int degree() const noexcept { return order_ - 1; }
  double t_min() const noexcept { return knots_.front(); }
  double t_max() const noexcept { return knots_.back(); }
  std::span<const double> knots() const noexcept { return knots_; }

  /// Knot-span index i with knots[i] <= t < knots[i+1]; t_max maps to the
  /// last non-empty span.
  std::size_t span_index(double t) const;

  bool operator==(const BasisSpec&) const = default;

 private:
  BasisSpec(int order, int count, std::vector<double> knots)
      : order_(order), count_(count), knots_(std::move(knots)) {}

  int order_;
  int count_;
  std::vector<double> knots_;
};

/// Clamped uniform knots over `domain`.
BasisSpec make_basis(int order, int count, std::pair<double, double> domain);

/// Clamped knots over [samples.front(), samples.back()]. Interior knots
/// average an evenly spaced subsequence of the (strictly increasing)
/// samples, which keeps the least-squares fit full rank for any
/// count <= samples.size().
BasisSpec make_adaptive_basis(int order, int count, std::span<const double> samples);

BasisSpec make_basis_for_samples(int order, int count, std::span<const double> samples,
                                 KnotPlacement placement);

/// The (at most) p non-zero basis values at t, for functions first..first+p-1.
struct LocalBasis {
  std::size_t first;
  std::vector<double> values;
};

LocalBasis evaluate_nonzero(const BasisSpec& basis, double t);

/// All q basis values at t.
std::vector<double> evaluate_basis(const BasisSpec& basis, double t);

struct FunctionalCoefficients {
  BasisSpec basis;
  Eigen::VectorXd alpha;
  std::optional<Eigen::VectorXd> beta;
  double fit_residual = 0.0;  // RMS over the samples
};

FunctionalCoefficients fit_alpha(const BasisSpec& basis, std::span<const double> t,
                                 std::span<const double> y);
FunctionalCoefficients fit_alpha(const BasisSpec& basis, const descriptors::DescriptorCurve& desc);

/// Lower-triangular Cholesky factor L with A = L L^T. Fails with
/// ConditioningError when a pivot drops below 1e-12 of its diagonal entry.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a);

struct GramFactor {
  BasisSpec basis;
  Eigen::MatrixXd phi;  // phi(k,l) = integral of phi_k * phi_l over the domain
  Eigen::MatrixXd s;    // lower triangular, phi = s * s^T
};

GramFactor gram_factor(const BasisSpec& basis);

enum class BetaConvention {
  S,   // beta = S alpha
  ST,  // beta = S^T alpha, so |beta|^2 is the L2 norm^2 of the fitted function
};

FunctionalCoefficients transform_beta(const FunctionalCoefficients& coef, const GramFactor& gf,
                                      BetaConvention convention = BetaConvention::S);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

}  // namespace fractex::fda
