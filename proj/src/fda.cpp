#include "fractex/fda.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fractex/csv.hpp"
#include "fractex/error.hpp"

namespace fractex::fda {

namespace {

constexpr double kRelativePivot = 1e-12;

void check_shape(int order, int count) {
  if (order < 1) throw DomainError("basis order must be >= 1");
  if (count < order) {
    throw DomainError("basis count " + std::to_string(count) + " is smaller than order " +
                      std::to_string(order));
  }
}

std::vector<double> clamped_knots(int order, double lo, double hi, const std::vector<double>& interior) {
  std::vector<double> k;
  k.reserve(interior.size() + 2 * static_cast<std::size_t>(order));
  k.insert(k.end(), static_cast<std::size_t>(order), lo);
  k.insert(k.end(), interior.begin(), interior.end());
  k.insert(k.end(), static_cast<std::size_t>(order), hi);
  return k;
}

std::string span_text(const BasisSpec& b, std::size_t i) {
  return "[" + csv::format_double(b.knots()[i]) + ", " + csv::format_double(b.knots()[i + 1]) + "]";
}

}  // namespace

BasisSpec BasisSpec::from_knots(int order, int count, std::vector<double> knots) {
  check_shape(order, count);
  const auto p = static_cast<std::size_t>(order);
  const auto q = static_cast<std::size_t>(count);
  if (knots.size() != p + q) throw DomainError("knot vector length must be count + order");
  if (!(knots.front() < knots.back()) || !std::isfinite(knots.front()) || !std::isfinite(knots.back())) {
    throw DomainError("basis domain is degenerate");
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (knots[i] != knots.front() || knots[q + i] != knots.back()) {
      throw DomainError("knot vector is not clamped with multiplicity = order");
    }
  }
  for (std::size_t i = p - 1; i < q; ++i) {
    if (!(knots[i] < knots[i + 1])) throw DomainError("interior knots must be strictly increasing");
  }
  return BasisSpec(order, count, std::move(knots));
}

std::size_t BasisSpec::span_index(double t) const {
  const auto last = static_cast<std::size_t>(count_) - 1;
  if (t >= knots_[last + 1]) return last;
  const auto first = static_cast<std::size_t>(order_) - 1;
  // Largest i in [first, last] with knots[i] <= t.
  auto it = std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(first),
                             knots_.begin() + static_cast<std::ptrdiff_t>(last) + 1, t);
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

BasisSpec make_basis(int order, int count, std::pair<double, double> domain) {
  check_shape(order, count);
  const auto [lo, hi] = domain;
  if (!(lo < hi)) throw DomainError("basis domain is degenerate");
  const int inner = count - order;
  std::vector<double> interior(static_cast<std::size_t>(inner));
  for (int i = 1; i <= inner; ++i) {
    interior[static_cast<std::size_t>(i - 1)] = lo + (hi - lo) * i / static_cast<double>(inner + 1);
  }
  return BasisSpec::from_knots(order, count, clamped_knots(order, lo, hi, interior));
}

BasisSpec make_adaptive_basis(int order, int count, std::span<const double> samples) {
  check_shape(order, count);
  const std::size_t m = samples.size();
  if (m < static_cast<std::size_t>(count)) {
    throw UnderdeterminedError(std::to_string(m) + " samples cannot determine " +
                               std::to_string(count) + " basis coefficients");
  }
  if (std::adjacent_find(samples.begin(), samples.end(), std::greater_equal<>()) != samples.end() || m < 2) {
    throw DomainError("adaptive knots need strictly increasing samples");
  }
  // Evenly spaced subsequence of `count` samples, ends included.
  std::vector<double> y(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::size_t k = count == 1 ? 0
                                     : static_cast<std::size_t>(std::llround(static_cast<double>(i) * static_cast<double>(m - 1) /
                                                                             static_cast<double>(count - 1)));
    y[static_cast<std::size_t>(i)] = samples[k];
  }
  // Knot averaging over the subsequence: the square collocation matrix on
  // y satisfies Schoenberg-Whitney, so the least-squares system has full
  // rank. Order-1 breaks sit halfway between consecutive picks.
  const int inner = count - order;
  std::vector<double> interior(static_cast<std::size_t>(inner));
  for (int j = 1; j <= inner; ++j) {
    double v = 0.0;
    if (order == 1) {
      v = 0.5 * (y[static_cast<std::size_t>(j - 1)] + y[static_cast<std::size_t>(j)]);
    } else {
      for (int k = j; k < j + order - 1; ++k) v += y[static_cast<std::size_t>(k)];
      v /= order - 1;
    }
    interior[static_cast<std::size_t>(j - 1)] = v;
  }
  return BasisSpec::from_knots(order, count, clamped_knots(order, samples.front(), samples.back(), interior));
}

BasisSpec make_basis_for_samples(int order, int count, std::span<const double> samples,
                                 KnotPlacement placement) {
  if (samples.empty()) throw DomainError("no samples");
  if (placement == KnotPlacement::Adaptive) return make_adaptive_basis(order, count, samples);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return make_basis(order, count, {*lo, *hi});
}

LocalBasis evaluate_nonzero(const BasisSpec& basis, double t) {
  if (!(t >= basis.t_min() && t <= basis.t_max())) {
    throw DomainError("t = " + csv::format_double(t) + " outside basis domain");
  }
  const auto deg = static_cast<std::size_t>(basis.degree());
  const auto k = basis.knots();
  const std::size_t i = basis.span_index(t);

  // Cox-de Boor recursion, triangular form: degree j values from degree j-1.
  std::vector<double> n(deg + 1, 0.0), left(deg + 1), right(deg + 1);
  n[0] = 1.0;
  for (std::size_t j = 1; j <= deg; ++j) {
    left[j] = t - k[i + 1 - j];
    right[j] = k[i + j] - t;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double tmp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    n[j] = saved;
  }
  return {i - deg, std::move(n)};
}

std::vector<double> evaluate_basis(const BasisSpec& basis, double t) {
  const auto local = evaluate_nonzero(basis, t);
  std::vector<double> out(static_cast<std::size_t>(basis.count()), 0.0);
  std::copy(local.values.begin(), local.values.end(), out.begin() + static_cast<std::ptrdiff_t>(local.first));
  return out;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DomainError("Cholesky needs a square matrix");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > kRelativePivot * std::abs(a(j, j))) || !(pivot > 0)) {
      throw ConditioningError("matrix is not numerically positive definite (pivot " +
                              std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

namespace {

Eigen::VectorXd cholesky_solve(const Eigen::MatrixXd& l, Eigen::VectorXd b) {
  const Eigen::Index n = l.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < i; ++k) b(i) -= l(i, k) * b(k);
    b(i) /= l(i, i);
  }
  for (Eigen::Index i = n; i-- > 0;) {
    for (Eigen::Index k = i + 1; k < n; ++k) b(i) -= l(k, i) * b(k);
    b(i) /= l(i, i);
  }
  return b;
}

std::string empty_spans(const BasisSpec& basis, std::span<const double> t) {
  std::vector<bool> hit(basis.knots().size(), false);
  for (double x : t) hit[basis.span_index(x)] = true;
  std::ostringstream os;
  bool any = false;
  for (std::size_t i = static_cast<std::size_t>(basis.degree());
       i < static_cast<std::size_t>(basis.count()); ++i) {
    if (!hit[i]) {
      os << (any ? ", " : "") << "span " << i << " " << span_text(basis, i);
      any = true;
    }
  }
  return any ? os.str() : std::string();
}

}  // namespace

FunctionalCoefficients fit_alpha(const BasisSpec& basis, std::span<const double> t,
                                 std::span<const double> y) {
  if (t.size() != y.size()) throw DomainError("sample abscissae and values differ in length");
  const auto q = static_cast<Eigen::Index>(basis.count());
  const auto m = static_cast<Eigen::Index>(t.size());
  if (m < q) {
    throw UnderdeterminedError(std::to_string(m) + " samples cannot determine " +
                               std::to_string(q) + " basis coefficients");
  }

  Eigen::MatrixXd colloc = Eigen::MatrixXd::Zero(m, q);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto local = evaluate_nonzero(basis, t[static_cast<std::size_t>(r)]);
    for (std::size_t c = 0; c < local.values.size(); ++c) {
      colloc(r, static_cast<Eigen::Index>(local.first + c)) = local.values[c];
    }
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), m);

  Eigen::VectorXd alpha;
  try {
    const Eigen::MatrixXd normal = colloc.transpose() * colloc;
    alpha = cholesky_solve(cholesky_lower(normal), colloc.transpose() * yv);
  } catch (const ConditioningError&) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(colloc);
    qr.setThreshold(kRelativePivot);
    if (qr.rank() < q) {
      const auto spans = empty_spans(basis, t);
      throw ConditioningError("collocation matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(q) + ")" +
                              (spans.empty() ? std::string() : "; no samples in " + spans));
    }
    alpha = qr.solve(yv);
  }
  const double rms = std::sqrt((colloc * alpha - yv).squaredNorm() / static_cast<double>(m));
  return {basis, std::move(alpha), std::nullopt, rms};
}

FunctionalCoefficients fit_alpha(const BasisSpec& basis, const descriptors::DescriptorCurve& desc) {
  return fit_alpha(basis, desc.t, desc.u);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature needs at least one node");
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    x[lo] = -z;
    x[hi] = z;
    w[lo] = w[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
  return {x, w};
}

GramFactor gram_factor(const BasisSpec& basis) {
  const auto q = static_cast<Eigen::Index>(basis.count());
  const auto [nodes, weights] = gauss_legendre(basis.order());
  const auto k = basis.knots();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = static_cast<std::size_t>(basis.degree()); i < static_cast<std::size_t>(q); ++i) {
    const double a = k[i], b = k[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t g = 0; g < nodes.size(); ++g) {
      const auto local = evaluate_nonzero(basis, mid + half * nodes[g]);
      const double w = half * weights[g];
      for (std::size_t r = 0; r < local.values.size(); ++r) {
        for (std::size_t c = 0; c < local.values.size(); ++c) {
          phi(static_cast<Eigen::Index>(local.first + r), static_cast<Eigen::Index>(local.first + c)) +=
              w * local.values[r] * local.values[c];
        }
      }
    }
  }
  Eigen::MatrixXd s;
  try {
    s = cholesky_lower(phi);
  } catch (const ConditioningError& e) {
    throw ConditioningError(std::string("Gram matrix factorization failed: ") + e.what() +
                            "; check for duplicate interior knots or a degenerate domain");
  }
  return {basis, std::move(phi), std::move(s)};
}

FunctionalCoefficients transform_beta(const FunctionalCoefficients& coef, const GramFactor& gf,
                                      BetaConvention convention) {
  if (!(coef.basis == gf.basis)) throw DomainError("Gram factor was built for a different basis");
  FunctionalCoefficients out = coef;
  out.beta = convention == BetaConvention::S ? Eigen::VectorXd(gf.s * coef.alpha)
                                             : Eigen::VectorXd(gf.s.transpose() * coef.alpha);
  return out;
}

}  // namespace fractex::fda
