#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace fractex::classify {

enum class FeatureKind { Original, Alpha, Beta, Smoothed, Fourier };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

/// n x d feature rows with class indices into `class_names`.
struct FeatureTable {
  Eigen::MatrixXd rows;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  FeatureKind kind = FeatureKind::Original;
  std::vector<std::string> ids;  // optional row identifiers (image paths)

  Eigen::Index n() const noexcept { return rows.rows(); }
  Eigen::Index d() const noexcept { return rows.cols(); }
  int num_classes() const noexcept { return static_cast<int>(class_names.size()); }

  /// Throws ValidationError on non-finite entries, label/row mismatch or a
  /// class with fewer than two rows.
  void validate() const;

  FeatureTable subset(std::span<const std::size_t> indices) const;
};

using Predictions = std::vector<int>;

/// Euclidean k-NN vote. Ties go to the smallest mean distance among tied
/// classes, then to the smaller class index.
Predictions knn_classify(const FeatureTable& train, const Eigen::MatrixXd& test, int k);

/// Per-class diagonal Gaussian with empirical priors.
class GaussianBayes {
 public:
  explicit GaussianBayes(const FeatureTable& train);

  /// Unnormalized log posterior per class (-inf for classes absent from
  /// training).
  Eigen::VectorXd log_posterior(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;

  std::span<const Eigen::Index> kept_features() const noexcept { return kept_; }
  const Eigen::MatrixXd& means() const noexcept { return mean_; }
  const Eigen::MatrixXd& variances() const noexcept { return var_; }

 private:
  std::vector<Eigen::Index> kept_;
  Eigen::MatrixXd mean_;  // classes x kept
  Eigen::MatrixXd var_;
  Eigen::VectorXd log_prior_;
};

Predictions bayes_classify(const FeatureTable& train, const Eigen::MatrixXd& test);

/// Linear discriminant with shrunk pooled covariance
/// (1 - lambda) S_w + lambda diag(S_w). Falls back to a principal-component
/// projection (99.9% variance) when n - c < d.
class LdaModel {
 public:
  LdaModel(const FeatureTable& train, double shrinkage);

  /// g_c(x) = mu_c^T S^-1 x - mu_c^T S^-1 mu_c / 2 + ln prior_c.
  Eigen::VectorXd discriminants(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;

  bool used_pca() const noexcept { return used_pca_; }
  Eigen::Index components() const noexcept { return weights_.rows(); }
  /// Maps a raw feature row to the space the discriminants live in.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  const Eigen::MatrixXd& pooled_covariance() const noexcept { return cov_; }
  const Eigen::MatrixXd& class_means() const noexcept { return means_; }

 private:
  std::vector<Eigen::Index> kept_;
  bool used_pca_ = false;
  Eigen::VectorXd center_;
  Eigen::MatrixXd basis_;    // kept x components (identity when no PCA)
  Eigen::MatrixXd means_;    // classes x components
  Eigen::MatrixXd cov_;      // regularized pooled covariance
  Eigen::MatrixXd weights_;  // components x classes: S^-1 mu_c
  Eigen::VectorXd bias_;
  std::vector<bool> present_;
};

Predictions lda_classify(const FeatureTable& train, const Eigen::MatrixXd& test, double shrinkage);

enum class ClassifierKind { Knn, Bayes, Lda };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(const std::string& name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::Knn;
  int k = 1;
  double shrinkage = 1e-4;
  bool standardize = false;  // z-score fitted on the training fold only
};

Predictions predict(const FeatureTable& train, const Eigen::MatrixXd& test, const ClassifierConfig& cfg);

struct FoldResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvaluationReport {
  ClassifierConfig config;
  FeatureKind feature_kind = FeatureKind::Original;
  Eigen::Index n_features = 0;
  std::uint64_t seed = 0;
  int folds_requested = 0;
  std::vector<FoldResult> folds;
  double mean = 0.0;  // percent
  double std = 0.0;   // sample standard deviation across folds, percent
  std::vector<std::string> class_names;
  Eigen::MatrixXi confusion;  // true x predicted counts
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  /// `<classifier> <kind> d=<n> acc=<mean>±<std>`
  std::string summary() const;
};

/// Uniform integer in [0, n) from a 64-bit engine, independent of the
/// standard library's distribution implementation.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Per-class seeded shuffle, dealt round-robin across folds with the deal
/// position carried between classes.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int num_classes,
                                                       int folds, std::uint64_t seed);

EvaluationReport cross_validate(const FeatureTable& table, const ClassifierConfig& cfg, int folds,
                                std::uint64_t seed, unsigned threads = 1);

}  // namespace fractex::classify
