#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fractex/classify.hpp"
#include "fractex/descriptors.hpp"
#include "fractex/fda.hpp"
#include "fractex/imageio.hpp"

// Batch pipeline behind the command-line tool: descriptor extraction, FDA
// transform, evaluation and grid sweeps, all exchanging CSV files.
namespace fractex::pipeline {

enum class DescriptorKind { Vbfd, Smoothed, Fourier };
enum class CoefficientKind { Alpha, Beta };

std::string to_string(DescriptorKind k);
std::string to_string(CoefficientKind k);

/// Every tunable of a run. Text form is flat `key=value` lines; comments
/// start with '#'.
struct RunConfig {
  double r_max = 10.0;
  bool include_r0 = true;
  DescriptorKind descriptor_kind = DescriptorKind::Vbfd;
  double scale = 0.1;  // Gaussian scale for the derivative descriptors, in ln r units
  int height_shift = 1;
  int basis_order = 4;
  int basis_count = 60;
  CoefficientKind coefficient_kind = CoefficientKind::Alpha;
  fda::BetaConvention beta_convention = fda::BetaConvention::S;
  fda::KnotPlacement knots = fda::KnotPlacement::Adaptive;
  classify::ClassifierKind classifier = classify::ClassifierKind::Knn;
  int k = 1;
  double shrinkage = 1e-4;
  int folds = 10;
  std::uint64_t seed = 42;
  bool standardize = false;

  /// Sets one field from its text form; throws ValidationError on an
  /// unknown key or malformed/out-of-range value.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  classify::ClassifierConfig classifier_config() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parsed descriptor or coefficient CSV. The first comment line carries
/// `key=value` metadata; an optional `# t=` line carries one abscissa per
/// value column (`-inf` marks the r = 0 column).
struct FeatureFile {
  std::map<std::string, std::string> meta;
  std::vector<double> t;
  std::vector<std::string> columns;
  std::vector<std::string> paths;
  std::vector<std::string> labels;
  Eigen::MatrixXd values;

  std::string format() const;
  static FeatureFile parse(const std::string& text);
  static FeatureFile load(const std::filesystem::path& path);

  classify::FeatureKind feature_kind() const;
  classify::FeatureTable to_table() const;
};

/// Descriptor vector of one image under `cfg`. Returns the abscissae of the
/// values when `t` is non-null.
std::vector<double> image_descriptors(const imageio::GrayImage& img, const RunConfig& cfg,
                                      std::vector<double>* t = nullptr);

FeatureFile extract_descriptors(const imageio::DatasetManifest& manifest, const RunConfig& cfg,
                                unsigned threads);
FeatureFile fda_transform(const FeatureFile& descriptors, const RunConfig& cfg, unsigned threads);
classify::EvaluationReport evaluate(const FeatureFile& features, const RunConfig& cfg, unsigned threads);

void cmd_descriptors(const std::filesystem::path& manifest, const RunConfig& cfg,
                     const std::filesystem::path& out, unsigned threads);
void cmd_fda(const std::filesystem::path& input, const RunConfig& cfg,
             const std::filesystem::path& out, unsigned threads);
/// Writes the report JSON (and optionally a confusion CSV); returns the
/// one-line summary.
std::string cmd_evaluate(const std::filesystem::path& input, const RunConfig& cfg,
                         const std::filesystem::path& out, unsigned threads,
                         const std::optional<std::filesystem::path>& confusion = std::nullopt);

struct SweepGrid {
  std::vector<int> counts;
  std::vector<int> orders;
  std::vector<CoefficientKind> coefficients;
  std::vector<classify::ClassifierKind> classifiers;
  RunConfig base;

  std::size_t cells() const {
    return counts.size() * orders.size() * coefficients.size() * classifiers.size();
  }
  /// Keys `q`, `order`, `coef`, `classifier` take lists (`10,20` or
  /// `10..50:10`); all other keys are RunConfig fields.
  static SweepGrid parse(const std::string& text);
  static SweepGrid load(const std::filesystem::path& path);
};

/// One row per cell: `q,order,kind,classifier,mean,std,error`.
std::string sweep(const FeatureFile& descriptors, const SweepGrid& grid, unsigned threads);

void cmd_sweep(const std::filesystem::path& manifest, const SweepGrid& grid,
               const std::filesystem::path& out, unsigned threads);

}  // namespace fractex::pipeline
