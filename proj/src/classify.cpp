#include "fractex/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "fractex/error.hpp"
#include "fractex/parallel.hpp"

namespace fractex::classify {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index c = 1; c < v.size(); ++c) {
    if (v(c) > v(best)) best = static_cast<int>(c);
  }
  return best;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, std::span<const Eigen::Index> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(j)) = v(idx[j]);
  return out;
}

Eigen::VectorXd column_variance(const Eigen::MatrixXd& m) {
  const Eigen::RowVectorXd mean = m.colwise().mean();
  const double denom = std::max<double>(1.0, static_cast<double>(m.rows() - 1));
  return ((m.rowwise() - mean).array().square().colwise().sum() / denom).transpose();
}

std::vector<Eigen::Index> nonconstant_features(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double first = m(0, j);
    if ((m.col(j).array() != first).any()) kept.push_back(j);
  }
  return kept;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Original: return "original";
    case FeatureKind::Alpha: return "alpha";
    case FeatureKind::Beta: return "beta";
    case FeatureKind::Smoothed: return "smoothed";
    case FeatureKind::Fourier: return "fourier";
  }
  return "original";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "original" || name == "vbfd") return FeatureKind::Original;
  if (name == "alpha") return FeatureKind::Alpha;
  if (name == "beta") return FeatureKind::Beta;
  if (name == "smoothed") return FeatureKind::Smoothed;
  if (name == "fourier") return FeatureKind::Fourier;
  throw ValidationError("unknown feature kind '" + name + "'");
}

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Bayes: return "bayes";
    case ClassifierKind::Lda: return "lda";
  }
  return "knn";
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "knn") return ClassifierKind::Knn;
  if (name == "bayes") return ClassifierKind::Bayes;
  if (name == "lda") return ClassifierKind::Lda;
  throw ValidationError("unknown classifier '" + name + "'");
}

void FeatureTable::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows()) {
    throw ValidationError("label count does not match row count");
  }
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != rows.rows()) {
    throw ValidationError("id count does not match row count");
  }
  if (!rows.allFinite()) throw ValidationError("feature table contains non-finite entries");
  std::vector<int> counts(class_names.size(), 0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes()) throw ValidationError("label index out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 2) {
      throw ValidationError("class '" + class_names[c] + "' has fewer than 2 rows");
    }
  }
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
  FeatureTable out;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), rows.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.rows.row(static_cast<Eigen::Index>(r)) = rows.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
    if (!ids.empty()) out.ids.push_back(ids[indices[r]]);
  }
  out.class_names = class_names;
  out.kind = kind;
  return out;
}

// ---------------------------------------------------------------- k-NN

Predictions knn_classify(const FeatureTable& train, const Eigen::MatrixXd& test, int k) {
  const Eigen::Index n = train.n();
  if (n == 0) throw DomainError("k-NN needs a non-empty training set");
  if (k < 1 || k > n) throw DomainError("k must lie in [1, n_train]");
  if (test.cols() != train.d()) throw DomainError("test rows have the wrong dimension");

  const auto kk = static_cast<std::size_t>(k);
  const auto c = static_cast<std::size_t>(train.num_classes());
  Predictions out(static_cast<std::size_t>(test.rows()));
  std::vector<std::pair<double, int>> nb(static_cast<std::size_t>(n));
  std::vector<int> votes(c);
  std::vector<double> dist_sum(c);
  for (Eigen::Index q = 0; q < test.rows(); ++q) {
    for (Eigen::Index i = 0; i < n; ++i) {
      nb[static_cast<std::size_t>(i)] = {(train.rows.row(i) - test.row(q)).squaredNorm(),
                                         train.labels[static_cast<std::size_t>(i)]};
    }
    // Ordering by (distance, label) makes the neighbour set independent of
    // training-row order.
    std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(kk), nb.end());
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < kk; ++j) {
      const auto lab = static_cast<std::size_t>(nb[j].second);
      ++votes[lab];
      dist_sum[lab] += std::sqrt(nb[j].first);
    }
    const int top = *std::max_element(votes.begin(), votes.end());
    int best = -1;
    double best_mean = 0.0;
    for (std::size_t cl = 0; cl < c; ++cl) {
      if (votes[cl] != top) continue;
      const double mean = dist_sum[cl] / votes[cl];
      if (best < 0 || mean < best_mean) {
        best = static_cast<int>(cl);
        best_mean = mean;
      }
    }
    out[static_cast<std::size_t>(q)] = best;
  }
  return out;
}

// ------------------------------------------------------ Gaussian Bayes

GaussianBayes::GaussianBayes(const FeatureTable& train) {
  if (train.n() == 0) throw DomainError("Bayes classifier needs training rows");
  const Eigen::VectorXd global_var = column_variance(train.rows);
  for (Eigen::Index j = 0; j < train.d(); ++j) {
    if (global_var(j) > 0) {
      kept_.push_back(j);
    } else {
      warn("bayes: feature " + std::to_string(j + 1) + " has zero variance and is dropped");
    }
  }
  if (kept_.empty()) throw DomainError("all features have zero variance");

  const Eigen::Index c = train.num_classes();
  const auto d = static_cast<Eigen::Index>(kept_.size());
  const Eigen::MatrixXd x = select_columns(train.rows, kept_);
  const Eigen::VectorXd gvar = select(global_var, kept_);
  mean_ = Eigen::MatrixXd::Zero(c, d);
  var_ = Eigen::MatrixXd::Zero(c, d);
  log_prior_ = Eigen::VectorXd::Constant(c, kNegInf);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(c), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = train.labels[static_cast<std::size_t>(i)];
    mean_.row(l) += x.row(i);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (Eigen::Index cl = 0; cl < c; ++cl) {
    if (counts[static_cast<std::size_t>(cl)] > 0) mean_.row(cl) /= static_cast<double>(counts[static_cast<std::size_t>(cl)]);
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = train.labels[static_cast<std::size_t>(i)];
    var_.row(l) += (x.row(i) - mean_.row(l)).array().square().matrix();
  }
  for (Eigen::Index cl = 0; cl < c; ++cl) {
    const auto nc = counts[static_cast<std::size_t>(cl)];
    if (nc == 0) continue;
    if (nc > 1) var_.row(cl) /= static_cast<double>(nc - 1);
    for (Eigen::Index j = 0; j < d; ++j) {
      var_(cl, j) = std::max(var_(cl, j), std::max(1e-9, 1e-6 * gvar(j)));
    }
    log_prior_(cl) = std::log(static_cast<double>(nc) / static_cast<double>(x.rows()));
  }
}

Eigen::VectorXd GaussianBayes::log_posterior(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd xs = select(x, kept_);
  Eigen::VectorXd lp(log_prior_.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index c = 0; c < lp.size(); ++c) {
    if (log_prior_(c) == kNegInf) {
      lp(c) = kNegInf;
      continue;
    }
    double s = log_prior_(c);
    for (Eigen::Index j = 0; j < xs.size(); ++j) {
      const double v = var_(c, j);
      const double e = xs(j) - mean_(c, j);
      s -= 0.5 * (log2pi + std::log(v) + e * e / v);
    }
    lp(c) = s;
  }
  return lp;
}

int GaussianBayes::predict(const Eigen::VectorXd& x) const { return argmax_lowest(log_posterior(x)); }

Predictions bayes_classify(const FeatureTable& train, const Eigen::MatrixXd& test) {
  const GaussianBayes model(train);
  Predictions out(static_cast<std::size_t>(test.rows()));
  for (Eigen::Index q = 0; q < test.rows(); ++q) out[static_cast<std::size_t>(q)] = model.predict(test.row(q).transpose());
  return out;
}

// ----------------------------------------------------------------- LDA

LdaModel::LdaModel(const FeatureTable& train, double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw DomainError("shrinkage must lie in [0, 1]");
  if (train.d() < 1) throw DomainError("LDA needs at least one feature");
  const Eigen::Index n = train.n();
  const Eigen::Index c_all = train.num_classes();
  present_.assign(static_cast<std::size_t>(c_all), false);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(c_all), 0);
  for (int l : train.labels) {
    present_[static_cast<std::size_t>(l)] = true;
    ++counts[static_cast<std::size_t>(l)];
  }
  const auto c = static_cast<Eigen::Index>(std::count(present_.begin(), present_.end(), true));
  if (n <= c) throw DomainError("LDA needs more training rows than classes");

  kept_ = nonconstant_features(train.rows);
  if (kept_.empty()) throw DomainError("all features are constant");
  if (static_cast<Eigen::Index>(kept_.size()) < train.d()) {
    warn("lda: " + std::to_string(train.d() - static_cast<Eigen::Index>(kept_.size())) +
         " constant feature(s) dropped");
  }
  const Eigen::MatrixXd raw = select_columns(train.rows, kept_);
  const auto d = raw.cols();
  center_ = raw.colwise().mean().transpose();

  if (n - c < d) {
    used_pca_ = true;
    const Eigen::MatrixXd centered = raw.rowwise() - center_.transpose();
    const Eigen::MatrixXd total = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(total);
    const Eigen::VectorXd vals = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double sum = vals.sum();
    Eigen::Index keep = 0;
    double acc = 0.0;
    while (keep < d && acc < 0.999 * sum) acc += vals(keep++);
    keep = std::clamp<Eigen::Index>(keep, 1, n - c);
    basis_ = eig.eigenvectors().rowwise().reverse().leftCols(keep);
  } else {
    basis_ = Eigen::MatrixXd::Identity(d, d);
  }

  const Eigen::MatrixXd z = (raw.rowwise() - center_.transpose()) * basis_;
  const Eigen::Index k = z.cols();
  means_ = Eigen::MatrixXd::Zero(c_all, k);
  for (Eigen::Index i = 0; i < n; ++i) means_.row(train.labels[static_cast<std::size_t>(i)]) += z.row(i);
  for (Eigen::Index cl = 0; cl < c_all; ++cl) {
    if (counts[static_cast<std::size_t>(cl)] > 0) means_.row(cl) /= static_cast<double>(counts[static_cast<std::size_t>(cl)]);
  }
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd e = z.row(i) - means_.row(train.labels[static_cast<std::size_t>(i)]);
    within.noalias() += e.transpose() * e;
  }
  within /= static_cast<double>(n - c);
  cov_ = (1.0 - shrinkage) * within;
  cov_.diagonal() += shrinkage * within.diagonal();

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  const double scale = cov_.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0) ||
      llt.matrixL().toDenseMatrix().diagonal().array().square().minCoeff() < 1e-14 * scale) {
    throw ConditioningError("pooled covariance is singular; increase shrinkage (currently " +
                            std::to_string(shrinkage) + ")");
  }
  weights_ = llt.solve(means_.transpose());
  bias_.resize(c_all);
  for (Eigen::Index cl = 0; cl < c_all; ++cl) {
    if (!present_[static_cast<std::size_t>(cl)]) {
      bias_(cl) = kNegInf;
      continue;
    }
    bias_(cl) = -0.5 * means_.row(cl).dot(weights_.col(cl)) +
                std::log(static_cast<double>(counts[static_cast<std::size_t>(cl)]) / static_cast<double>(n));
  }
}

Eigen::VectorXd LdaModel::project(const Eigen::VectorXd& x) const {
  return basis_.transpose() * (select(x, kept_) - center_);
}

Eigen::VectorXd LdaModel::discriminants(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = project(x);
  Eigen::VectorXd g = weights_.transpose() * z + bias_;
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    if (!present_[static_cast<std::size_t>(c)]) g(c) = kNegInf;
  }
  return g;
}

int LdaModel::predict(const Eigen::VectorXd& x) const { return argmax_lowest(discriminants(x)); }

Predictions lda_classify(const FeatureTable& train, const Eigen::MatrixXd& test, double shrinkage) {
  const LdaModel model(train, shrinkage);
  Predictions out(static_cast<std::size_t>(test.rows()));
  for (Eigen::Index q = 0; q < test.rows(); ++q) out[static_cast<std::size_t>(q)] = model.predict(test.row(q).transpose());
  return out;
}

// ---------------------------------------------------------- evaluation

Predictions predict(const FeatureTable& train, const Eigen::MatrixXd& test, const ClassifierConfig& cfg) {
  const FeatureTable* tr = &train;
  const Eigen::MatrixXd* te = &test;
  FeatureTable scaled_train;
  Eigen::MatrixXd scaled_test;
  if (cfg.standardize) {
    const Eigen::RowVectorXd mu = train.rows.colwise().mean();
    Eigen::RowVectorXd sd = column_variance(train.rows).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < sd.size(); ++j) {
      if (!(sd(j) > 0)) sd(j) = 1.0;
    }
    scaled_train = train;
    scaled_train.rows = (train.rows.rowwise() - mu).array().rowwise() / sd.array();
    scaled_test = (test.rowwise() - mu).array().rowwise() / sd.array();
    tr = &scaled_train;
    te = &scaled_test;
  }
  switch (cfg.kind) {
    case ClassifierKind::Knn: return knn_classify(*tr, *te, cfg.k);
    case ClassifierKind::Bayes: return bayes_classify(*tr, *te);
    case ClassifierKind::Lda: return lda_classify(*tr, *te, cfg.shrinkage);
  }
  return {};
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_index over an empty range");
  // Reject the top partial block of 2^64 so every residue is equally likely.
  const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
  for (;;) {
    const std::uint64_t x = rng();
    if (rem == 0 || x <= limit) return x % n;
  }
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int num_classes,
                                                       int folds, std::uint64_t seed) {
  if (folds < 1) throw DomainError("fold count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  std::size_t deal = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) idx.push_back(i);
    }
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    }
    for (std::size_t i : idx) out[deal++ % static_cast<std::size_t>(folds)].push_back(i);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

EvaluationReport cross_validate(const FeatureTable& table, const ClassifierConfig& cfg, int folds,
                                std::uint64_t seed, unsigned threads) {
  table.validate();
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  std::vector<int> counts(static_cast<std::size_t>(table.num_classes()), 0);
  for (int l : table.labels) ++counts[static_cast<std::size_t>(l)];
  int usable = 0, min_count = std::numeric_limits<int>::max();
  for (int n : counts) {
    if (n > 0) {
      ++usable;
      min_count = std::min(min_count, n);
    }
  }
  if (usable < 2) throw DomainError("cross-validation needs at least 2 classes with data");

  EvaluationReport rep;
  rep.config = cfg;
  rep.feature_kind = table.kind;
  rep.n_features = table.d();
  rep.seed = seed;
  rep.folds_requested = folds;
  rep.class_names = table.class_names;
  if (min_count < folds) {
    rep.warnings.push_back("folds reduced from " + std::to_string(folds) + " to " +
                           std::to_string(min_count) + " (smallest class size)");
    warn(rep.warnings.back());
    folds = min_count;
  }

  const auto parts = stratified_folds(table.labels, table.num_classes(), folds, seed);
  std::vector<Predictions> preds(parts.size());
  std::vector<std::string> fold_warnings;
  {
    WarningCollector collect;
    parallel_for(parts.size(), threads, [&](std::size_t f) {
      std::vector<std::size_t> train_idx;
      train_idx.reserve(static_cast<std::size_t>(table.n()));
      for (std::size_t g = 0; g < parts.size(); ++g) {
        if (g != f) train_idx.insert(train_idx.end(), parts[g].begin(), parts[g].end());
      }
      std::sort(train_idx.begin(), train_idx.end());
      const FeatureTable train = table.subset(train_idx);
      Eigen::MatrixXd test(static_cast<Eigen::Index>(parts[f].size()), table.d());
      for (std::size_t r = 0; r < parts[f].size(); ++r) {
        test.row(static_cast<Eigen::Index>(r)) = table.rows.row(static_cast<Eigen::Index>(parts[f][r]));
      }
      preds[f] = predict(train, test, cfg);
    });
    fold_warnings = collect.messages();
  }
  for (const auto& w : fold_warnings) {
    rep.warnings.push_back(w);
    warn(w);
  }

  rep.confusion = Eigen::MatrixXi::Zero(table.num_classes(), table.num_classes());
  for (std::size_t f = 0; f < parts.size(); ++f) {
    FoldResult fr;
    fr.total = parts[f].size();
    for (std::size_t r = 0; r < parts[f].size(); ++r) {
      const int truth = table.labels[parts[f][r]];
      const int got = preds[f][r];
      if (truth == got) ++fr.correct;
      ++rep.confusion(truth, got);
    }
    rep.folds.push_back(fr);
  }
  double sum = 0.0;
  for (const auto& f : rep.folds) sum += f.accuracy();
  rep.mean = sum / static_cast<double>(rep.folds.size());
  double ss = 0.0;
  for (const auto& f : rep.folds) ss += (f.accuracy() - rep.mean) * (f.accuracy() - rep.mean);
  rep.std = std::sqrt(ss / static_cast<double>(rep.folds.size() - 1));
  return rep;
}

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["classifier"] = to_string(config.kind);
  j["feature_kind"] = to_string(feature_kind);
  j["n_features"] = n_features;
  auto folds_json = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    folds_json.push_back({{"fold", f}, {"correct", folds[f].correct}, {"total", folds[f].total},
                          {"accuracy", folds[f].accuracy()}});
  }
  j["folds"] = folds_json;
  j["mean"] = mean;
  j["std"] = std;
  j["deviation"] = "sample standard deviation across folds";
  j["seed"] = seed;
  j["config"] = {{"k", config.k},
                 {"shrinkage", config.shrinkage},
                 {"standardize", config.standardize},
                 {"folds_requested", folds_requested},
                 {"folds_used", folds.size()}};
  j["class_names"] = class_names;
  auto conf = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) row.push_back(confusion(r, c));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  j["warnings"] = warnings;
  return j;
}

std::string EvaluationReport::summary() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "acc=%.1f±%.1f", mean, std);
  return to_string(config.kind) + " " + to_string(feature_kind) + " d=" + std::to_string(n_features) +
         " " + buf;
}

}  // namespace fractex::classify
