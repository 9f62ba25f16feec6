#include "fractex/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "fractex/csv.hpp"
#include "fractex/error.hpp"
#include "fractex/parallel.hpp"
#include "fractex/surface_edt.hpp"

namespace fractex::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw UsageError("config '" + key + "': not an integer: '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw UsageError("config '" + key + "': not a number: '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw UsageError("config '" + key + "': not a boolean: '" + v + "'");
}

DescriptorKind parse_descriptor_kind(const std::string& v) {
  if (v == "vbfd") return DescriptorKind::Vbfd;
  if (v == "smoothed") return DescriptorKind::Smoothed;
  if (v == "fourier") return DescriptorKind::Fourier;
  throw UsageError("unknown descriptor kind '" + v + "'");
}

CoefficientKind parse_coefficient_kind(const std::string& v) {
  if (v == "alpha") return CoefficientKind::Alpha;
  if (v == "beta") return CoefficientKind::Beta;
  throw UsageError("unknown coefficient kind '" + v + "'");
}

classify::ClassifierKind parse_classifier(const std::string& v) {
  try {
    return classify::parse_classifier_kind(v);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

std::string to_string(fda::BetaConvention c) { return c == fda::BetaConvention::S ? "s" : "st"; }
std::string to_string(fda::KnotPlacement k) { return k == fda::KnotPlacement::Uniform ? "uniform" : "adaptive"; }

std::vector<std::pair<std::string, std::string>> key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t lineno = 0;
  for (const auto& raw : csv::split_lines(text)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += csv::format_double(v[i]);
  }
  return s;
}

}  // namespace

std::string to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::Vbfd: return "vbfd";
    case DescriptorKind::Smoothed: return "smoothed";
    case DescriptorKind::Fourier: return "fourier";
  }
  return "vbfd";
}

std::string to_string(CoefficientKind k) { return k == CoefficientKind::Alpha ? "alpha" : "beta"; }

// ------------------------------------------------------------ RunConfig

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "rmax") r_max = parse_real(key, value);
  else if (key == "include_r0") include_r0 = parse_bool(key, value);
  else if (key == "kind") descriptor_kind = parse_descriptor_kind(value);
  else if (key == "scale") scale = parse_real(key, value);
  else if (key == "height_shift") height_shift = parse_int<int>(key, value);
  else if (key == "order") basis_order = parse_int<int>(key, value);
  else if (key == "count") basis_count = parse_int<int>(key, value);
  else if (key == "coef") coefficient_kind = parse_coefficient_kind(value);
  else if (key == "beta_convention") {
    if (value == "s") beta_convention = fda::BetaConvention::S;
    else if (value == "st") beta_convention = fda::BetaConvention::ST;
    else throw UsageError("beta_convention must be s or st");
  } else if (key == "knots") {
    if (value == "uniform") knots = fda::KnotPlacement::Uniform;
    else if (value == "adaptive") knots = fda::KnotPlacement::Adaptive;
    else throw UsageError("knots must be uniform or adaptive");
  } else if (key == "classifier") classifier = parse_classifier(value);
  else if (key == "k") k = parse_int<int>(key, value);
  else if (key == "shrinkage") shrinkage = parse_real(key, value);
  else if (key == "folds") folds = parse_int<int>(key, value);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
  else if (key == "standardize") standardize = parse_bool(key, value);
  else throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  if (!(r_max >= 1.0 && r_max <= 1000.0)) throw UsageError("rmax must lie in [1, 1000]");
  if (!(scale > 0.0)) throw UsageError("scale must be > 0");
  if (height_shift < 0 || height_shift > 1) throw UsageError("height_shift must be 0 or 1");
  if (basis_order < 1 || basis_order > 20) throw UsageError("order must lie in [1, 20]");
  if (basis_count < basis_order) throw UsageError("count must be >= order");
  if (k < 1) throw UsageError("k must be >= 1");
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw UsageError("shrinkage must lie in [0, 1]");
  if (folds < 2) throw UsageError("folds must be >= 2");
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "rmax=" << csv::format_double(r_max) << '\n'
     << "include_r0=" << (include_r0 ? 1 : 0) << '\n'
     << "kind=" << to_string(descriptor_kind) << '\n'
     << "scale=" << csv::format_double(scale) << '\n'
     << "height_shift=" << height_shift << '\n'
     << "order=" << basis_order << '\n'
     << "count=" << basis_count << '\n'
     << "coef=" << to_string(coefficient_kind) << '\n'
     << "beta_convention=" << to_string(beta_convention) << '\n'
     << "knots=" << to_string(knots) << '\n'
     << "classifier=" << classify::to_string(classifier) << '\n'
     << "k=" << k << '\n'
     << "shrinkage=" << csv::format_double(shrinkage) << '\n'
     << "folds=" << folds << '\n'
     << "seed=" << seed << '\n'
     << "standardize=" << (standardize ? 1 : 0) << '\n';
  return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  for (const auto& [k, v] : key_values(text)) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(csv::read_file(path)); }

classify::ClassifierConfig RunConfig::classifier_config() const {
  return {classifier, k, shrinkage, standardize};
}

// ---------------------------------------------------------- FeatureFile

std::string FeatureFile::format() const {
  std::string out = "# fractex";
  for (const auto& [k, v] : meta) out += " " + k + "=" + v;
  out += '\n';
  if (!t.empty()) out += "# t=" + join_doubles(t) + '\n';
  out += "path,label";
  for (const auto& c : columns) out += "," + c;
  out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    out += csv::quote(paths[static_cast<std::size_t>(r)]) + "," + csv::quote(labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < values.cols(); ++c) out += "," + csv::format_double(values(r, c));
    out += '\n';
  }
  return out;
}

FeatureFile FeatureFile::parse(const std::string& text) {
  FeatureFile f;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  for (const auto& line : csv::split_lines(text)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream is(line.substr(1));
      std::string tok;
      is >> tok;
      if (tok == "fractex") {
        while (is >> tok) {
          const auto eq = tok.find('=');
          if (eq == std::string::npos) throw ParseError("malformed metadata token '" + tok + "'", lineno);
          f.meta[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
      } else if (tok.rfind("t=", 0) == 0) {
        for (const auto& field : csv::split_record(tok.substr(2), lineno)) {
          f.t.push_back(csv::parse_double(field, lineno));
        }
      }
      continue;
    }
    auto fields = csv::split_record(line, lineno);
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "path" || fields[1] != "label") {
        throw ParseError("expected header 'path,label,<features...>'", lineno);
      }
      f.columns.assign(fields.begin() + 2, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != f.columns.size() + 2) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(f.columns.size() + 2),
                       lineno);
    }
    f.paths.push_back(fields[0]);
    f.labels.push_back(fields[1]);
    std::vector<double> row;
    row.reserve(f.columns.size());
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const double v = csv::parse_double(fields[c], lineno);
      if (!std::isfinite(v)) throw ParseError("non-finite feature value", lineno);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("missing header row", lineno + 1);
  if (!f.t.empty() && f.t.size() != f.columns.size()) {
    throw ParseError("t metadata has " + std::to_string(f.t.size()) + " entries for " +
                         std::to_string(f.columns.size()) + " columns",
                     1);
  }
  f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(f.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return f;
}

FeatureFile FeatureFile::load(const std::filesystem::path& path) { return parse(csv::read_file(path)); }

classify::FeatureKind FeatureFile::feature_kind() const {
  if (auto it = meta.find("coef"); it != meta.end()) return classify::parse_feature_kind(it->second);
  if (auto it = meta.find("kind"); it != meta.end()) return classify::parse_feature_kind(it->second);
  return classify::FeatureKind::Original;
}

classify::FeatureTable FeatureFile::to_table() const {
  classify::FeatureTable table;
  table.rows = values;
  table.kind = feature_kind();
  table.ids = paths;
  for (const auto& l : labels) {
    auto it = std::find(table.class_names.begin(), table.class_names.end(), l);
    if (it == table.class_names.end()) {
      table.class_names.push_back(l);
      it = table.class_names.end() - 1;
    }
    table.labels.push_back(static_cast<int>(it - table.class_names.begin()));
  }
  table.validate();
  return table;
}

// ------------------------------------------------------------- commands

std::vector<double> image_descriptors(const imageio::GrayImage& img, const RunConfig& cfg,
                                      std::vector<double>* t) {
  const auto curve = surface::volume_curve(img, cfg.r_max, {cfg.height_shift});
  const auto desc = descriptors::vbfd_descriptors(curve, cfg.include_r0);
  descriptors::DescriptorCurve out;
  switch (cfg.descriptor_kind) {
    case DescriptorKind::Vbfd:
      if (t) {
        t->clear();
        if (desc.include_r0) t->push_back(-INFINITY);
        t->insert(t->end(), desc.t.begin(), desc.t.end());
      }
      return desc.features();
    case DescriptorKind::Smoothed: out = descriptors::smoothed_derivative(desc, cfg.scale); break;
    case DescriptorKind::Fourier: out = descriptors::fourier_derivative(desc, cfg.scale); break;
  }
  if (t) *t = out.t;
  return out.u;
}

FeatureFile extract_descriptors(const imageio::DatasetManifest& manifest, const RunConfig& cfg,
                                unsigned threads) {
  cfg.validate();
  const std::size_t n = manifest.entries.size();
  if (n == 0) throw ValidationError("manifest has no entries");
  std::vector<std::vector<double>> rows(n);
  std::vector<std::string> failures(n);
  std::vector<double> t;
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      std::vector<double> ti;
      rows[i] = image_descriptors(imageio::load_image(manifest.resolve(manifest.entries[i])), cfg,
                                  i == 0 ? &ti : nullptr);
      if (i == 0) t = std::move(ti);
    } catch (const DataError& e) {
      failures[i] = manifest.entries[i].path + ": " + e.what();
    }
  });
  std::string msg;
  for (const auto& f : failures) {
    if (!f.empty()) msg += "\n  " + f;
  }
  if (!msg.empty()) throw IoError("failed to read image(s):" + msg);

  FeatureFile f;
  f.meta["kind"] = to_string(cfg.descriptor_kind);
  f.meta["rmax"] = csv::format_double(cfg.r_max);
  f.meta["include_r0"] = cfg.include_r0 ? "1" : "0";
  f.meta["height_shift"] = std::to_string(cfg.height_shift);
  if (cfg.descriptor_kind != DescriptorKind::Vbfd) f.meta["scale"] = csv::format_double(cfg.scale);
  f.t = std::move(t);
  const std::size_t d = rows.front().size();
  for (std::size_t c = 1; c <= d; ++c) f.columns.push_back("d_" + std::to_string(c));
  f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    f.paths.push_back(manifest.entries[r].path);
    f.labels.push_back(manifest.entries[r].label);
    for (std::size_t c = 0; c < d; ++c) f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return f;
}

FeatureFile fda_transform(const FeatureFile& in, const RunConfig& cfg, unsigned threads) {
  cfg.validate();
  if (in.meta.count("coef")) throw ValidationError("input already holds FDA coefficients");
  std::vector<double> t = in.t;
  if (t.empty()) {
    for (std::size_t c = 0; c < in.columns.size(); ++c) t.push_back(static_cast<double>(c + 1));
  }
  std::vector<Eigen::Index> cols;
  std::vector<double> tf;
  for (std::size_t c = 0; c < t.size(); ++c) {
    if (std::isfinite(t[c])) {
      cols.push_back(static_cast<Eigen::Index>(c));
      tf.push_back(t[c]);
    }
  }
  for (std::size_t i = 1; i < tf.size(); ++i) {
    if (!(tf[i] > tf[i - 1])) throw ValidationError("descriptor abscissae are not strictly increasing");
  }
  if (static_cast<std::size_t>(cfg.basis_count) > tf.size()) {
    throw UnderdeterminedError("basis count " + std::to_string(cfg.basis_count) + " exceeds the " +
                               std::to_string(tf.size()) + " usable descriptor columns");
  }

  const auto basis = fda::make_basis_for_samples(cfg.basis_order, cfg.basis_count, tf, cfg.knots);
  std::optional<fda::GramFactor> gf;
  if (cfg.coefficient_kind == CoefficientKind::Beta) gf = fda::gram_factor(basis);

  const auto n = static_cast<std::size_t>(in.values.rows());
  const auto q = static_cast<Eigen::Index>(cfg.basis_count);
  FeatureFile out;
  out.values.resize(in.values.rows(), q);
  parallel_for(n, threads, [&](std::size_t r) {
    std::vector<double> y(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) y[j] = in.values(static_cast<Eigen::Index>(r), cols[j]);
    auto coef = fda::fit_alpha(basis, tf, y);
    if (gf) {
      coef = fda::transform_beta(coef, *gf, cfg.beta_convention);
      out.values.row(static_cast<Eigen::Index>(r)) = coef.beta->transpose();
    } else {
      out.values.row(static_cast<Eigen::Index>(r)) = coef.alpha.transpose();
    }
  });

  out.meta["coef"] = to_string(cfg.coefficient_kind);
  out.meta["order"] = std::to_string(cfg.basis_order);
  out.meta["count"] = std::to_string(cfg.basis_count);
  out.meta["domain"] = csv::format_double(basis.t_min()) + ":" + csv::format_double(basis.t_max());
  out.meta["knots"] = to_string(cfg.knots);
  if (gf) out.meta["convention"] = to_string(cfg.beta_convention);
  if (auto it = in.meta.find("kind"); it != in.meta.end()) out.meta["source"] = it->second;
  for (Eigen::Index c = 1; c <= q; ++c) out.columns.push_back("c_" + std::to_string(c));
  out.paths = in.paths;
  out.labels = in.labels;
  return out;
}

classify::EvaluationReport evaluate(const FeatureFile& features, const RunConfig& cfg, unsigned threads) {
  cfg.validate();
  return classify::cross_validate(features.to_table(), cfg.classifier_config(), cfg.folds, cfg.seed, threads);
}

void cmd_descriptors(const std::filesystem::path& manifest, const RunConfig& cfg,
                     const std::filesystem::path& out, unsigned threads) {
  const auto m = imageio::load_manifest(manifest);
  csv::write_file_atomic(out, extract_descriptors(m, cfg, threads).format());
}

void cmd_fda(const std::filesystem::path& input, const RunConfig& cfg,
             const std::filesystem::path& out, unsigned threads) {
  csv::write_file_atomic(out, fda_transform(FeatureFile::load(input), cfg, threads).format());
}

std::string cmd_evaluate(const std::filesystem::path& input, const RunConfig& cfg,
                         const std::filesystem::path& out, unsigned threads,
                         const std::optional<std::filesystem::path>& confusion) {
  const auto rep = evaluate(FeatureFile::load(input), cfg, threads);
  csv::write_file_atomic(out, rep.to_json().dump(2) + "\n");
  if (confusion) {
    std::string s = "true\\predicted";
    for (const auto& c : rep.class_names) s += "," + csv::quote(c);
    s += '\n';
    for (Eigen::Index r = 0; r < rep.confusion.rows(); ++r) {
      s += csv::quote(rep.class_names[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < rep.confusion.cols(); ++c) s += "," + std::to_string(rep.confusion(r, c));
      s += '\n';
    }
    csv::write_file_atomic(*confusion, s);
  }
  return rep.summary();
}

// ---------------------------------------------------------------- sweep

namespace {

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& raw : csv::split_record(v, 0)) {
    const std::string item = trim(raw);
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const auto colon = item.find(':', dots);
      const int lo = parse_int<int>(key, item.substr(0, dots));
      const int hi = parse_int<int>(key, item.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
      const int step = colon == std::string::npos ? 1 : parse_int<int>(key, item.substr(colon + 1));
      if (step < 1 || hi < lo) throw UsageError("bad range '" + item + "' for " + key);
      for (int x = lo; x <= hi; x += step) out.push_back(x);
    } else {
      out.push_back(parse_int<int>(key, item));
    }
  }
  return out;
}

template <typename F>
auto parse_list(const std::string& v, F parse_one) {
  std::vector<decltype(parse_one(std::string{}))> out;
  for (const auto& raw : csv::split_record(v, 0)) out.push_back(parse_one(trim(raw)));
  return out;
}

}  // namespace

SweepGrid SweepGrid::parse(const std::string& text) {
  SweepGrid g;
  for (const auto& [k, v] : key_values(text)) {
    if (k == "q") g.counts = parse_int_list(k, v);
    else if (k == "order") g.orders = parse_int_list(k, v);
    else if (k == "coef") g.coefficients = parse_list(v, parse_coefficient_kind);
    else if (k == "classifier") g.classifiers = parse_list(v, parse_classifier);
    else g.base.set(k, v);
  }
  if (g.counts.empty()) g.counts = {g.base.basis_count};
  if (g.orders.empty()) g.orders = {g.base.basis_order};
  if (g.coefficients.empty()) g.coefficients = {g.base.coefficient_kind};
  if (g.classifiers.empty()) g.classifiers = {g.base.classifier};
  g.base.validate();
  return g;
}

SweepGrid SweepGrid::load(const std::filesystem::path& path) { return parse(csv::read_file(path)); }

std::string sweep(const FeatureFile& descriptors, const SweepGrid& grid, unsigned threads) {
  struct Cell {
    int q, order;
    CoefficientKind coef;
    classify::ClassifierKind classifier;
  };
  std::vector<Cell> cells;
  for (int q : grid.counts)
    for (int order : grid.orders)
      for (auto coef : grid.coefficients)
        for (auto cls : grid.classifiers) cells.push_back({q, order, coef, cls});

  std::vector<std::string> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    std::string row = std::to_string(c.q) + "," + std::to_string(c.order) + "," + to_string(c.coef) + "," +
                      classify::to_string(c.classifier) + ",";
    try {
      RunConfig cfg = grid.base;
      cfg.basis_count = c.q;
      cfg.basis_order = c.order;
      cfg.coefficient_kind = c.coef;
      cfg.classifier = c.classifier;
      cfg.validate();
      const auto rep = evaluate(fda_transform(descriptors, cfg, 1), cfg, 1);
      row += csv::format_double(rep.mean) + "," + csv::format_double(rep.std) + ",";
    } catch (const Error& e) {
      row += ",," + csv::quote(e.what());
    }
    rows[i] = std::move(row);
  });
  std::string out = "q,order,kind,classifier,mean,std,error\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

void cmd_sweep(const std::filesystem::path& manifest, const SweepGrid& grid,
               const std::filesystem::path& out, unsigned threads) {
  const auto m = imageio::load_manifest(manifest);
  const auto desc = extract_descriptors(m, grid.base, threads);
  csv::write_file_atomic(out, sweep(desc, grid, threads));
}

}  // namespace fractex::pipeline
