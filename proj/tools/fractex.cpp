// fractex: volumetric fractal descriptors, FDA transform and classifier
// evaluation for grayscale textures.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fractex/csv.hpp"
#include "fractex/error.hpp"
#include "fractex/imageio.hpp"
#include "fractex/parallel.hpp"
#include "fractex/pipeline.hpp"
#include "fractex/surface_edt.hpp"
#include "fractex/synthetic.hpp"

namespace fs = std::filesystem;
using fractex::pipeline::RunConfig;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Flags that map one-to-one onto RunConfig keys; applied after --config so
// that the command line wins.
class ConfigFlags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto* opt = app->add_option(flag, values_[key], help);
    opts_.emplace_back(opt, key);
  }
  void add_switch(CLI::App* app, const std::string& flag, const std::string& key, const std::string& value,
                  const std::string& help) {
    auto* opt = app->add_flag(flag, help);
    switches_.push_back({opt, key, value});
  }

  RunConfig resolve(const std::string& config_path) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& [opt, key] : opts_) {
      if (opt->count() > 0) cfg.set(key, values_[key]);
    }
    for (const auto& s : switches_) {
      if (s.opt->count() > 0) cfg.set(s.key, s.value);
    }
    cfg.validate();
    return cfg;
  }

 private:
  struct Switch {
    CLI::Option* opt;
    std::string key, value;
  };
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> opts_;
  std::vector<Switch> switches_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volumetric Bouligand-Minkowski descriptors, FDA transform and texture classification"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  unsigned threads = fractex::default_threads();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));

  std::string config_path, manifest, input, out, grid, confusion, image, out_dir;
  ConfigFlags flags;

  auto* desc = app.add_subcommand("descriptors", "Extract descriptors for every image of a manifest");
  desc->add_option("--manifest", manifest, "CSV manifest with header path,label")->required();
  desc->add_option("--config", config_path, "key=value run configuration");
  desc->add_option("--out", out, "Descriptor CSV to write")->required();
  flags.add(desc, "--rmax", "rmax", "Maximum dilation radius");
  flags.add(desc, "--kind", "kind", "vbfd | smoothed | fourier");
  flags.add(desc, "--scale", "scale", "Gaussian scale for smoothed/fourier (ln r units)");
  flags.add(desc, "--height-shift", "height_shift", "Added to intensities before embedding (0 or 1)");
  flags.add_switch(desc, "--no-r0", "include_r0", "0", "Omit ln V(0) from the vbfd vector");

  auto* fda = app.add_subcommand("fda", "Fit B-spline coefficients to descriptor curves");
  fda->add_option("--input", input, "Descriptor CSV")->required();
  fda->add_option("--config", config_path, "key=value run configuration");
  fda->add_option("--out", out, "Coefficient CSV to write")->required();
  flags.add(fda, "--order", "order", "B-spline order (degree + 1)");
  flags.add(fda, "--count", "count", "Number of basis functions");
  flags.add(fda, "--coef", "coef", "alpha | beta");
  flags.add(fda, "--beta-convention", "beta_convention", "s (beta = S alpha) | st (beta = S^T alpha)");
  flags.add(fda, "--knots", "knots", "adaptive | uniform");

  auto* eval = app.add_subcommand("evaluate", "Cross-validate a classifier on a feature CSV");
  eval->add_option("--input", input, "Descriptor or coefficient CSV")->required();
  eval->add_option("--config", config_path, "key=value run configuration");
  eval->add_option("--out", out, "Report JSON to write")->required();
  eval->add_option("--confusion", confusion, "Optional confusion-matrix CSV");
  flags.add(eval, "--classifier", "classifier", "knn | bayes | lda");
  flags.add(eval, "--k", "k", "Neighbours for knn");
  flags.add(eval, "--shrinkage", "shrinkage", "LDA covariance shrinkage in [0, 1]");
  flags.add(eval, "--folds", "folds", "Cross-validation folds");
  flags.add(eval, "--seed", "seed", "Fold shuffle seed");
  flags.add_switch(eval, "--standardize", "standardize", "1", "z-score features on each training fold");

  auto* sweep = app.add_subcommand("sweep", "Evaluate a grid of basis sizes, orders and classifiers");
  auto* sweep_src = sweep->add_option_group("source");
  sweep_src->add_option("--manifest", manifest, "Image manifest (descriptors are extracted first)");
  sweep_src->add_option("--input", input, "Existing descriptor CSV");
  sweep_src->require_option(1);
  sweep->add_option("--grid", grid, "Grid file: q, order, coef, classifier lists plus config keys")->required();
  sweep->add_option("--out", out, "Sweep CSV to write")->required();

  auto* curve = app.add_subcommand("curve", "Dump the dilation volume curve of one image");
  curve->add_option("--image", image, "PNG or PGM image")->required();
  curve->add_option("--out", out, "CSV r,log_r,V,log_V")->required();
  flags.add(curve, "--rmax", "rmax", "Maximum dilation radius");
  flags.add(curve, "--height-shift", "height_shift", "Added to intensities before embedding (0 or 1)");

  int per_class = 10, size = 64;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic 4-class texture set and manifest");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Samples per class")->check(CLI::Range(2, 100000));
  synth->add_option("--size", size, "Image side length")->check(CLI::Range(1, 100000));
  synth->add_option("--seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*desc) {
      fractex::pipeline::cmd_descriptors(manifest, flags.resolve(config_path), out, threads);
    } else if (*fda) {
      fractex::pipeline::cmd_fda(input, flags.resolve(config_path), out, threads);
    } else if (*eval) {
      std::optional<fs::path> conf;
      if (!confusion.empty()) conf = confusion;
      std::cout << fractex::pipeline::cmd_evaluate(input, flags.resolve(config_path), out, threads, conf)
                << std::endl;
    } else if (*sweep) {
      const auto g = fractex::pipeline::SweepGrid::load(grid);
      if (!manifest.empty()) {
        fractex::pipeline::cmd_sweep(manifest, g, out, threads);
      } else {
        const auto d = fractex::pipeline::FeatureFile::load(input);
        fractex::csv::write_file_atomic(out, fractex::pipeline::sweep(d, g, threads));
      }
    } else if (*curve) {
      const RunConfig cfg = flags.resolve({});
      const auto c = fractex::surface::volume_curve(fractex::imageio::load_image(image), cfg.r_max,
                                                    {cfg.height_shift});
      fractex::csv::write_file_atomic(out, fractex::surface::volume_curve_csv(c));
    } else if (*synth) {
      fs::create_directories(out_dir);
      std::vector<fractex::imageio::ManifestEntry> entries;
      int i = 0;
      for (const auto& s : fractex::synthetic::make_dataset(per_class, size, synth_seed)) {
        const std::string name = s.label + "_" + std::to_string(i++ % per_class) + ".pgm";
        fractex::imageio::write_pgm(fs::path(out_dir) / name, s.image);
        entries.push_back({name, s.label});
      }
      fractex::imageio::write_manifest(fs::path(out_dir) / "manifest.csv",
                                       fractex::imageio::make_manifest(std::move(entries)));
    }
  } catch (const fractex::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const fractex::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const fractex::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
