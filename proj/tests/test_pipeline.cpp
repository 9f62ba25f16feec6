#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <regex>

#include "fractex/csv.hpp"
#include "fractex/error.hpp"
#include "fractex/pipeline.hpp"
#include "fractex/synthetic.hpp"
#include "oracles.hpp"

using namespace fractex;
using pipeline::FeatureFile;
using pipeline::RunConfig;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(FRACTEX_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t k = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), k);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) { return csv::read_file(p); }

std::size_t data_rows(const std::string& csv_text) {
  std::size_t n = 0;
  bool header = false;
  for (const auto& l : csv::split_lines(csv_text)) {
    if (l.empty() || l[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

// Four small images, two classes.
fs::path small_manifest(const oracle::TempDir& dir) {
  std::vector<imageio::ManifestEntry> e;
  int i = 0;
  for (auto p : {synthetic::Pattern::Constant, synthetic::Pattern::Constant, synthetic::Pattern::Noise,
                 synthetic::Pattern::Noise}) {
    const std::string name = "img" + std::to_string(i) + ".pgm";
    imageio::write_pgm(dir / name, synthetic::make_texture(p, 16, static_cast<std::uint64_t>(100 + i)));
    e.push_back({name, synthetic::to_string(p)});
    ++i;
  }
  imageio::write_manifest(dir / "m.csv", imageio::make_manifest(e));
  return dir / "m.csv";
}

}  // namespace

TEST(RunConfig, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.r_max, 10.0);
  EXPECT_TRUE(c.include_r0);
  EXPECT_EQ(c.k, 1);
  EXPECT_EQ(c.folds, 10);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.shrinkage, 1e-4);
  EXPECT_FALSE(c.standardize);
}

TEST(RunConfig, SerializeRoundTrip) {
  RunConfig c;
  c.set("rmax", "7.5");
  c.set("include_r0", "0");
  c.set("kind", "fourier");
  c.set("scale", "0.125");
  c.set("order", "3");
  c.set("count", "33");
  c.set("coef", "beta");
  c.set("beta_convention", "st");
  c.set("knots", "uniform");
  c.set("classifier", "lda");
  c.set("k", "5");
  c.set("shrinkage", "0.3");
  c.set("folds", "4");
  c.set("seed", "18446744073709551615");
  c.set("standardize", "true");
  EXPECT_EQ(RunConfig::parse(c.serialize()), c);
  EXPECT_EQ(RunConfig::parse(RunConfig{}.serialize()), RunConfig{});
}

TEST(RunConfig, Rejections) {
  RunConfig c;
  EXPECT_THROW(c.set("nope", "1"), UsageError);
  EXPECT_THROW(c.set("k", "two"), UsageError);
  EXPECT_THROW(c.set("classifier", "svm"), UsageError);
  EXPECT_THROW(RunConfig::parse("shrinkage=2"), UsageError);
  EXPECT_THROW(RunConfig::parse("order=4\ncount=3"), UsageError);
  EXPECT_THROW(RunConfig::parse("just words"), UsageError);
  EXPECT_NO_THROW(RunConfig::parse("# comment\n\n  k = 3  \n"));
}

TEST(FeatureFile, RoundTrip) {
  FeatureFile f;
  f.meta = {{"kind", "vbfd"}, {"rmax", "2"}};
  f.t = {-INFINITY, 0.0, 0.5};
  f.columns = {"d_1", "d_2", "d_3"};
  f.paths = {"a,b.png", "c.png"};
  f.labels = {"x", "y"};
  f.values.resize(2, 3);
  f.values << 1.0, 2.5, -3.25, 1e-300, 0.1, 7;
  const auto g = FeatureFile::parse(f.format());
  EXPECT_EQ(g.meta, f.meta);
  EXPECT_EQ(g.t, f.t);
  EXPECT_EQ(g.paths, f.paths);
  EXPECT_TRUE(g.values == f.values);
  EXPECT_EQ(g.format(), f.format());
}

TEST(FeatureFile, ParseErrorsCarryLine) {
  try {
    FeatureFile::parse("path,label,d_1\na,x,1\nb,y,oops\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    FeatureFile::parse("# fractex kind=vbfd\npath,label,d_1,d_2\na,x,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(FeatureFile::parse(""), ParseError);
}

TEST(Pipeline, DescriptorsMatchDirectComputation) {
  oracle::TempDir dir;
  const auto m = imageio::load_manifest(small_manifest(dir));
  RunConfig cfg;
  cfg.r_max = 4;
  const auto f = pipeline::extract_descriptors(m, cfg, 2);
  ASSERT_EQ(f.values.rows(), 4);
  const auto direct = descriptors::vbfd_descriptors(
      surface::volume_curve(imageio::load_image(dir / "img2.pgm"), 4.0)).features();
  for (std::size_t c = 0; c < direct.size(); ++c) EXPECT_EQ(f.values(2, static_cast<Eigen::Index>(c)), direct[c]);
  EXPECT_EQ(f.t.front(), -INFINITY);
}

TEST(Pipeline, DerivativeKindsKeepLength) {
  oracle::TempDir dir;
  const auto m = imageio::load_manifest(small_manifest(dir));
  for (const char* kind : {"smoothed", "fourier"}) {
    RunConfig cfg;
    cfg.set("kind", kind);
    const auto f = pipeline::extract_descriptors(m, cfg, 1);
    EXPECT_EQ(f.values.cols(), 85) << kind;
    EXPECT_EQ(f.meta.at("kind"), kind);
    const auto a = pipeline::fda_transform(f, [] {
      RunConfig c;
      c.basis_count = 20;
      return c;
    }(), 1);
    EXPECT_EQ(a.values.cols(), 20);
    EXPECT_EQ(a.meta.at("source"), kind);
  }
}

TEST(Pipeline, FdaRejectsTooManyCoefficients) {
  FeatureFile f;
  f.columns = {"d_1", "d_2", "d_3"};
  f.paths = {"a", "b"};
  f.labels = {"x", "x"};
  f.values = Eigen::MatrixXd::Ones(2, 3);
  RunConfig cfg;
  cfg.basis_order = 2;
  cfg.basis_count = 4;
  EXPECT_THROW(pipeline::fda_transform(f, cfg, 1), UnderdeterminedError);
}

TEST(Pipeline, SweepGridParse) {
  const auto g = pipeline::SweepGrid::parse("q=10..50:10\norder=2..6\ncoef=beta\nclassifier=knn,lda\nfolds=5\n");
  EXPECT_EQ(g.counts, (std::vector<int>{10, 20, 30, 40, 50}));
  EXPECT_EQ(g.orders, (std::vector<int>{2, 3, 4, 5, 6}));
  EXPECT_EQ(g.cells(), 50u);
  EXPECT_EQ(g.base.folds, 5);
  EXPECT_THROW(pipeline::SweepGrid::parse("q=50..10"), UsageError);
}

// ----------------------------------------------------------------- CLI

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("evaluate --input x.csv").code, 1);
  oracle::TempDir dir;
  const auto m = small_manifest(dir);
  EXPECT_EQ(cli("descriptors --manifest " + m.string() + " --kind nope --out " + (dir / "d.csv").string()).code, 1);
  EXPECT_EQ(cli("descriptors --manifest " + m.string() + " --rmax abc --out " + (dir / "d.csv").string()).code, 1);
  EXPECT_FALSE(fs::exists(dir / "d.csv"));
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, DataErrorsExitTwo) {
  oracle::TempDir dir;
  EXPECT_EQ(cli("descriptors --manifest " + (dir / "missing.csv").string() + " --out " + (dir / "d.csv").string()).code, 2);
  csv::write_file_atomic(dir / "empty.csv", "path,label\n");
  EXPECT_EQ(cli("descriptors --manifest " + (dir / "empty.csv").string() + " --out " + (dir / "d.csv").string()).code, 2);
  csv::write_file_atomic(dir / "bad.csv", "path,label\na.png,x\nb.png,x\n");
  const std::string cmd = std::string(FRACTEX_CLI) + " descriptors --manifest " + (dir / "bad.csv").string() +
                          " --out " + (dir / "d.csv").string() + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string err;
  std::array<char, 4096> buf{};
  while (std::size_t k = std::fread(buf.data(), 1, buf.size(), p)) err.append(buf.data(), k);
  EXPECT_EQ(WEXITSTATUS(pclose(p)), 2);
  EXPECT_NE(err.find("a.png"), std::string::npos) << err;
  EXPECT_NE(err.find("b.png"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir / "d.csv"));
}

TEST(Cli, EndToEndShapesAndNumericExit) {
  oracle::TempDir dir;
  const auto m = small_manifest(dir);
  const auto d = dir / "d.csv";
  ASSERT_EQ(cli("descriptors --manifest " + m.string() + " --rmax 10 --out " + d.string()).code, 0);
  const auto desc = FeatureFile::load(d);
  EXPECT_EQ(desc.values.rows(), 4);
  EXPECT_EQ(desc.values.cols(), 86);
  EXPECT_EQ(data_rows(slurp(d)), 4u);

  ASSERT_EQ(cli("fda --input " + d.string() + " --order 4 --count 80 --coef alpha --out " + (dir / "a.csv").string()).code, 0);
  EXPECT_EQ(FeatureFile::load(dir / "a.csv").values.cols(), 80);
  ASSERT_EQ(cli("fda --input " + d.string() + " --count 10 --coef beta --out " + (dir / "b.csv").string()).code, 0);
  const auto b = FeatureFile::load(dir / "b.csv");
  EXPECT_EQ(b.values.cols(), 10);
  EXPECT_EQ(b.meta.at("coef"), "beta");
  EXPECT_EQ(b.meta.at("count"), "10");

  // existing output survives a failing run untouched
  csv::write_file_atomic(dir / "keep.csv", "sentinel");
  EXPECT_EQ(cli("fda --input " + d.string() + " --count 86 --out " + (dir / "keep.csv").string()).code, 3);
  EXPECT_EQ(slurp(dir / "keep.csv"), "sentinel");

  const auto r = cli("evaluate --input " + (dir / "a.csv").string() + " --folds 2 --out " + (dir / "r.json").string() +
                     " --confusion " + (dir / "c.csv").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(std::regex_search(r.out, std::regex(R"(^knn alpha d=80 acc=\d+\.\d±\d+\.\d\n$)"))) << r.out;
  EXPECT_NE(slurp(dir / "r.json").find("\"classifier\": \"knn\""), std::string::npos);
  EXPECT_EQ(csv::split_lines(slurp(dir / "c.csv")).size(), 3u);
}

TEST(Cli, MalformedFeatureCsvIsDataError) {
  oracle::TempDir dir;
  csv::write_file_atomic(dir / "f.csv", "path,label,d_1\na,x,1\nb,x,zz\n");
  EXPECT_EQ(cli("evaluate --input " + (dir / "f.csv").string() + " --out " + (dir / "r.json").string()).code, 2);
}

TEST(Cli, IdentityBasisAlphaEqualsBeta) {
  oracle::TempDir dir;
  csv::write_file_atomic(dir / "d.csv",
                         "# fractex kind=vbfd\n# t=0,1,2,3\npath,label,d_1,d_2,d_3,d_4\n"
                         "a,x,1,2,3,4\nb,x,0.5,0.25,8,9\nc,y,-1,3,3,7\nd,y,2,2,2,2\n");
  const std::string common = " --input " + (dir / "d.csv").string() + " --order 1 --count 3 --knots uniform";
  ASSERT_EQ(cli("fda" + common + " --coef alpha --out " + (dir / "a.csv").string()).code, 0);
  ASSERT_EQ(cli("fda" + common + " --coef beta --out " + (dir / "b.csv").string()).code, 0);
  const auto a = csv::split_lines(slurp(dir / "a.csv")), b = csv::split_lines(slurp(dir / "b.csv"));
  ASSERT_EQ(a.size(), b.size());
  EXPECT_NE(a[0], b[0]);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << i;
}

TEST(Cli, ConfigFileWithFlagOverride) {
  oracle::TempDir dir;
  const auto m = small_manifest(dir);
  csv::write_file_atomic(dir / "run.cfg", "rmax=3\ninclude_r0=0\n");
  ASSERT_EQ(cli("descriptors --manifest " + m.string() + " --config " + (dir / "run.cfg").string() + " --out " +
                (dir / "d.csv").string()).code, 0);
  EXPECT_EQ(FeatureFile::load(dir / "d.csv").values.cols(), 8);  // squared radii 1..9 except 7
  ASSERT_EQ(cli("descriptors --manifest " + m.string() + " --config " + (dir / "run.cfg").string() +
                " --rmax 2 --out " + (dir / "d2.csv").string()).code, 0);
  EXPECT_EQ(FeatureFile::load(dir / "d2.csv").values.cols(), 4);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  oracle::TempDir dir;
  const auto m = small_manifest(dir);
  for (int i = 0; i < 2; ++i) {
    const std::string s = std::to_string(i);
    const std::string threads = i ? " --threads 3" : " --threads 1";
    ASSERT_EQ(cli("descriptors --manifest " + m.string() + " --out " + (dir / ("d" + s)).string() + threads).code, 0);
    ASSERT_EQ(cli("fda --input " + (dir / "d0").string() + " --count 30 --coef beta --out " + (dir / ("b" + s)).string() + threads).code, 0);
    ASSERT_EQ(cli("evaluate --input " + (dir / "b0").string() + " --classifier bayes --folds 2 --out " +
                  (dir / ("r" + s)).string() + threads).code, 0);
  }
  EXPECT_EQ(slurp(dir / "d0"), slurp(dir / "d1"));
  EXPECT_EQ(slurp(dir / "b0"), slurp(dir / "b1"));
  EXPECT_EQ(slurp(dir / "r0"), slurp(dir / "r1"));
}

TEST(Cli, SweepGridCardinality) {
  oracle::TempDir dir;
  ASSERT_EQ(cli("synth --out " + (dir / "s").string() + " --per-class 3 --size 16").code, 0);
  csv::write_file_atomic(dir / "grid.cfg", "q=10..50:10\norder=2..6\ncoef=beta\nclassifier=knn\nfolds=3\n");
  const std::string args = "sweep --manifest " + (dir / "s" / "manifest.csv").string() + " --grid " +
                           (dir / "grid.cfg").string() + " --out ";
  ASSERT_EQ(cli(args + (dir / "s1.csv").string()).code, 0);
  ASSERT_EQ(cli(args + (dir / "s2.csv").string()).code, 0);
  const auto lines = csv::split_lines(slurp(dir / "s1.csv"));
  ASSERT_EQ(lines.size(), 26u);
  EXPECT_EQ(lines[0], "q,order,kind,classifier,mean,std,error");
  EXPECT_EQ(lines[1].substr(0, 14), "10,2,beta,knn,");
  EXPECT_EQ(slurp(dir / "s1.csv"), slurp(dir / "s2.csv"));
}

TEST(Cli, SweepRecordsCellErrors) {
  oracle::TempDir dir;
  ASSERT_EQ(cli("synth --out " + (dir / "s").string() + " --per-class 3 --size 16").code, 0);
  ASSERT_EQ(cli("descriptors --manifest " + (dir / "s" / "manifest.csv").string() + " --rmax 3 --out " +
                (dir / "d.csv").string()).code, 0);
  csv::write_file_atomic(dir / "grid.cfg", "q=5,50\norder=2\nfolds=3\n");
  ASSERT_EQ(cli("sweep --input " + (dir / "d.csv").string() + " --grid " + (dir / "grid.cfg").string() + " --out " +
                (dir / "s.csv").string()).code, 0);
  const auto lines = csv::split_lines(slurp(dir / "s.csv"));
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(csv::split_record(lines[1], 2).back(), "");
  EXPECT_NE(csv::split_record(lines[2], 3).back().find("exceeds"), std::string::npos) << lines[2];
}

TEST(Cli, CurveDump) {
  oracle::TempDir dir;
  imageio::write_pgm(dir / "one.pgm", imageio::GrayImage(1, 1, std::uint8_t{0}));
  ASSERT_EQ(cli("curve --image " + (dir / "one.pgm").string() + " --rmax 2 --out " + (dir / "c.csv").string()).code, 0);
  const auto lines = csv::split_lines(slurp(dir / "c.csv"));
  EXPECT_EQ(lines[0], "r,log_r,V,log_V");
  EXPECT_EQ(lines[2].substr(0, 4), "1,0,");
  EXPECT_EQ(csv::split_record(lines[5], 5)[2], "33");
}
