#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ldcvae/checkpoint.hpp"
#include "ldcvae/errors.hpp"
#include "ldcvae/metrics.hpp"
#include "ldcvae_cli/cli.hpp"
#include "support.hpp"

using namespace ldc;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ldcvae");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Small synthetic model flags shared by every command.
std::vector<std::string> tiny(const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> a = {"--dataset",        "synth2d", "--synth-train-n", "60",  "--synth-test-n", "40",
                                "--latent-dim",     "2",       "--enc-data-hidden", "8", "--enc-noise-hidden", "4",
                                "--enc-comb-hidden", "8",      "--dec-hidden",    "8",   "--sampler-hidden", "8",
                                "--vae-enc-hidden", "8",       "--batch-size",    "20",  "--metric-samples", "30",
                                "--out-dir",        dir.string()};
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

std::vector<std::string> cmd(std::string name, std::vector<std::string> rest) {
  rest.insert(rest.begin(), std::move(name));
  return rest;
}

}  // namespace

TEST(Cli, FlagSetEqualsConfigKeys) {
  for (const auto& name : cli::command_names()) {
    const auto r = run_cli({name, "--help"});
    EXPECT_EQ(r.code, 0) << name;
    std::set<std::string> listed;
    std::istringstream in(r.out);
    for (std::string tok; in >> tok;) {
      if (tok.rfind("--", 0) == 0) listed.insert(tok.substr(0, tok.find_first_of(" ,=")));
    }
    listed.erase("--help");
    listed.erase("--help-all");
    listed.erase("--config");
    std::set<std::string> expected;
    for (const auto& k : config_keys()) expected.insert(cli::flag_name(k.name));
    EXPECT_EQ(listed, expected) << name;
  }
  EXPECT_EQ(cli::flag_name("batch_size"), "--batch-size");
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = ldc::testing::scratch_dir("cli");
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"fly"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--no-such-flag", "1"}).code, 2);
  EXPECT_EQ(run_cli({"train", "--config", (dir / "missing.cfg").string()}).code, 2);
  EXPECT_EQ(run_cli({"train", "--epochs", "many"}).code, 2);
  EXPECT_EQ(run_cli({"sample", "--out-dir", dir.string()}).code, 2);  // no checkpoint
  const auto r = run_cli(cmd("interpolate", tiny(dir, {"--interp-steps", "1"})));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ConfigPrecedence) {
  const auto dir = ldc::testing::scratch_dir("cli");
  std::ofstream(dir / "a.cfg") << "epochs = 5\nlatent_dim = 7\n";
  cli::Overrides o;
  o.config_file = dir / "a.cfg";
  o.flags = {{"epochs", "2"}};
  const Config c = cli::resolve_config(o, false);
  EXPECT_EQ(c.epochs, 2u);
  EXPECT_EQ(c.latent_dim, 7u);
}

TEST(Cli, TrainZeroEpochs) {
  const auto dir = ldc::testing::scratch_dir("cli");
  const auto r = run_cli(cmd("train", tiny(dir, {"--epochs", "0"})));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(slurp(dir / "report.csv")).size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "model.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "train.cfg"));
}

TEST(Cli, TrainTwiceIsBitIdentical) {
  const auto a = ldc::testing::scratch_dir("a");
  const auto b = ldc::testing::scratch_dir("b");
  for (const auto& d : {a, b}) ASSERT_EQ(run_cli(cmd("train", tiny(d, {"--epochs", "2"}))).code, 0);
  EXPECT_EQ(slurp(a / "report.csv"), slurp(b / "report.csv"));
  EXPECT_EQ(slurp(a / "model.ckpt"), slurp(b / "model.ckpt"));
}

TEST(Cli, BaselineModeTrains) {
  const auto dir = ldc::testing::scratch_dir("cli");
  ASSERT_EQ(run_cli(cmd("train", tiny(dir, {"--epochs", "1", "--mode", "baseline-vae"}))).code, 0);
  const auto rows = lines_of(slurp(dir / "report.csv"));
  ASSERT_GT(rows.size(), 1u);
  // baseline steps carry a KL term
  EXPECT_EQ(rows[1].rfind("step,", 0), 0u);
  const auto r = run_cli(cmd("sample", tiny(dir, {"--mode", "baseline-vae", "--sample-count", "3"})));
  EXPECT_EQ(r.code, 0) << r.err;
}

class TrainedCli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = ldc::testing::scratch_dir("cli");
    ASSERT_EQ(run_cli(cmd("train", tiny(dir_, {"--epochs", "1"}))).code, 0);
  }
  fs::path dir_;
};

TEST_F(TrainedCli, SampleOne) {
  const auto r = run_cli(cmd("sample", tiny(dir_, {"--sample-count", "1"})));
  ASSERT_EQ(r.code, 0) << r.err;
  // 2-D data is not an image, so samples go to CSV; latents always do
  EXPECT_EQ(lines_of(slurp(dir_ / "samples_latent.csv")).size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "sample.cfg"));
}

TEST_F(TrainedCli, SampleRowsAndDeterminism) {
  ASSERT_EQ(run_cli(cmd("sample", tiny(dir_, {"--sample-count", "9"}))).code, 0);
  const std::string first = slurp(dir_ / "samples_latent.csv");
  EXPECT_EQ(lines_of(first).size(), 10u);
  ASSERT_EQ(run_cli(cmd("sample", tiny(dir_, {"--sample-count", "9"}))).code, 0);
  EXPECT_EQ(slurp(dir_ / "samples_latent.csv"), first);
}

TEST_F(TrainedCli, CheckpointConfigIsReused) {
  // the saved model.ckpt.cfg supplies the architecture when flags omit it
  const auto r = run_cli({"sample", "--out-dir", dir_.string(), "--sample-count", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(TrainedCli, InterpolateTwoSteps) {
  const auto r = run_cli(cmd("interpolate", tiny(dir_, {"--interp-steps", "2", "--interp-pairs", "3"})));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir_ / "interpolate_latent.csv"));
  EXPECT_EQ(rows.size(), 1u + 3u * 2u);
}

TEST(Interpolation, WeightsAndMidpoint) {
  const auto w = cli::blend_weights(5);
  EXPECT_EQ(w, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_TRUE(std::is_sorted(w.begin(), w.end()));
  EXPECT_EQ(cli::blend_weights(2), (std::vector<double>{0.0, 1.0}));
  EXPECT_THROW(cli::blend_weights(1), ConfigError);
  const Tensor a = Tensor::matrix({{1.0, -2.0, 0.5}});
  const Tensor b = Tensor::matrix({{3.0, 4.0, -0.5}});
  const Tensor z = cli::interpolate_latents(a, b, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(z(0, c), a(0, c));
    EXPECT_EQ(z(1, c), 0.5 * (a(0, c) + b(0, c)));
    EXPECT_EQ(z(2, c), b(0, c));
  }
}

TEST_F(TrainedCli, EvalColumns) {
  const auto r = run_cli(cmd("eval", tiny(dir_)));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines_of(slurp(dir_ / "eval.csv"));
  ASSERT_EQ(rows.size(), 2u);
  std::string header;
  for (const auto& c : cli::eval_columns()) header += (header.empty() ? "" : ",") + c;
  EXPECT_EQ(rows[0], header);
  EXPECT_EQ(std::count(rows[1].begin(), rows[1].end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_GT(lines_of(slurp(dir_ / "latent_pca.csv")).size(), 1u);
}

TEST_F(TrainedCli, ReconstructNonImageDataWritesCsv) {
  const auto r = run_cli(cmd("reconstruct", tiny(dir_, {"--sample-count", "5"})));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_of(slurp(dir_ / "reconstruct.csv")).size(), 6u);
  EXPECT_FALSE(fs::exists(dir_ / "reconstruct.pgm"));
}

TEST(Cli, ImageCommandsOnMnistSubset) {
  if (!fs::exists("data/mnist/t10k-images-idx3-ubyte")) GTEST_SKIP() << "bundled MNIST subset not present";
  const auto dir = ldc::testing::scratch_dir("cli");
  const std::vector<std::string> small = {"--train-limit", "200", "--test-limit", "50", "--latent-dim", "4",
                                          "--enc-data-hidden", "16", "--enc-noise-hidden", "4",
                                          "--enc-comb-hidden", "16", "--dec-hidden", "16", "--sampler-hidden", "8",
                                          "--batch-size", "50", "--metric-samples", "20", "--out-dir", dir.string()};
  auto with = [&](std::string name, std::vector<std::string> extra) {
    auto a = cmd(std::move(name), small);
    a.insert(a.end(), extra.begin(), extra.end());
    return run_cli(a);
  };
  ASSERT_EQ(with("train", {"--epochs", "1"}).code, 0);
  ASSERT_EQ(with("sample", {"--sample-count", "1"}).code, 0);
  const auto one = metrics::parse_pgm(slurp(dir / "samples.pgm"));
  EXPECT_EQ(one.width, 28u);
  EXPECT_EQ(one.height, 28u);
  ASSERT_EQ(with("sample", {"--sample-count", "4"}).code, 0);
  EXPECT_EQ(metrics::parse_pgm(slurp(dir / "samples.pgm")).width, 57u);
  ASSERT_EQ(with("reconstruct", {}).code, 0);
  EXPECT_GT(metrics::parse_pgm(slurp(dir / "reconstruct.pgm")).width, 0u);
  ASSERT_EQ(with("interpolate", {"--interp-steps", "2", "--interp-pairs", "2"}).code, 0);
  const auto interp = metrics::parse_pgm(slurp(dir / "interpolate.pgm"));
  EXPECT_EQ(interp.width, 4u * 28u + 3u);  // original, two blends, original
  EXPECT_EQ(interp.height, 2u * 28u + 1u);
}

TEST(Cli, SvgdDemoZeroStepsEchoesInitialParticles) {
  const auto dir = ldc::testing::scratch_dir("cli");
  const auto r = run_cli({"svgd-demo", "--demo-steps", "0", "--demo-particles", "5", "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  Config c;
  c.demo_particles = 5;
  const Tensor init = cli::demo_initial_particles(c);
  const auto rows = lines_of(slurp(dir / "trajectory.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "step,particle_index,x0");
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& row = rows[i + 1];
    EXPECT_EQ(row.substr(0, row.find(',', 2) + 1), "0," + std::to_string(i) + ",");
    EXPECT_EQ(std::stod(row.substr(row.rfind(',') + 1)), init[i]);
  }
}

TEST(Cli, SvgdDemoTargets) {
  Config c;
  c.demo_step_size = 0.5;
  const Tensor g = cli::run_svgd_demo(c, nullptr);
  double mean = 0.0, var = 0.0;
  for (double v : g.data()) mean += v;
  mean /= static_cast<double>(g.size());
  for (double v : g.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(g.size());
  EXPECT_LT(std::abs(mean - 3.0), 0.1);
  EXPECT_LT(std::abs(var - 4.0) / 4.0, 0.15);

  c.demo_target = "mixture";
  const Tensor m = cli::run_svgd_demo(c, nullptr);
  const double right =
      static_cast<double>(std::count_if(m.data().begin(), m.data().end(), [](double v) { return v > 0; }));
  EXPECT_GE(right / static_cast<double>(m.size()), 0.3);
  EXPECT_LE(right / static_cast<double>(m.size()), 0.7);
}

TEST(Cli, NonFiniteTrainingExitsThree) {
  const auto dir = ldc::testing::scratch_dir("cli");
  const auto r = run_cli(cmd("train", tiny(dir, {"--epochs", "1", "--lr-encoder", "1e300", "--lr-decoder", "1e300",
                                                  "--lr-sampler", "1e300"})));
  EXPECT_EQ(r.code, 3) << r.err;
}
