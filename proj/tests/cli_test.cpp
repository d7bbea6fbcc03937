#include "mlrn/dataset.hpp"
#include "mlrn/model.hpp"
#include "mlrn/run_config.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace mlrn;

namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun mlrn_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MLRN_CLI + "\" " + args + " 2>&1";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mlrn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // A dataset root holding `count` toy training images under HR/.
  fs::path toy_root(const std::string& name, int count, const char* split = "train") {
    const fs::path root = dir_ / name;
    fs::create_directories(root / "HR");
    int copied = 0;
    for (const fs::path& p : list_images(fs::path(MLRN_TEST_DATA) / "toy" / split / "HR")) {
      if (copied++ == count) break;
      fs::copy_file(p, root / "HR" / p.filename());
    }
    return root;
  }

  std::string tiny_train_args(const fs::path& train_root, const fs::path& val_root) {
    return "--set data.train_root=" + q(train_root) + " --set data.val_root=" + q(val_root) +
           " --set model.g=4 --set model.n_blocks=1 --set train.epochs=1 --set train.iters_per_epoch=3"
           " --set train.batch_size=2 --set train.patch_hr=16";
  }

  fs::path dir_;
};

TEST_F(CliTest, GradcheckReportsEveryOp) {
  const CliRun r = mlrn_cli("gradcheck");
  EXPECT_EQ(r.code, 0) << r.output;
  for (const char* op : {"conv2d", "relu", "concat", "add", "pixel_shuffle", "l1_loss", "end_to_end"}) {
    EXPECT_NE(r.output.find(op), std::string::npos) << op;
  }
}

TEST_F(CliTest, GradcheckTinyThresholdFails) {
  const CliRun r = mlrn_cli("gradcheck --threshold 1e-12");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("gradient check failed"), std::string::npos);
}

TEST_F(CliTest, DegradeCountsAndIdempotence) {
  const fs::path root = toy_root("ds", 5);
  const CliRun first = mlrn_cli("degrade " + q(root / "HR") + " --scales 2,4 --out " + q(dir_ / "a"));
  ASSERT_EQ(first.code, 0) << first.output;
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a")) files += e.is_regular_file();
  EXPECT_EQ(files, 10);
  EXPECT_NE(first.output.find("x2: 5 images"), std::string::npos);
  EXPECT_NE(first.output.find("x4: 5 images"), std::string::npos);

  ASSERT_EQ(mlrn_cli("degrade " + q(root / "HR") + " --scales 2,4 --out " + q(dir_ / "a")).code, 0);
  ASSERT_EQ(mlrn_cli("degrade " + q(root / "HR") + " --scales 2,4 --out " + q(dir_ / "b")).code, 0);
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a")) {
    if (e.is_regular_file()) {
      EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / fs::relative(e.path(), dir_ / "a")));
    }
  }
}

TEST_F(CliTest, DegradeReportsCrop) {
  fs::create_directories(dir_ / "odd");
  save_image(Image(97, 101, 3, 80.0), dir_ / "odd" / "odd.png");
  const CliRun r = mlrn_cli("degrade " + q(dir_ / "odd") + " --scales 4 --out " + q(dir_ / "out"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("HR 97x101 cropped to 96x100, LR 24x25"), std::string::npos) << r.output;
  const Image lr = load_image(dir_ / "out" / "LR_x4" / "odd.png");
  EXPECT_EQ(lr.height(), 24);
  EXPECT_EQ(lr.width(), 25);
}

TEST_F(CliTest, DegradeErrors) {
  EXPECT_EQ(mlrn_cli("degrade " + q(dir_ / "missing") + " --out " + q(dir_ / "o")).code, 2);
  fs::create_directories(dir_ / "mixed");
  save_image(Image(40, 40, 3, 10.0), dir_ / "mixed" / "good.png");
  std::ofstream(dir_ / "mixed" / "broken.png") << "not a png";
  const CliRun r = mlrn_cli("degrade " + q(dir_ / "mixed") + " --scales 2 --out " + q(dir_ / "o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("broken.png"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "LR_x2" / "good.png"));
}

TEST_F(CliTest, TrainConfigErrorsExitBeforeWork) {
  const CliRun unknown = mlrn_cli("train --set model.depth=3 --out " + q(dir_ / "run"));
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.output.find("model.depth"), std::string::npos);
  EXPECT_EQ(mlrn_cli("train --set model.scale=7 --out " + q(dir_ / "run")).code, 2);
  EXPECT_EQ(mlrn_cli("train --out " + q(dir_ / "run")).code, 2);  // no data.train_root
  EXPECT_FALSE(fs::exists(dir_ / "run"));
}

TEST_F(CliTest, TrainSmokeRunAndConfigEcho) {
  const fs::path train = toy_root("train", 10), val = toy_root("val", 3, "val");
  const CliRun r = mlrn_cli("train " + tiny_train_args(train, val) + " --out " + q(dir_ / "a"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("final val PSNR"), std::string::npos);

  std::ifstream log(dir_ / "a" / "train_log.csv");
  std::string line;
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 2);  // header + one epoch
  EXPECT_TRUE(fs::exists(dir_ / "a" / "checkpoints" / "epoch_0000.bin"));

  // The echoed config reproduces the run.
  const RunConfig echoed = load_run_config(dir_ / "a" / "config.json", {});
  EXPECT_EQ(echoed.model.g, 4);
  EXPECT_EQ(echoed.train.iters_per_epoch, 3);
  ASSERT_EQ(mlrn_cli("train --config " + q(dir_ / "a" / "config.json") + " --out " + q(dir_ / "b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "checkpoints" / "epoch_0000.bin"), slurp(dir_ / "b" / "checkpoints" / "epoch_0000.bin"));
}

TEST_F(CliTest, EvalBaselineIdentityAndMismatch) {
  const fs::path val = toy_root("val", 3, "val");
  const CliRun bicubic = mlrn_cli("eval --data " + q(val) + " --baseline bicubic --scale 2 --out " + q(dir_ / "bic"));
  ASSERT_EQ(bicubic.code, 0) << bicubic.output;
  EXPECT_NE(bicubic.output.find("PSNR/SSIM: "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "bic" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "bic" / "SR" / "coffee_v.png"));

  const CliRun identity = mlrn_cli("eval --data " + q(val) + " --sr-dir " + q(val / "HR") + " --out " + q(dir_ / "id"));
  ASSERT_EQ(identity.code, 0) << identity.output;
  EXPECT_NE(identity.output.find("PSNR/SSIM: inf/1.0000"), std::string::npos) << identity.output;

  MlrnConfig c;
  c.g = 4;
  c.n_blocks = 1;
  c.scale = 2;
  save_checkpoint(dir_ / "m", Model::build(c, 1), {100.0, 100.0, 100.0});
  EXPECT_EQ(mlrn_cli("eval --data " + q(val) + " --checkpoint " + q(dir_ / "m") + " --scale 4 --out " + q(dir_ / "e")).code,
            2);
  EXPECT_EQ(mlrn_cli("eval --data " + q(val) + " --out " + q(dir_ / "e")).code, 2);  // no source
  EXPECT_EQ(mlrn_cli("eval --data " + q(val) + " --baseline bicubic --mode cb --out " + q(dir_ / "e")).code, 2);
}

TEST_F(CliTest, InferShapesChannelsAndRepeatability) {
  MlrnConfig c;
  c.g = 4;
  c.n_blocks = 1;
  c.scale = 2;
  save_checkpoint(dir_ / "m", Model::build(c, 3), {110.0, 100.0, 90.0});
  Image lr(24, 24, 3);
  for (Plane& p : lr.planes)
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = (i * 37) % 256;
  save_image(lr, dir_ / "in.png");

  const CliRun r = mlrn_cli("infer --checkpoint " + q(dir_ / "m") + " " + q(dir_ / "in.png") + " " + q(dir_ / "a.png"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("24x24 -> 48x48"), std::string::npos) << r.output;
  const Image sr = load_image(dir_ / "a.png");
  EXPECT_EQ(sr.height(), 48);
  EXPECT_EQ(sr.width(), 48);
  ASSERT_EQ(mlrn_cli("infer --checkpoint " + q(dir_ / "m") + " " + q(dir_ / "in.png") + " " + q(dir_ / "b.png")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a.png"), slurp(dir_ / "b.png"));

  save_image(Image(24, 24, 1, 50.0), dir_ / "gray.png");
  const CliRun gray = mlrn_cli("infer --checkpoint " + q(dir_ / "m") + " " + q(dir_ / "gray.png") + " " + q(dir_ / "g.png"));
  EXPECT_EQ(gray.code, 2);
  EXPECT_NE(gray.output.find("channels"), std::string::npos);
  EXPECT_EQ(mlrn_cli("infer --checkpoint " + q(dir_ / "nope") + " " + q(dir_ / "in.png") + " " + q(dir_ / "x.png")).code,
            2);
}

TEST_F(CliTest, AblateTableCurvesAndRerun) {
  const fs::path train = toy_root("train", 10), val = toy_root("val", 3, "val");
  const std::string args = "ablate " + tiny_train_args(train, val) + " --seeds 5";
  const CliRun r = mlrn_cli(args + " --out " + q(dir_ / "a"));
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* v : {"N_BASE", "N_GFF", "N_RSC", "N_GFF_RSC"}) EXPECT_NE(r.output.find(v), std::string::npos);

  std::ifstream table(dir_ / "a" / "summary.txt");
  std::string header, line;
  std::getline(table, header);
  std::istringstream cols(header);
  std::vector<std::string> names;
  for (std::string s; cols >> s;) names.push_back(s);
  EXPECT_EQ(names, (std::vector<std::string>{"N_BASE", "N_GFF", "N_RSC", "N_GFF_RSC"}));
  std::string params_row;
  while (std::getline(table, line)) {
    if (line.rfind("Params", 0) == 0) params_row = line;
  }
  std::istringstream pr(params_row.substr(6));
  std::vector<Index> counts;
  for (Index n; pr >> n;) counts.push_back(n);
  ASSERT_EQ(counts.size(), 4u);
  MlrnConfig c;
  c.g = 4;
  c.n_blocks = 1;
  for (int i = 0; i < 4; ++i) {
    c.use_gff = i == 1 || i == 3;
    c.use_rsc = i >= 2;
    EXPECT_EQ(counts[i], parameter_count(c));
  }
  EXPECT_NE(counts[0], counts[1]);

  ASSERT_EQ(mlrn_cli(args + " --out " + q(dir_ / "b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "curves.csv"), slurp(dir_ / "b" / "curves.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "N_BASE" / "seed_5" / "checkpoints" / "epoch_0000.bin"),
            slurp(dir_ / "b" / "N_BASE" / "seed_5" / "checkpoints" / "epoch_0000.bin"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(mlrn_cli("").code, 2);
  EXPECT_EQ(mlrn_cli("frobnicate").code, 2);
  EXPECT_EQ(mlrn_cli("--help").code, 0);
  EXPECT_EQ(mlrn_cli("infer").code, 2);
}

}  // namespace
