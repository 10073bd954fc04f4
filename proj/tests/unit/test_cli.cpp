#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"(
[grid]
fine_nx = 16
fine_ny = 16
coarse_nx = 8
coarse_ny = 8
f_max = 4

[time]
fine_steps = 10

[calibration]
tol = 1e-2
)";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("swda-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("good.ini", kConfig);
    write("bad.ini", "[grid]\nfine_nx = 96\ncoarse_nx = 64\n");
    write("typo.ini", "[grid]\nfine_nz = 3\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream f(dir_ / name);
    f << text;
  }

  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + SWDA_CLI_PATH + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string cfg(const std::string& name) const { return "--config " + (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("simulate --help"), 0);
}

TEST_F(Cli, UsageErrorsAreConfigErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("nonsense"), 2);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run("simulate " + cfg("good.ini") + " --seed notanumber"), 2);
}

TEST_F(Cli, BadConfigExitsTwo) {
  EXPECT_EQ(run("simulate " + cfg("missing.ini")), 2);
  EXPECT_EQ(run("simulate " + cfg("bad.ini")), 2);
  EXPECT_EQ(run("simulate " + cfg("typo.ini")), 2);
}

TEST_F(Cli, MissingPrerequisiteExitsThree) {
  const auto out = dir_ / "out";
  EXPECT_EQ(run("calibrate " + cfg("good.ini") + " --out " + out.string()), 3);
  EXPECT_EQ(run("score " + cfg("good.ini") + " --out " + out.string()), 3);
}

TEST_F(Cli, StageRunsAndWritesUnderOut) {
  const auto out = dir_ / "out";
  EXPECT_EQ(run("simulate -q " + cfg("good.ini") + " --seed 3 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "fine_eta.swda"));
  EXPECT_TRUE(fs::exists(out / "manifest.jsonl"));
  EXPECT_EQ(run("calibrate -q " + cfg("good.ini") + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "dataset.swda"));
}

TEST_F(Cli, HonoursSwdaOut) {
  const auto out = dir_ / "env-out";
  EXPECT_EQ(run("simulate -q " + cfg("good.ini"), "SWDA_OUT=" + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "fine_eta.swda"));
  // --out wins over the environment.
  const auto cli_out = dir_ / "cli-out";
  EXPECT_EQ(run("simulate -q " + cfg("good.ini") + " --out " + cli_out.string(), "SWDA_OUT=" + out.string()), 0);
  EXPECT_TRUE(fs::exists(cli_out / "fine_eta.swda"));
}
