#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swda/calibration.hpp"
#include "swda/config.hpp"
#include "swda/error.hpp"
#include "swda/noise_dictionary.hpp"
#include "swda/pipeline.hpp"
#include "swda/random.hpp"
#include "swda/snapshot_io.hpp"

using namespace swda;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"(
[grid]
fine_nx = 16
fine_ny = 16
coarse_nx = 8
coarse_ny = 8
f_max = 4

[time]
dt = 1e-4
fine_steps = 60

[calibration]
tol = 1e-2
arcsinh_scale = 1

[dsb]
k_steps = 6
gamma_min = 0.01
gamma_max = 0.1
rounds = 2
iters = 20
batch = 16
cache_size = 16
cache_refresh = 10
optimizer = adam
lr = 1e-3
hidden = 16
hidden_layers = 2
embed_freqs = 2
score_samples = 20

[dictionary]
size = 20
scale = 1e-3

[forecast]
n_ens = 3
total_steps = 40
horizons = 20, 40
record_stride = 10
spaghetti_points = 2

[filter]
n_ens = 6
total_steps = 20
window = 10
d_obs = 1
snapshot_stride = 1

[run]
seed = 5
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("swda-pipe-" + name);
  fs::remove_all(d);
  return d;
}

// One full run shared by the read-only checks below.
class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fresh_dir("shared"));
    results_ = new std::vector<StageResult>;
    Pipeline p(parse_config(kTinyConfig), *dir_);
    *results_ = p.run_all();
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete results_;
  }
  static fs::path* dir_;
  static std::vector<StageResult>* results_;
};

fs::path* PipelineRun::dir_ = nullptr;
std::vector<StageResult>* PipelineRun::results_ = nullptr;

}  // namespace

TEST(Stages, NamesRoundTripAndGraphIsAcyclic) {
  const auto& all = all_stages();
  ASSERT_EQ(all.size(), 7u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(parse_stage(stage_name(all[i])), all[i]);
    for (Stage pre : stage_prerequisites(all[i])) {
      const auto at = std::find(all.begin(), all.end(), pre) - all.begin();
      EXPECT_LT(static_cast<std::size_t>(at), i);
    }
  }
  EXPECT_FALSE(parse_stage("bogus"));
  EXPECT_TRUE(stage_prerequisites(Stage::simulate).empty());
}

TEST(Stages, OutputRootResolution) {
  ::setenv("SWDA_OUT", "/tmp/from-env", 1);
  EXPECT_EQ(resolve_output_root(std::string("/tmp/cli")), fs::path("/tmp/cli"));
  EXPECT_EQ(resolve_output_root(std::nullopt), fs::path("/tmp/from-env"));
  ::unsetenv("SWDA_OUT");
  EXPECT_EQ(resolve_output_root(std::nullopt), fs::path("swda-out"));
}

TEST(Stages, SeedsAreDerivedPerStage) {
  Pipeline p(parse_config(kTinyConfig), fresh_dir("seeds"));
  EXPECT_EQ(p.stage_seed(Stage::train), derive_seed(5, "train"));
  EXPECT_NE(p.stage_seed(Stage::train), p.stage_seed(Stage::generate));
}

TEST(Stages, MissingDependencyFailsCleanly) {
  auto dir = fresh_dir("deps");
  Pipeline p(parse_config(kTinyConfig), dir);
  EXPECT_THROW(p.run(Stage::calibrate), StageError);
  EXPECT_THROW(p.run(Stage::metrics), StageError);
  EXPECT_FALSE(fs::exists(dir / "dataset.swda"));
  fs::remove_all(dir);
}

TEST_F(PipelineRun, EveryStageRanInOrder) {
  ASSERT_EQ(results_->size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ((*results_)[i].stage, all_stages()[i]);
    EXPECT_FALSE((*results_)[i].outputs.empty());
    for (const auto& f : (*results_)[i].outputs) EXPECT_TRUE(fs::exists(f)) << f;
  }
}

TEST_F(PipelineRun, ManifestHasStartAndFinishPerStage) {
  const fs::path m = *dir_ / "manifest.jsonl";
  EXPECT_EQ(line_count(m), 14u);
  const std::string text = slurp(m);
  EXPECT_NE(text.find("\"status\":\"ok\""), std::string::npos);
  EXPECT_NE(text.find("\"seed_derivation\""), std::string::npos);
  EXPECT_NE(text.find("\"wall_seconds\""), std::string::npos);
}

TEST_F(PipelineRun, SimulateWritesEverySnapshot) {
  SnapshotReader r(*dir_ / "fine_eta.swda");
  EXPECT_EQ(r.count(), 61u);
  EXPECT_EQ(r.grid(), Grid(16, 16));
  EXPECT_EQ(read_snapshot(*dir_ / "fine_state_final.swda").size(), 3u);
}

TEST_F(PipelineRun, CalibrationDatasetHasOneSampleFewerThanSnapshots) {
  auto d = load_dataset(*dir_ / "dataset.swda", *dir_ / "dataset.meta");
  EXPECT_EQ(d.count(), 60u);
  EXPECT_EQ(d.dim(), 64u);
  EXPECT_GE(d.samples.minCoeff(), 0.0);
  EXPECT_LE(d.samples.maxCoeff(), 1.0);
  EXPECT_EQ(first_line(*dir_ / "calibration.csv"), "index,time,residual,iterations,converged");
  EXPECT_EQ(line_count(*dir_ / "calibration.csv"), 61u);
}

TEST_F(PipelineRun, TrainingRecordsScoresPerRound) {
  EXPECT_EQ(first_line(*dir_ / "fid.csv"), "round,score");
  EXPECT_EQ(line_count(*dir_ / "fid.csv"), 3u);
  EXPECT_TRUE(fs::exists(*dir_ / "dsb_round_1.ckpt"));
  EXPECT_TRUE(fs::exists(*dir_ / "dsb_round_2.ckpt"));
  EXPECT_EQ(first_line(*dir_ / "train_loss.csv"), "round,side,iteration,loss");
}

TEST_F(PipelineRun, DictionaryMatchesConfig) {
  auto d = load_dictionary(*dir_ / "dictionary.swda", *dir_ / "dictionary.meta");
  EXPECT_EQ(d.size(), 20u);
  EXPECT_EQ(d.scale, 1e-3);
  EXPECT_EQ(d.grid, Grid(8, 8));
}

TEST_F(PipelineRun, ForecastCsvs) {
  EXPECT_EQ(first_line(*dir_ / "forecast_crps.csv"), "horizon,variable,crps");
  EXPECT_EQ(line_count(*dir_ / "forecast_crps.csv"), 1u + 2u * 3u);
  EXPECT_EQ(first_line(*dir_ / "forecast_rank.csv"), "horizon,variable,rank,count");
  EXPECT_EQ(line_count(*dir_ / "forecast_rank.csv"), 1u + 2u * 3u * 4u);
  EXPECT_EQ(first_line(*dir_ / "forecast_spaghetti.csv").substr(0, 40), "step,time,location_i,location_j,truth,me");
}

TEST_F(PipelineRun, AssimilationCsvs) {
  EXPECT_EQ(first_line(*dir_ / "da_cycles.csv"),
            "time,location_i,location_j,ensemble_mean,bias,rmse,ess_min,temper_stages");
  // 20 steps with a 10-step window and one observed point.
  EXPECT_EQ(line_count(*dir_ / "da_cycles.csv"), 3u);
  EXPECT_EQ(first_line(*dir_ / "da_summary.csv"), "location_i,location_j,mean_bias,mean_abs_bias,mean_rmse");
  auto snap = read_snapshot(*dir_ / "da_ensemble_c0.swda");
  ASSERT_EQ(snap.size(), 7u);
  EXPECT_EQ(snap[0].name, "truth_eta");
}

TEST_F(PipelineRun, MetricsJson) {
  const std::string j = slurp(*dir_ / "metrics.json");
  for (const char* key : {"\"dsb\"", "\"forecast\"", "\"assimilation\"", "\"selected_round\"", "\"seed\""})
    EXPECT_NE(j.find(key), std::string::npos) << key;
}

TEST_F(PipelineRun, RerunIsBitwiseIdentical) {
  auto other = fresh_dir("rerun");
  Pipeline p(parse_config(kTinyConfig), other);
  p.run_all();
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(*dir_)) {
    const auto name = e.path().filename();
    if (name == "manifest.jsonl") continue;
    ASSERT_TRUE(fs::exists(other / name)) << name;
    EXPECT_EQ(slurp(e.path()), slurp(other / name)) << name;
    ++compared;
  }
  EXPECT_GT(compared, 20u);
  fs::remove_all(other);
}

TEST_F(PipelineRun, SingleStageRerunIsIdentical) {
  const std::string before = slurp(*dir_ / "dictionary.swda");
  Pipeline p(parse_config(kTinyConfig), *dir_);
  p.run(Stage::generate);
  EXPECT_EQ(slurp(*dir_ / "dictionary.swda"), before);
}
