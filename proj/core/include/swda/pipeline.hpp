#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swda/config.hpp"

namespace swda {

enum class Stage { simulate, calibrate, train, generate, forecast, assimilate, metrics };

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);
/// Every stage in dependency order.
const std::vector<Stage>& all_stages();
/// Stages whose outputs `s` reads.
std::vector<Stage> stage_prerequisites(Stage s);

struct StageResult {
  Stage stage;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::filesystem::path> outputs;
};

/// --out if given, else $SWDA_OUT, else ./swda-out.
std::filesystem::path resolve_output_root(const std::optional<std::string>& cli_out);

/// Runs pipeline stages against one output directory. Every stage draws
/// from derive_seed(master seed, stage name) and appends start/finish
/// records to manifest.jsonl.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::filesystem::path out_dir, std::ostream* log = nullptr);

  StageResult run(Stage s);
  std::vector<StageResult> run_all();

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return out_; }
  std::filesystem::path path(std::string_view file) const { return out_ / file; }
  std::uint64_t stage_seed(Stage s) const;

 private:
  std::vector<std::filesystem::path> simulate();
  std::vector<std::filesystem::path> calibrate();
  std::vector<std::filesystem::path> train();
  std::vector<std::filesystem::path> generate();
  std::vector<std::filesystem::path> forecast();
  std::vector<std::filesystem::path> assimilate();
  std::vector<std::filesystem::path> metrics();

  void require_inputs(Stage s) const;
  void manifest(const std::string& json_line) const;
  template <class... Args>
  void say(const Args&... args) const;

  ExperimentConfig cfg_;
  std::filesystem::path out_;
  std::ostream* log_;
  Stage current_ = Stage::simulate;
};

}  // namespace swda
