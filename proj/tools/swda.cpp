#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "swda/config.hpp"
#include "swda/error.hpp"
#include "swda/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kStageError = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment INI file")->required();
  cmd->add_option("--seed", o.seed, "master seed (overrides [run] seed)");
  cmd->add_option("--out", o.out, "output directory (default: $SWDA_OUT, then ./swda-out)");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

// Prints the per-round scores written by the train stage.
int print_scores(const std::filesystem::path& dir) {
  std::ifstream fid(dir / "fid.csv");
  std::ifstream meta(dir / "train.meta");
  if (!fid || !meta) {
    std::cerr << "swda: no training scores under " << dir << "; run 'swda train' first\n";
    return kStageError;
  }
  std::cout << fid.rdbuf() << meta.rdbuf();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic shallow-water data assimilation pipeline"};
  app.require_subcommand(1);
  Options opts;

  struct Entry {
    std::string name;
    std::optional<swda::Stage> stage;  // empty: all / score
    std::string help;
  };
  const std::vector<Entry> entries{
      {"simulate", swda::Stage::simulate, "fine-grid deterministic run"},
      {"calibrate", swda::Stage::calibrate, "stream-function calibration and training dataset"},
      {"train", swda::Stage::train, "DSB training with per-round scores"},
      {"generate", swda::Stage::generate, "noise dictionary from the selected checkpoint"},
      {"generate-noise", swda::Stage::generate, "alias of generate"},
      {"sample", swda::Stage::generate, "alias of generate"},
      {"forecast", swda::Stage::forecast, "ensemble forecasts, CRPS and rank histograms"},
      {"assimilate", swda::Stage::assimilate, "tempering/jittering particle filter"},
      {"metrics", swda::Stage::metrics, "collect metrics.json"},
      {"score", std::nullopt, "print per-round checkpoint scores"},
      {"all", std::nullopt, "run every stage in order"},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> cmds;
  for (const auto& e : entries) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, opts);
    cmds.emplace_back(cmd, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const Entry* chosen = nullptr;
  for (auto [cmd, e] : cmds)
    if (cmd->parsed()) chosen = e;

  swda::ExperimentConfig cfg;
  try {
    cfg = swda::load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();
  } catch (const swda::Error& e) {
    std::cerr << "swda: config error: " << e.what() << '\n';
    return kConfigError;
  }

  const auto out = swda::resolve_output_root(opts.out);
  if (chosen->name == "score") return print_scores(out);

  try {
    swda::Pipeline pipeline(cfg, out, opts.quiet ? nullptr : &std::cerr);
    if (chosen->stage) {
      pipeline.run(*chosen->stage);
    } else {
      pipeline.run_all();
    }
  } catch (const swda::ConfigError& e) {
    std::cerr << "swda: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "swda: " << chosen->name << " failed: " << e.what() << '\n';
    return kStageError;
  }
  return kOk;
}
