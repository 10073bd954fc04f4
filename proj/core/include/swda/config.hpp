#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "swda/dsb.hpp"
#include "swda/rsw.hpp"
#include "swda/tempering.hpp"

namespace swda {

struct GridConfig {
  int fine_nx = 128;
  int fine_ny = 128;
  int coarse_nx = 32;
  int coarse_ny = 32;
  int f_max = 16;
};

struct TimeConfig {
  double dt = 1e-4;
  int fine_steps = 15000;
  int snapshot_stride = 1;
};

struct CalibrationConfig {
  double tol = 1e-8;
  int max_iter = 0;  // 0: 10 * coarse grid points
  double arcsinh_scale = 1.0;
};

struct DsbConfig {
  int k_steps = 30;
  double gamma_min = 1e-4;
  double gamma_max = 1e-2;
  TrainConfig train;
  std::string select = "best";  // "best" or a round number
  int score_samples = 2000;
};

struct DictionaryConfig {
  int size = 40000;
  double scale = 30.0;
};

struct ForecastConfig {
  int n_ens = 20;
  int total_steps = 4000;
  std::vector<int> horizons{1000, 2000, 4000};
  int record_stride = 10;
  int spaghetti_points = 4;
};

struct DaConfig {
  int n_ens = 50;
  int total_steps = 400;
  int d_obs = 1;
  double sigma_obs = 0.01;
  FilterConfig filter;
  int snapshot_stride = 5;  // assimilation cycles between ensemble snapshots; 0 disables
};

struct ExperimentConfig {
  GridConfig grid;
  PhysParams physics;
  std::string bathymetry_path;
  TimeConfig time;
  CalibrationConfig calibration;
  DsbConfig dsb;
  DictionaryConfig dictionary;
  ForecastConfig forecast;
  DaConfig da;
  std::uint64_t seed = 0;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  /// Flat section.key -> value listing of every setting.
  std::map<std::string, std::string> flatten() const;
};

/// INI file with [sections] and key = value lines. Unknown sections or keys
/// are rejected. Relative bathymetry paths resolve against the file.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

}  // namespace swda
