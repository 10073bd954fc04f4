#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swda/noise_dictionary.hpp"
#include "swda/random.hpp"
#include "swda/rsw.hpp"
#include "swda/tempering.hpp"

namespace swda {

/// Weighted particle set; each member owns a random stream.
struct Ensemble {
  std::vector<State> members;
  std::vector<double> weights;
  std::vector<RandomStream> streams;

  std::size_t size() const { return members.size(); }
  void validate() const;

  /// n identical copies of `s` with uniform weights and streams forked from seed.
  static Ensemble replicate(const State& s, int n, std::uint64_t seed);
};

struct Observation {
  std::vector<std::pair<int, int>> locations;  // (i, j) on the coarse grid
  std::vector<double> values;
  double sigma = 0.01;

  void validate(const Grid& grid) const;
};

/// d_obs points on a centred sqrt(d_obs) x sqrt(d_obs) lattice:
/// index floor((2k + 1) n / (2m)) along each axis. d_obs must be a square.
std::vector<std::pair<int, int>> observation_lattice(const Grid& grid, int d_obs);

/// Sum over locations of -(eta - y)^2 / (2 sigma^2) - log(sigma sqrt(2 pi)).
double log_likelihood(const State& s, const Observation& obs);

/// Offspring by systematic resampling; weights reset to uniform and streams
/// re-forked from the parents'.
Ensemble systematic_resample(const Ensemble& e, RandomStream& rng);

/// `steps` stochastic steps per member with a fresh dictionary draw per step
/// from the member's own stream. Weights are unchanged.
Ensemble propagate_ensemble(Ensemble e, const NoiseDictionary& dict, const PhysParams& p, double dt,
                            int steps);

/// Stochastic RSW over one assimilation window; draws are dictionary indices.
class RswWindowModel {
 public:
  using State = swda::State;
  using Draw = std::uint32_t;

  RswWindowModel(const NoiseDictionary& dict, const PhysParams& p, double dt, int window)
      : dict_(&dict), p_(&p), dt_(dt), window_(window) {}

  int window_length() const { return window_; }
  Draw draw_noise(RandomStream& rng) const { return draw_index(*dict_, rng); }
  State run_window(const State& start, std::span<const Draw> draws) const;

 private:
  const NoiseDictionary* dict_;
  const PhysParams* p_;
  double dt_;
  int window_;
};

/// One row per observed location per assimilation time.
struct CycleRecord {
  double time = 0.0;
  int location_i = 0;
  int location_j = 0;
  double truth = 0.0;
  double ensemble_mean = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double ess_min = 0.0;
  int temper_stages = 0;
};

/// Time averages at each observed location.
struct LocationSummary {
  int location_i = 0;
  int location_j = 0;
  double mean_bias = 0.0;
  double mean_abs_bias = 0.0;
  double mean_rmse = 0.0;
};

struct DaMetrics {
  std::vector<CycleRecord> records;
  std::vector<LocationSummary> locations;
  int cycles = 0;
  int failed_cycles = 0;
  double mean_acceptance = 0.0;

  const LocationSummary& best_bias() const;
  const LocationSummary& best_rmse() const;
  void summarize();
};

struct ObsSpec {
  int d_obs = 4;
  double sigma = 0.01;
};

struct AssimilationSetup {
  PhysParams physics;
  double dt = 1e-4;
  int total_steps = 400;
  FilterConfig filter;
  ObsSpec obs;
};

/// Coarse-grid truth height after `step` steps from the common start.
using TruthSource = std::function<Field(int step)>;
/// Called after each assimilation with the cycle index and posterior ensemble.
using EnsembleHook = std::function<void(int cycle, double time, const Ensemble&)>;

/// Alternates window forecasts and tempering/jittering updates against
/// synthetic observations (truth plus Gaussian noise).
DaMetrics assimilate_run(const TruthSource& truth, const Ensemble& e0, const NoiseDictionary& dict,
                         const AssimilationSetup& setup, RandomStream& rng, const EnsembleHook& hook = {});

void write_cycle_csv(std::ostream& out, std::span<const CycleRecord> records);

}  // namespace swda
