#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "swda/calibration.hpp"
#include "swda/dsb.hpp"
#include "swda/field_grid.hpp"
#include "swda/random.hpp"
#include "swda/rsw.hpp"

namespace swda {

/// Generated stream functions after inverse transform and clipping.
/// Samples are stored unscaled; `scale` is applied when drawing.
struct NoiseDictionary {
  Grid grid;
  std::vector<Field> samples;
  Field local_mean;
  Field local_std;
  double scale = 1.0;

  std::size_t size() const { return samples.size(); }
  /// scale * samples[index]
  Field scaled(std::size_t index) const;
};

/// Pointwise mean and population std across `samples`, then clip each
/// sample to mean +- std at every point.
NoiseDictionary make_dictionary(std::vector<Field> samples, double scale);

/// Draw n samples from the model in batches, invert the dataset transform,
/// and clip.
NoiseDictionary build_dictionary(const DsbModel& model, const TrainingDataset& d, int n, double scale,
                                 RandomStream& rng, int batch = 1000);

/// Uniform index with replacement.
std::uint32_t draw_index(const NoiseDictionary& dict, RandomStream& rng);
Field draw(const NoiseDictionary& dict, RandomStream& rng);

/// Transport-noise increment of the state for zeta = grad_perp(psi):
///   eta: -grad(eta).zeta
///   u:   -(zeta.grad)u - (grad zeta).u - (f/Ro) z x zeta
StateIncrement state_increment(const State& s, const Field& psi, const PhysParams& p);

void save_dictionary(const NoiseDictionary& d, const std::filesystem::path& swda_path,
                     const std::filesystem::path& meta_path);
NoiseDictionary load_dictionary(const std::filesystem::path& swda_path,
                                const std::filesystem::path& meta_path);

}  // namespace swda
