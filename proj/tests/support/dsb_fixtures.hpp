#pragma once

#include <Eigen/Dense>

#include "swda/dsb.hpp"
#include "swda/random.hpp"

namespace swda::fixtures {

/// n points from two equal blobs at (+-1, 0) with isotropic std `sd`.
inline Eigen::MatrixXd two_blobs(int n, double sd, RandomStream& rng) {
  Eigen::MatrixXd x(2, n);
  for (int i = 0; i < n; ++i) {
    x(0, i) = (rng.uniform() < 0.5 ? -1.0 : 1.0) + sd * rng.normal();
    x(1, i) = sd * rng.normal();
  }
  return x;
}

/// Desk-scale settings that learn the 2-D blob problem.
inline TrainConfig toy_train_config(int rounds, int iters, std::uint64_t seed) {
  TrainConfig c;
  c.n_dsb_steps = rounds;
  c.iters_per_step = iters;
  c.batch_size = 256;
  c.learning_rate = 1e-3;
  c.optimizer = OptimizerKind::adam;
  c.loss_weight_power = 2.0;
  c.cache_size = 512;
  c.cache_refresh = 50;
  c.seed = seed;
  c.net.hidden = 128;
  c.net.hidden_layers = 3;
  c.net.embed_freqs = 8;
  return c;
}

inline DiffusionSchedule toy_schedule() { return make_schedule(20, 1e-3, 0.1); }

}  // namespace swda::fixtures
