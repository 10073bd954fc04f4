#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "swda/mlp.hpp"
#include "swda/random.hpp"

namespace swda {

/// gamma[k] is the step size of the transition k -> k+1 (gamma_{k+1}).
struct DiffusionSchedule {
  std::vector<double> gamma;

  int k_steps() const { return static_cast<int>(gamma.size()); }
  double max() const;
  double total() const;
};

/// Symmetric triangular schedule: linear from gamma_min up to gamma_max over
/// the first half, mirrored over the second half.
DiffusionSchedule make_schedule(int k_steps, double gamma_min, double gamma_max);

struct TrainConfig {
  int n_dsb_steps = 9;
  int iters_per_step = 10000;
  int batch_size = 128;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd_momentum;
  double momentum = 0.9;
  int cache_size = 256;      // trajectories per cache refresh
  int cache_refresh = 100;   // iterations between refreshes
  double loss_weight_power = 2.0;  // sample weight (gamma / gamma_max)^p
  double ema_decay = 0.0;          // 0 keeps the raw iterate; otherwise the half-step returns the EMA
  bool standardize = true;
  MlpShape net;              // dim is filled from the data

  void validate() const;
};

/// Forward/backward mean-matching networks. Both nets predict drifts:
///   F_k(x)     = x + gamma_{k+1} f(x, k)      (f = -x before the first forward fit)
///   B_{k+1}(x) = x + gamma_{k+1} b(x, k + 1)
/// Chains run in standardized coordinates.
struct DsbModel {
  DiffusionSchedule schedule;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  MeanNet forward_net;
  MeanNet backward_net;
  bool forward_trained = false;
  int round = 0;  // completed IPF rounds

  int dim() const { return static_cast<int>(mean.size()); }

  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd destandardize(const Eigen::MatrixXd& z) const;

  /// F_k applied to every column.
  Eigen::MatrixXd forward_mean(const Eigen::MatrixXd& x, int k) const;
  /// B_{k+1} applied to every column.
  Eigen::MatrixXd backward_mean(const Eigen::MatrixXd& x, int k) const;
};

/// Fresh model with zero-output nets and data standardization constants.
DsbModel init_model(const Eigen::MatrixXd& data, const DiffusionSchedule& schedule,
                    const TrainConfig& cfg);

/// Noising chain x_{k+1} = F_k(x_k) + sqrt(2 gamma_{k+1}) eps from standardized
/// columns x0. Element k of the result holds x_k.
std::vector<Eigen::MatrixXd> simulate_forward(const DsbModel& m, const Eigen::MatrixXd& x0,
                                              RandomStream& rng);
/// Denoising chain x_k = B_{k+1}(x_{k+1}) + sqrt(2 gamma_{k+1}) eps from xK.
/// Element k of the result holds x_k.
std::vector<Eigen::MatrixXd> simulate_backward(const DsbModel& m, const Eigen::MatrixXd& xK,
                                               RandomStream& rng);

std::vector<Eigen::VectorXd> forward_trajectory(const DsbModel& m, const Eigen::VectorXd& x0,
                                                RandomStream& rng);

enum class Side { backward, forward };

struct HalfStepResult {
  MeanNet net;
  bool ok = true;
  std::vector<double> losses;
  std::string message;
};

/// Mean-matching regression for one side, warm-started from that side's
/// current net. With ema_decay > 0 the returned net holds the exponential
/// moving average of the iterates. data_std holds standardized training columns (used by the
/// backward side); the forward side starts its chains from the prior.
HalfStepResult ipf_half_step(const DsbModel& m, const Eigen::MatrixXd& data_std, Side side,
                             const TrainConfig& cfg, RandomStream& rng);

using CheckpointHook = std::function<void(const DsbModel&)>;
using HalfStepHook = std::function<void(int round, Side side, const std::vector<double>& losses)>;

/// n_dsb_steps rounds of (backward, forward) half-steps on raw data columns.
/// Returns one checkpoint per round; on_round sees each as soon as it exists.
std::vector<DsbModel> train_dsb(const Eigen::MatrixXd& data, const DiffusionSchedule& schedule,
                                const TrainConfig& cfg, const CheckpointHook& on_round = {},
                                const HalfStepHook& on_half = {});

/// n raw-space samples (columns) from the backward chain.
Eigen::MatrixXd sample(const DsbModel& m, int n, RandomStream& rng);

/// Frechet distance between diagonal Gaussian fits of two column batches.
double frechet_score(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

void save_checkpoint(const DsbModel& m, const std::filesystem::path& path);
DsbModel load_checkpoint(const std::filesystem::path& path);

}  // namespace swda
