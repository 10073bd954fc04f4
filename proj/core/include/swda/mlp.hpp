#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "swda/random.hpp"

namespace swda {

struct MlpShape {
  int dim = 0;            // sample dimension (input and output)
  int hidden = 512;       // width of every hidden layer
  int hidden_layers = 3;  // first layer plus (hidden_layers - 1) residual layers
  int embed_freqs = 16;   // timestep embedding uses sin/cos at this many frequencies

  int embed_dim() const { return 2 * embed_freqs; }
  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Weights and biases of every linear layer, input layer first. Also used
/// for gradients and optimizer state.
struct MlpParams {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  MlpParams zeros_like() const;
  bool all_finite() const;
  std::size_t count() const;
};

/// Sinusoidal embedding of integer diffusion steps, one column per step.
Eigen::MatrixXd step_embedding(std::span<const int> steps, int freqs);

/// Residual fully connected network (x, step) -> R^dim with SiLU
/// activations:
///   h0 = silu(W0 [x; emb(step)] + b0)
///   hl = h(l-1) + silu(Wl h(l-1) + bl)
///   out = Wout h + bout
/// The output layer starts at zero so a fresh net predicts 0.
class MeanNet {
 public:
  MeanNet() = default;
  MeanNet(const MlpShape& shape, RandomStream& rng);
  MeanNet(const MlpShape& shape, MlpParams params);

  const MlpShape& shape() const { return shape_; }
  const MlpParams& params() const { return params_; }
  MlpParams& params() { return params_; }

  /// x is dim x batch; steps has one entry per column.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, std::span<const int> steps) const;

  /// Weighted mean-squared error
  ///   sum_b weight_b * ||out_b - target_b||^2 / (batch * dim)
  /// and its gradient with respect to every parameter.
  double loss_and_gradient(const Eigen::MatrixXd& x, std::span<const int> steps,
                           const Eigen::MatrixXd& target, const Eigen::VectorXd& weight,
                           MlpParams& grad) const;

  void write(std::ostream& out) const;
  static MeanNet read(std::istream& in);

 private:
  MlpShape shape_;
  MlpParams params_;
};

enum class OptimizerKind { sgd_momentum, adam };

/// In-place parameter update from a gradient.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, double momentum = 0.9);
  void step(MlpParams& params, const MlpParams& grad);

 private:
  OptimizerKind kind_;
  double lr_;
  double momentum_;
  long t_ = 0;
  MlpParams m_;
  MlpParams v_;
};

}  // namespace swda
