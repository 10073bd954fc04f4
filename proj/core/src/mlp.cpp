#include "swda/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "swda/error.hpp"

namespace swda {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) {
  return (z.array() * sigmoid(z.array())).matrix();
}

Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd s = sigmoid(z.array());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) detail::put_f64(out, m(r, c));
}

Eigen::MatrixXd get_matrix(std::istream& in) {
  const auto rows = detail::get<std::uint32_t>(in);
  const auto cols = detail::get<std::uint32_t>(in);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = detail::get_f64(in);
  return m;
}

}  // namespace

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  for (const auto& m : w) z.w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b) z.b.push_back(Eigen::VectorXd::Zero(v.size()));
  return z;
}

bool MlpParams::all_finite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

std::size_t MlpParams::count() const {
  std::size_t n = 0;
  for (const auto& m : w) n += static_cast<std::size_t>(m.size());
  for (const auto& v : b) n += static_cast<std::size_t>(v.size());
  return n;
}

Eigen::MatrixXd step_embedding(std::span<const int> steps, int freqs) {
  Eigen::MatrixXd e(2 * freqs, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t c = 0; c < steps.size(); ++c) {
    for (int j = 0; j < freqs; ++j) {
      const double omega = std::pow(1000.0, -static_cast<double>(j) / freqs);
      const double a = omega * steps[c];
      e(j, static_cast<Eigen::Index>(c)) = std::sin(a);
      e(freqs + j, static_cast<Eigen::Index>(c)) = std::cos(a);
    }
  }
  return e;
}

MeanNet::MeanNet(const MlpShape& shape, RandomStream& rng) : shape_(shape) {
  if (shape.dim <= 0 || shape.hidden <= 0 || shape.hidden_layers <= 0 || shape.embed_freqs < 0)
    throw InvalidArgument("invalid network shape");
  auto init = [&rng](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = scale * rng.normal();
    return m;
  };
  params_.w.push_back(init(shape.hidden, shape.dim + shape.embed_dim()));
  params_.b.push_back(Eigen::VectorXd::Zero(shape.hidden));
  for (int l = 1; l < shape.hidden_layers; ++l) {
    params_.w.push_back(init(shape.hidden, shape.hidden));
    params_.b.push_back(Eigen::VectorXd::Zero(shape.hidden));
  }
  params_.w.push_back(Eigen::MatrixXd::Zero(shape.dim, shape.hidden));
  params_.b.push_back(Eigen::VectorXd::Zero(shape.dim));
}

MeanNet::MeanNet(const MlpShape& shape, MlpParams params) : shape_(shape), params_(std::move(params)) {
  const auto layers = static_cast<std::size_t>(shape.hidden_layers) + 1;
  if (params_.w.size() != layers || params_.b.size() != layers)
    throw InvalidArgument("parameter count does not match network shape");
  if (params_.w.front().cols() != shape.dim + shape.embed_dim() || params_.w.back().rows() != shape.dim)
    throw InvalidArgument("parameter shapes do not match network shape");
}

Eigen::MatrixXd MeanNet::forward(const Eigen::MatrixXd& x, std::span<const int> steps) const {
  if (x.rows() != shape_.dim || static_cast<std::size_t>(x.cols()) != steps.size())
    throw InvalidArgument("MeanNet::forward: input shape mismatch");
  Eigen::MatrixXd in(shape_.dim + shape_.embed_dim(), x.cols());
  in.topRows(shape_.dim) = x;
  in.bottomRows(shape_.embed_dim()) = step_embedding(steps, shape_.embed_freqs);
  const std::size_t last = params_.w.size() - 1;
  Eigen::MatrixXd h = silu((params_.w[0] * in).colwise() + params_.b[0]);
  for (std::size_t l = 1; l < last; ++l) h += silu((params_.w[l] * h).colwise() + params_.b[l]);
  return (params_.w[last] * h).colwise() + params_.b[last];
}

double MeanNet::loss_and_gradient(const Eigen::MatrixXd& x, std::span<const int> steps,
                                  const Eigen::MatrixXd& target, const Eigen::VectorXd& weight,
                                  MlpParams& grad) const {
  const Eigen::Index batch = x.cols();
  if (x.rows() != shape_.dim || static_cast<std::size_t>(batch) != steps.size() ||
      target.rows() != x.rows() || target.cols() != batch || weight.size() != batch)
    throw InvalidArgument("MeanNet::loss_and_gradient: shape mismatch");

  const std::size_t last = params_.w.size() - 1;
  Eigen::MatrixXd in(shape_.dim + shape_.embed_dim(), batch);
  in.topRows(shape_.dim) = x;
  in.bottomRows(shape_.embed_dim()) = step_embedding(steps, shape_.embed_freqs);

  std::vector<Eigen::MatrixXd> z(last);
  std::vector<Eigen::MatrixXd> h(last);
  z[0] = (params_.w[0] * in).colwise() + params_.b[0];
  h[0] = silu(z[0]);
  for (std::size_t l = 1; l < last; ++l) {
    z[l] = (params_.w[l] * h[l - 1]).colwise() + params_.b[l];
    h[l] = h[l - 1] + silu(z[l]);
  }
  const Eigen::MatrixXd out = (params_.w[last] * h[last - 1]).colwise() + params_.b[last];

  const double norm = 1.0 / (static_cast<double>(batch) * shape_.dim);
  const Eigen::MatrixXd err = out - target;
  const double loss = norm * (err.colwise().squaredNorm().transpose().array() * weight.array()).sum();

  if (grad.w.size() != params_.w.size()) grad = params_.zeros_like();
  Eigen::MatrixXd d = err * (2.0 * norm * weight).asDiagonal();
  grad.w[last].noalias() = d * h[last - 1].transpose();
  grad.b[last] = d.rowwise().sum();
  Eigen::MatrixXd dh = params_.w[last].transpose() * d;
  for (std::size_t l = last - 1; l >= 1; --l) {
    const Eigen::MatrixXd dz = dh.cwiseProduct(silu_grad(z[l]));
    grad.w[l].noalias() = dz * h[l - 1].transpose();
    grad.b[l] = dz.rowwise().sum();
    dh.noalias() += params_.w[l].transpose() * dz;
  }
  const Eigen::MatrixXd dz0 = dh.cwiseProduct(silu_grad(z[0]));
  grad.w[0].noalias() = dz0 * in.transpose();
  grad.b[0] = dz0.rowwise().sum();
  return loss;
}

void MeanNet::write(std::ostream& out) const {
  detail::put<std::int32_t>(out, shape_.dim);
  detail::put<std::int32_t>(out, shape_.hidden);
  detail::put<std::int32_t>(out, shape_.hidden_layers);
  detail::put<std::int32_t>(out, shape_.embed_freqs);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.w.size()));
  for (std::size_t l = 0; l < params_.w.size(); ++l) {
    put_matrix(out, params_.w[l]);
    put_matrix(out, params_.b[l]);
  }
}

MeanNet MeanNet::read(std::istream& in) {
  MlpShape shape;
  shape.dim = detail::get<std::int32_t>(in);
  shape.hidden = detail::get<std::int32_t>(in);
  shape.hidden_layers = detail::get<std::int32_t>(in);
  shape.embed_freqs = detail::get<std::int32_t>(in);
  const auto layers = detail::get<std::uint32_t>(in);
  MlpParams p;
  for (std::uint32_t l = 0; l < layers; ++l) {
    p.w.push_back(get_matrix(in));
    Eigen::MatrixXd b = get_matrix(in);
    if (b.cols() != 1) throw FormatError("bias tensor is not a vector");
    p.b.push_back(b.col(0));
  }
  try {
    return MeanNet(shape, std::move(p));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("network tensors: ") + e.what());
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double momentum)
    : kind_(kind), lr_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

void Optimizer::step(MlpParams& params, const MlpParams& grad) {
  if (m_.w.empty()) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  ++t_;
  if (kind_ == OptimizerKind::sgd_momentum) {
    for (std::size_t l = 0; l < params.w.size(); ++l) {
      m_.w[l] = momentum_ * m_.w[l] + grad.w[l];
      m_.b[l] = momentum_ * m_.b[l] + grad.b[l];
      params.w[l] -= lr_ * m_.w[l];
      params.b[l] -= lr_ * m_.b[l];
    }
    return;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    update(params.w[l], m_.w[l], v_.w[l], grad.w[l]);
    update(params.b[l], m_.b[l], v_.b[l], grad.b[l]);
  }
}

}  // namespace swda
