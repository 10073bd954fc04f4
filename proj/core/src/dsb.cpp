#include "swda/dsb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

#include "binary_io.hpp"
#include "swda/error.hpp"

namespace swda {

namespace {

constexpr std::array<char, 4> kCheckpointMagic = {'S', 'W', 'D', 'M'};
constexpr std::uint16_t kCheckpointVersion = 1;

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
  return m;
}

std::vector<int> constant_steps(Eigen::Index n, int k) {
  return std::vector<int>(static_cast<std::size_t>(n), k);
}

void require_finite(const Eigen::MatrixXd& x, const char* what, int k) {
  if (!x.allFinite())
    throw NumericalError(std::string(what) + ": non-finite state at diffusion step " + std::to_string(k));
}

// Regression pairs for one side, built from cache_size fresh chains.
struct PairCache {
  Eigen::MatrixXd inputs;
  std::vector<int> steps;
  Eigen::MatrixXd targets;
  Eigen::VectorXd weights;
};

PairCache build_cache(const DsbModel& m, const Eigen::MatrixXd& data_std, Side side,
                      const TrainConfig& cfg, RandomStream& rng) {
  const int K = m.schedule.k_steps();
  const Eigen::Index n = cfg.cache_size;
  const Eigen::Index d = m.dim();
  const double gmax = m.schedule.max();

  std::vector<Eigen::MatrixXd> chain;
  if (side == Side::backward) {
    Eigen::MatrixXd x0(d, n);
    for (Eigen::Index c = 0; c < n; ++c)
      x0.col(c) = data_std.col(static_cast<Eigen::Index>(rng.index(data_std.cols())));
    chain = simulate_forward(m, x0, rng);
  } else {
    chain = simulate_backward(m, normal_matrix(d, n, rng), rng);
  }

  PairCache cache;
  cache.inputs.resize(d, n * K);
  cache.targets.resize(d, n * K);
  cache.weights.resize(n * K);
  cache.steps.resize(static_cast<std::size_t>(n * K));
  for (int k = 0; k < K; ++k) {
    const double g = m.schedule.gamma[static_cast<std::size_t>(k)];
    const auto& xk = chain[static_cast<std::size_t>(k)];
    const auto& xk1 = chain[static_cast<std::size_t>(k) + 1];
    Eigen::MatrixXd target;
    if (side == Side::backward) {
      // (F_k(x_k) - F_k(x_{k+1})) / gamma
      target = (m.forward_mean(xk, k) - m.forward_mean(xk1, k)) / g;
      cache.inputs.middleCols(k * n, n) = xk1;
    } else {
      // (B_{k+1}(x_{k+1}) - B_{k+1}(x_k)) / gamma
      target = (m.backward_mean(xk1, k) - m.backward_mean(xk, k)) / g;
      cache.inputs.middleCols(k * n, n) = xk;
    }
    cache.targets.middleCols(k * n, n) = target;
    cache.weights.segment(k * n, n).setConstant(std::pow(g / gmax, cfg.loss_weight_power));
    const int step = side == Side::backward ? k + 1 : k;
    std::fill_n(cache.steps.begin() + k * n, n, step);
  }
  return cache;
}

}  // namespace

double DiffusionSchedule::max() const {
  if (gamma.empty()) throw InvalidArgument("empty diffusion schedule");
  return *std::max_element(gamma.begin(), gamma.end());
}

double DiffusionSchedule::total() const { return std::accumulate(gamma.begin(), gamma.end(), 0.0); }

DiffusionSchedule make_schedule(int k_steps, double gamma_min, double gamma_max) {
  if (k_steps < 2) throw InvalidArgument("make_schedule: k_steps must be at least 2");
  if (!(gamma_min > 0.0) || !(gamma_max >= gamma_min) || !std::isfinite(gamma_max))
    throw InvalidArgument("make_schedule: need 0 < gamma_min <= gamma_max");
  DiffusionSchedule s;
  s.gamma.resize(static_cast<std::size_t>(k_steps));
  const int half = (k_steps + 1) / 2;
  for (int i = 0; i < half; ++i) {
    const double t = half > 1 ? static_cast<double>(i) / (half - 1) : 0.0;
    const double g = gamma_min + (gamma_max - gamma_min) * t;
    s.gamma[static_cast<std::size_t>(i)] = g;
    s.gamma[static_cast<std::size_t>(k_steps - 1 - i)] = g;
  }
  return s;
}

void TrainConfig::validate() const {
  if (n_dsb_steps < 1 || iters_per_step < 0 || batch_size < 1 || cache_size < 1 || cache_refresh < 1)
    throw InvalidArgument("TrainConfig: counts must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidArgument("TrainConfig: momentum must lie in [0, 1)");
  if (ema_decay < 0.0 || ema_decay >= 1.0) throw InvalidArgument("TrainConfig: ema_decay must lie in [0, 1)");
}

Eigen::MatrixXd DsbModel::standardize(const Eigen::MatrixXd& x) const {
  return (x.colwise() - mean).array().colwise() / std.array();
}

Eigen::MatrixXd DsbModel::destandardize(const Eigen::MatrixXd& z) const {
  return (z.array().colwise() * std.array()).matrix().colwise() + mean;
}

Eigen::MatrixXd DsbModel::forward_mean(const Eigen::MatrixXd& x, int k) const {
  const double g = schedule.gamma[static_cast<std::size_t>(k)];
  if (!forward_trained) return (1.0 - g) * x;
  const auto steps = constant_steps(x.cols(), k);
  return x + g * forward_net.forward(x, steps);
}

Eigen::MatrixXd DsbModel::backward_mean(const Eigen::MatrixXd& x, int k) const {
  const double g = schedule.gamma[static_cast<std::size_t>(k)];
  const auto steps = constant_steps(x.cols(), k + 1);
  return x + g * backward_net.forward(x, steps);
}

DsbModel init_model(const Eigen::MatrixXd& data, const DiffusionSchedule& schedule,
                    const TrainConfig& cfg) {
  if (data.cols() < 1 || data.rows() < 1) throw InvalidArgument("init_model: empty dataset");
  if (!data.allFinite()) throw InvalidArgument("init_model: non-finite data");
  if (schedule.k_steps() < 1) throw InvalidArgument("init_model: empty schedule");
  DsbModel m;
  m.schedule = schedule;
  const Eigen::Index d = data.rows();
  if (cfg.standardize) {
    m.mean = data.rowwise().mean();
    m.std = ((data.colwise() - m.mean).array().square().rowwise().mean()).sqrt();
    for (Eigen::Index i = 0; i < d; ++i)
      if (m.std(i) < 1e-12) m.std(i) = 1.0;
  } else {
    m.mean = Eigen::VectorXd::Zero(d);
    m.std = Eigen::VectorXd::Ones(d);
  }
  MlpShape shape = cfg.net;
  shape.dim = static_cast<int>(d);
  RandomStream fwd(derive_seed(cfg.seed, "init-forward"));
  RandomStream bwd(derive_seed(cfg.seed, "init-backward"));
  m.forward_net = MeanNet(shape, fwd);
  m.backward_net = MeanNet(shape, bwd);
  return m;
}

std::vector<Eigen::MatrixXd> simulate_forward(const DsbModel& m, const Eigen::MatrixXd& x0,
                                              RandomStream& rng) {
  const int K = m.schedule.k_steps();
  std::vector<Eigen::MatrixXd> chain;
  chain.reserve(static_cast<std::size_t>(K) + 1);
  chain.push_back(x0);
  for (int k = 0; k < K; ++k) {
    const double g = m.schedule.gamma[static_cast<std::size_t>(k)];
    Eigen::MatrixXd next = m.forward_mean(chain.back(), k) +
                           std::sqrt(2.0 * g) * normal_matrix(x0.rows(), x0.cols(), rng);
    require_finite(next, "forward chain", k + 1);
    chain.push_back(std::move(next));
  }
  return chain;
}

std::vector<Eigen::MatrixXd> simulate_backward(const DsbModel& m, const Eigen::MatrixXd& xK,
                                               RandomStream& rng) {
  const int K = m.schedule.k_steps();
  std::vector<Eigen::MatrixXd> chain(static_cast<std::size_t>(K) + 1);
  chain[static_cast<std::size_t>(K)] = xK;
  for (int k = K - 1; k >= 0; --k) {
    const double g = m.schedule.gamma[static_cast<std::size_t>(k)];
    Eigen::MatrixXd prev = m.backward_mean(chain[static_cast<std::size_t>(k) + 1], k) +
                           std::sqrt(2.0 * g) * normal_matrix(xK.rows(), xK.cols(), rng);
    require_finite(prev, "backward chain", k);
    chain[static_cast<std::size_t>(k)] = std::move(prev);
  }
  return chain;
}

std::vector<Eigen::VectorXd> forward_trajectory(const DsbModel& m, const Eigen::VectorXd& x0,
                                                RandomStream& rng) {
  if (x0.size() != m.dim()) throw InvalidArgument("forward_trajectory: dimension mismatch");
  const auto chain = simulate_forward(m, x0, rng);
  std::vector<Eigen::VectorXd> out;
  out.reserve(chain.size());
  for (const auto& x : chain) out.emplace_back(x.col(0));
  return out;
}

HalfStepResult ipf_half_step(const DsbModel& m, const Eigen::MatrixXd& data_std, Side side,
                             const TrainConfig& cfg, RandomStream& rng) {
  cfg.validate();
  if (side == Side::backward && (data_std.cols() < 1 || data_std.rows() != m.dim()))
    throw InvalidArgument("ipf_half_step: data does not match model dimension");

  HalfStepResult result;
  result.net = side == Side::backward ? m.backward_net : m.forward_net;
  if (cfg.iters_per_step == 0) return result;

  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.momentum);
  MlpParams grad;
  PairCache cache;
  const Eigen::Index batch = cfg.batch_size;
  Eigen::MatrixXd xb(m.dim(), batch);
  Eigen::MatrixXd tb(m.dim(), batch);
  Eigen::VectorXd wb(batch);
  std::vector<int> sb(static_cast<std::size_t>(batch));
  result.losses.reserve(static_cast<std::size_t>(cfg.iters_per_step));
  std::optional<MlpParams> ema;
  if (cfg.ema_decay > 0.0) ema = result.net.params();
  MlpParams last_good = result.net.params();

  for (int it = 0; it < cfg.iters_per_step; ++it) {
    if (it % cfg.cache_refresh == 0) {
      // Targets come from the opposite side, which stays frozen here.
      cache = build_cache(m, data_std, side, cfg, rng);
    }
    for (Eigen::Index c = 0; c < batch; ++c) {
      const auto idx = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(cache.inputs.cols())));
      xb.col(c) = cache.inputs.col(idx);
      tb.col(c) = cache.targets.col(idx);
      wb(c) = cache.weights(idx);
      sb[static_cast<std::size_t>(c)] = cache.steps[static_cast<std::size_t>(idx)];
    }
    const double loss = result.net.loss_and_gradient(xb, sb, tb, wb, grad);
    if (!std::isfinite(loss) || !grad.all_finite() || !result.net.params().all_finite()) {
      result.ok = false;
      result.message = "non-finite loss at iteration " + std::to_string(it);
      if (!result.net.params().all_finite()) result.net.params() = std::move(last_good);
      return result;
    }
    result.losses.push_back(loss);
    last_good = result.net.params();
    opt.step(result.net.params(), grad);
    if (ema) {
      auto& cur = result.net.params();
      for (std::size_t l = 0; l < cur.w.size(); ++l) {
        ema->w[l] = cfg.ema_decay * ema->w[l] + (1.0 - cfg.ema_decay) * cur.w[l];
        ema->b[l] = cfg.ema_decay * ema->b[l] + (1.0 - cfg.ema_decay) * cur.b[l];
      }
    }
  }
  if (ema) result.net.params() = std::move(*ema);
  if (!result.net.params().all_finite()) {
    result.ok = false;
    result.message = "non-finite parameters after training";
    result.net = side == Side::backward ? m.backward_net : m.forward_net;
  }
  return result;
}

std::vector<DsbModel> train_dsb(const Eigen::MatrixXd& data, const DiffusionSchedule& schedule,
                                const TrainConfig& cfg, const CheckpointHook& on_round,
                                const HalfStepHook& on_half) {
  cfg.validate();
  DsbModel model = init_model(data, schedule, cfg);
  const Eigen::MatrixXd data_std = model.standardize(data);
  RandomStream rng(derive_seed(cfg.seed, "ipf"));
  std::vector<DsbModel> checkpoints;
  for (int r = 0; r < cfg.n_dsb_steps; ++r) {
    for (Side side : {Side::backward, Side::forward}) {
      RandomStream half = rng.fork(static_cast<std::uint64_t>(2 * r + (side == Side::forward)));
      HalfStepResult res = ipf_half_step(model, data_std, side, cfg, half);
      if (!res.ok)
        throw NumericalError("DSB round " + std::to_string(r) +
                             (side == Side::backward ? " backward" : " forward") +
                             " half-step failed: " + res.message);
      if (on_half) on_half(r, side, res.losses);
      if (side == Side::backward) {
        model.backward_net = std::move(res.net);
      } else {
        model.forward_net = std::move(res.net);
        model.forward_trained = true;
      }
    }
    model.round = r + 1;
    checkpoints.push_back(model);
    if (on_round) on_round(checkpoints.back());
  }
  return checkpoints;
}

Eigen::MatrixXd sample(const DsbModel& m, int n, RandomStream& rng) {
  if (n < 1) throw InvalidArgument("sample: n must be positive");
  const auto chain = simulate_backward(m, normal_matrix(m.dim(), n, rng), rng);
  return m.destandardize(chain.front());
}

double frechet_score(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() < 1 || b.cols() < 1) throw InvalidArgument("frechet_score: empty batch");
  if (a.rows() != b.rows()) throw InvalidArgument("frechet_score: dimension mismatch");
  const Eigen::VectorXd ma = a.rowwise().mean();
  const Eigen::VectorXd mb = b.rowwise().mean();
  const Eigen::ArrayXd va = (a.colwise() - ma).array().square().rowwise().mean();
  const Eigen::ArrayXd vb = (b.colwise() - mb).array().square().rowwise().mean();
  const double cov = (va + vb - 2.0 * (va * vb).sqrt()).sum();
  return std::max(0.0, (ma - mb).squaredNorm() + cov);
}

void save_checkpoint(const DsbModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put<std::uint16_t>(out, kCheckpointVersion);
  detail::put<std::int32_t>(out, m.round);
  detail::put<std::uint8_t>(out, m.forward_trained ? 1 : 0);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.schedule.gamma.size()));
  for (double g : m.schedule.gamma) detail::put_f64(out, g);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  for (Eigen::Index i = 0; i < m.mean.size(); ++i) detail::put_f64(out, m.mean(i));
  for (Eigen::Index i = 0; i < m.std.size(); ++i) detail::put_f64(out, m.std(i));
  m.forward_net.write(out);
  m.backward_net.write(out);
  if (!out) throw FormatError("write failed for " + path.string());
}

DsbModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) throw FormatError(path.string() + ": not a DSB checkpoint");
  const auto version = detail::get<std::uint16_t>(in);
  if (version != kCheckpointVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  DsbModel m;
  m.round = detail::get<std::int32_t>(in);
  m.forward_trained = detail::get<std::uint8_t>(in) != 0;
  const auto k = detail::get<std::uint32_t>(in);
  m.schedule.gamma.resize(k);
  for (auto& g : m.schedule.gamma) g = detail::get_f64(in);
  const auto d = detail::get<std::uint32_t>(in);
  m.mean.resize(d);
  m.std.resize(d);
  for (std::uint32_t i = 0; i < d; ++i) m.mean(i) = detail::get_f64(in);
  for (std::uint32_t i = 0; i < d; ++i) m.std(i) = detail::get_f64(in);
  m.forward_net = MeanNet::read(in);
  m.backward_net = MeanNet::read(in);
  if (m.forward_net.shape().dim != static_cast<int>(d) || m.backward_net.shape().dim != static_cast<int>(d))
    throw FormatError(path.string() + ": network dimension does not match standardization");
  return m;
}

}  // namespace swda
