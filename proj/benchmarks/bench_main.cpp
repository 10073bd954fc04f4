#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "swda/calibration.hpp"
#include "swda/field_grid.hpp"
#include "swda/mlp.hpp"
#include "swda/random.hpp"
#include "swda/rsw.hpp"
#include "swda/tempering.hpp"

using namespace swda;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Field noise_field(const Grid& g, std::uint64_t seed) {
  RandomStream rng(seed);
  Field f(g);
  for (auto& v : f.data()) v = rng.normal();
  return f;
}

void BM_SpectralDerivative(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Field f = noise_field(Grid(n, n), 1);
  for (auto _ : st) benchmark::DoNotOptimize(spectral_derivative(f, Axis::x, 1));
  st.SetComplexityN(n * n);
}
BENCHMARK(BM_SpectralDerivative)->Arg(32)->Arg(64)->Arg(128);

void BM_Lowpass(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Field f = noise_field(Grid(n, n), 2);
  for (auto _ : st) benchmark::DoNotOptimize(lowpass(f, CutoffSpec{n / 8}));
}
BENCHMARK(BM_Lowpass)->Arg(64)->Arg(128);

void BM_RswDeterministicStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  PhysParams p;
  State s = initial_state(Grid(n, n), p);
  for (auto _ : st) benchmark::DoNotOptimize(step_deterministic(s, p, 1e-4));
}
BENCHMARK(BM_RswDeterministicStep)->Arg(32)->Arg(64)->Arg(128);

void BM_RswStochasticStep(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Grid g(n, n);
  PhysParams p;
  State s = initial_state(g, p);
  Field psi = lowpass(noise_field(g, 3), CutoffSpec{n / 4}) * 1e-5;
  for (auto _ : st) benchmark::DoNotOptimize(step_stochastic(s, psi, p, 1e-4));
}
BENCHMARK(BM_RswStochasticStep)->Arg(32)->Arg(64);

void BM_CalibrationSolve(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Grid g(n, n);
  Field gx = Field::from_function(g, [](double x, double y) { return 1.5 + std::sin(kTwoPi * (x + y)); });
  Field gy = Field::from_function(g, [](double x, double) { return 1.0 + 0.5 * std::cos(kTwoPi * x); });
  Field rhs = noise_field(g, 4);
  for (auto _ : st) benchmark::DoNotOptimize(solve_stream_function(rhs, gx, gy, 1e-2, 10 * n * n));
}
BENCHMARK(BM_CalibrationSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MeanNetForward(benchmark::State& st) {
  const int dim = static_cast<int>(st.range(0));
  RandomStream rng(5);
  MeanNet net(MlpShape{dim, 512, 3, 16}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(dim, 128);
  std::vector<int> steps(128, 7);
  for (auto _ : st) benchmark::DoNotOptimize(net.forward(x, steps));
}
BENCHMARK(BM_MeanNetForward)->Arg(2)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_MeanNetGradient(benchmark::State& st) {
  const int dim = static_cast<int>(st.range(0));
  RandomStream rng(6);
  MeanNet net(MlpShape{dim, 512, 3, 16}, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(dim, 128);
  Eigen::MatrixXd target = Eigen::MatrixXd::Random(dim, 128);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(128);
  std::vector<int> steps(128, 7);
  MlpParams grad = net.params().zeros_like();
  for (auto _ : st) benchmark::DoNotOptimize(net.loss_and_gradient(x, steps, target, w, grad));
}
BENCHMARK(BM_MeanNetGradient)->Arg(2)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

struct Ar1 {
  using State = double;
  using Draw = double;
  int window_length() const { return 20; }
  Draw draw_noise(RandomStream& rng) const { return rng.normal(); }
  State run_window(const State& x, std::span<const Draw> eps) const {
    double y = x;
    for (double e : eps) y = 0.9 * y + 0.5 * e;
    return y;
  }
};

void BM_TemperJitter(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Ar1 model;
  RandomStream rng(7);
  for (auto _ : st) {
    st.PauseTiming();
    std::vector<Particle<Ar1>> ps(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ps[i].stream = rng.fork(static_cast<std::uint64_t>(i));
    propagate_particles(model, ps);
    std::vector<double> w(static_cast<std::size_t>(n), 1.0 / n);
    st.ResumeTiming();
    auto rep = adaptive_temper_jitter(model, ps, w, [](double v) { return -v * v / 0.02; }, FilterConfig{}, rng);
    benchmark::DoNotOptimize(rep.stages());
  }
}
BENCHMARK(BM_TemperJitter)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
