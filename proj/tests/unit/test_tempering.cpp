#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "linear_gaussian.hpp"
#include "swda/error.hpp"
#include "swda/tempering.hpp"

using namespace swda;
using swda::fixtures::LinearGaussianModel;
using swda::fixtures::ScalarKalman;

namespace {

using P = Particle<LinearGaussianModel>;

std::vector<P> particles(const LinearGaussianModel& m, int n, double spread, RandomStream& rng) {
  std::vector<P> ps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ps[i].start = spread * rng.normal();
    ps[i].stream = rng.fork(static_cast<std::uint64_t>(i));
  }
  propagate_particles(m, ps);
  return ps;
}

auto gaussian_loglik(double y, double r) {
  return [=](double x) { return -(x - y) * (x - y) / (2.0 * r); };
}

}  // namespace

TEST(Ess, Examples) {
  std::vector<double> u(8, 0.125);
  EXPECT_DOUBLE_EQ(ess(u), 8.0);
  std::vector<double> one{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(ess(one), 1.0);
  std::vector<double> w{0.5, 0.25, 0.25};
  EXPECT_NEAR(ess(w), 1.0 / 0.375, 1e-14);
  EXPECT_NEAR(ess(w), 2.6667, 1e-4);
}

TEST(Ess, RejectsUnnormalized) {
  std::vector<double> w{0.5, 0.6};
  EXPECT_THROW(ess(w), InvalidArgument);
  std::vector<double> neg{1.5, -0.5};
  EXPECT_THROW(ess(neg), InvalidArgument);
  EXPECT_THROW(ess(std::vector<double>{}), InvalidArgument);
}

TEST(Systematic, PointMassGivesCopies) {
  std::vector<double> w{0.0, 0.0, 1.0, 0.0};
  for (double u : {0.0, 0.3, 0.999}) {
    auto idx = systematic_indices(w, u);
    for (auto i : idx) EXPECT_EQ(i, 2u);
  }
}

TEST(Systematic, UniformWeightsAreUnbiased) {
  const int n = 10;
  std::vector<double> w(n, 1.0 / n);
  RandomStream rng(1);
  std::vector<double> total(n, 0.0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> c(n, 0);
    for (auto i : systematic_indices(w, rng)) ++c[i];
    for (int i = 0; i < n; ++i) {
      ASSERT_LE(c[i], 2);
      total[i] += c[i];
    }
  }
  for (double t : total) EXPECT_NEAR(t / trials, 1.0, 0.02);
}

TEST(Systematic, ExpectedOffspringIsNTimesWeight) {
  const int n = 10;
  // Weights (0.7, 0.2, 0.1) on the first three members, zero elsewhere.
  std::vector<double> w(n, 0.0);
  w[0] = 0.7;
  w[1] = 0.2;
  w[2] = 0.1;
  RandomStream rng(2);
  std::vector<double> total(n, 0.0);
  const int trials = 100000;
  for (int t = 0; t < trials; ++t)
    for (auto i : systematic_indices(w, rng)) total[i] += 1.0;
  for (int i = 0; i < n; ++i) EXPECT_NEAR(total[i] / trials, n * w[i], 0.01) << i;
}

TEST(Systematic, PreservesSizeAndValidatesU) {
  std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(systematic_indices(w, 0.5).size(), 4u);
  EXPECT_THROW(systematic_indices(w, 1.0), InvalidArgument);
}

TEST(NormalizeLogWeights, StableAndDetectsCollapse) {
  std::vector<double> lw{-1000.0, -1001.0};
  std::vector<double> out;
  ASSERT_TRUE(normalize_log_weights(lw, out));
  EXPECT_NEAR(out[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-14);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(normalize_log_weights(std::vector<double>{-inf, -inf}, out));
  EXPECT_FALSE(normalize_log_weights(std::vector<double>{0.0, std::nan("")}, out));
}

TEST(Temper, WeakLikelihoodIsSingleStage) {
  LinearGaussianModel m{0.9, 0.5, 3};
  RandomStream rng(3);
  auto ps = particles(m, 100, 1.0, rng);
  std::vector<double> w(100, 0.01);
  FilterConfig cfg;
  auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(0.0, 1e12), cfg, rng);
  EXPECT_TRUE(rep.success);
  EXPECT_EQ(rep.stages(), 1);
  EXPECT_DOUBLE_EQ(rep.exponents[0], 1.0);
  EXPECT_EQ(rep.resamples, 0);
  EXPECT_NEAR(ess(w), 100.0, 1e-6);
}

TEST(Temper, SharpLikelihoodKeepsEssAboveThreshold) {
  LinearGaussianModel m{0.9, 0.5, 3};
  RandomStream rng(4);
  auto ps = particles(m, 200, 1.0, rng);
  std::vector<double> w(200, 1.0 / 200);
  FilterConfig cfg;
  auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(1.5, 1e-4), cfg, rng);
  ASSERT_TRUE(rep.success);
  EXPECT_GT(rep.stages(), 1);
  EXPECT_NEAR(std::accumulate(rep.exponents.begin(), rep.exponents.end(), 0.0), 1.0, 1e-12);
  for (double e : rep.ess) {
    EXPECT_GE(e, cfg.ess_threshold_frac * 200 * (1 - 1e-9));
    EXPECT_LE(e, 200.0 * (1 + 1e-12));
  }
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  EXPECT_GT(rep.accepted, 0u);
}

TEST(Temper, IdenticalParticlesStayUniform) {
  LinearGaussianModel m{0.9, 0.5, 2};
  std::vector<P> ps(20);
  RandomStream rng(5);
  for (auto& p : ps) {
    p.start = 0.3;
    p.draws = {0.1, -0.2};
    p.end = m.run_window(p.start, p.draws);
  }
  std::vector<double> w(20, 0.05);
  auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(0.0, 1e-6), FilterConfig{}, rng);
  EXPECT_TRUE(rep.success);
  EXPECT_EQ(rep.stages(), 1);
  for (double x : w) EXPECT_DOUBLE_EQ(x, 0.05);
}

TEST(Temper, StageCapFlagsFailure) {
  LinearGaussianModel m{0.9, 0.5, 3};
  RandomStream rng(6);
  auto ps = particles(m, 100, 1.0, rng);
  std::vector<double> w(100, 0.01);
  FilterConfig cfg;
  cfg.max_temper_stages = 1;
  auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(3.0, 1e-6), cfg, rng);
  EXPECT_FALSE(rep.success);
  EXPECT_EQ(rep.stages(), 1);
  EXPECT_LT(rep.exponents[0], 1.0);
}

TEST(Temper, NearIdentityProposalAcceptsAlmostAlways) {
  // rho -> 1 keeps every draw, so proposals reproduce the current state.
  LinearGaussianModel m{0.9, 0.5, 4};
  RandomStream rng(7);
  auto ps = particles(m, 100, 1.0, rng);
  std::vector<double> w(100, 0.01);
  FilterConfig cfg;
  cfg.jitter_rho = 1.0 - 1e-12;
  auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(0.5, 1e-3), cfg, rng);
  ASSERT_GT(rep.proposals, 0u);
  EXPECT_EQ(rep.accepted, rep.proposals);
}

TEST(Temper, RejectsNonFiniteLikelihood) {
  LinearGaussianModel m;
  RandomStream rng(8);
  auto ps = particles(m, 10, 1.0, rng);
  std::vector<double> w(10, 0.1);
  EXPECT_THROW(adaptive_temper_jitter(m, ps, w, [](double) { return std::nan(""); }, FilterConfig{}, rng),
               NumericalError);
}

TEST(FilterConfig, Validation) {
  FilterConfig c;
  c.window_steps = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.ess_threshold_frac = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.jitter_rho = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Temper, TracksKalmanMeanOnShortRun) {
  LinearGaussianModel m{0.9, 0.5, 2};
  const double r = 0.1;
  const int n = 500;
  RandomStream rng(9);
  RandomStream truth_rng(10);
  std::vector<P> ps(n);
  for (int i = 0; i < n; ++i) {
    ps[i].start = rng.normal();
    ps[i].stream = rng.fork(static_cast<std::uint64_t>(i));
  }
  ScalarKalman kf{0.0, 1.0};
  std::vector<double> w(n, 1.0 / n);
  double x = truth_rng.normal();
  for (int c = 0; c < 10; ++c) {
    for (int k = 0; k < m.n; ++k) x = m.a * x + m.q * truth_rng.normal();
    const double y = x + std::sqrt(r) * truth_rng.normal();
    propagate_particles(m, ps);
    auto rep = adaptive_temper_jitter(m, ps, w, gaussian_loglik(y, r), FilterConfig{}, rng);
    ASSERT_TRUE(rep.success);
    kf.predict(m);
    kf.update(y, r);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += w[i] * ps[i].end;
    EXPECT_NEAR(mean, kf.mean, 4.0 * std::sqrt(kf.var / n)) << "cycle " << c;
    for (auto& p : ps) p.start = p.end;
  }
}
