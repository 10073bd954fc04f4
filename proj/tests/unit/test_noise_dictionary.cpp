#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "swda/error.hpp"
#include "swda/noise_dictionary.hpp"

using namespace swda;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<Field> random_samples(const Grid& g, int n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<Field> out;
  for (int i = 0; i < n; ++i) {
    Field f(g);
    for (auto& v : f.data()) v = rng.normal() + 0.2 * rng.uniform();
    out.push_back(f);
  }
  return out;
}

Field manufactured_psi(const Grid& g, double a, double b) {
  return Field::from_function(g, [=](double x, double y) {
    return a * std::sin(kTwoPi * x) * std::cos(kTwoPi * y) + b * std::cos(2 * kTwoPi * y);
  });
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST(MakeDictionary, ClipsToOneStdAroundLocalMean) {
  Grid g(8, 8);
  auto d = make_dictionary(random_samples(g, 200, 1), 30.0);
  EXPECT_EQ(d.size(), 200u);
  EXPECT_EQ(d.scale, 30.0);
  double worst = -1.0;
  for (const auto& s : d.samples)
    for (std::size_t k = 0; k < g.size(); ++k) {
      EXPECT_GE(d.local_std[k], 0.0);
      worst = std::max(worst, std::abs(s[k] - d.local_mean[k]) - d.local_std[k]);
    }
  EXPECT_LE(worst, 1e-14);
}

TEST(MakeDictionary, StatisticsArePopulationMoments) {
  Grid g(4, 4);
  std::vector<Field> s{Field(g, 1.0), Field(g, 3.0)};
  auto d = make_dictionary(s, 1.0);
  EXPECT_DOUBLE_EQ(d.local_mean[5], 2.0);
  EXPECT_DOUBLE_EQ(d.local_std[5], 1.0);
  // Both samples sit exactly on the clip boundary.
  EXPECT_DOUBLE_EQ(d.samples[0][5], 1.0);
  EXPECT_DOUBLE_EQ(d.samples[1][5], 3.0);
}

TEST(MakeDictionary, IdenticalSamplesHaveZeroStd) {
  Grid g(4, 4);
  Field f = manufactured_psi(g, 1.0, 0.5);
  auto d = make_dictionary(std::vector<Field>(5, f), 2.0);
  EXPECT_LT(d.local_std.max_abs(), 1e-15);
  for (const auto& s : d.samples)
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(s[k], f[k], 1e-15);
}

TEST(MakeDictionary, Validation) {
  Grid g(4, 4);
  EXPECT_THROW(make_dictionary({Field(g)}, 1.0), InvalidArgument);
  EXPECT_THROW(make_dictionary({Field(g), Field(g)}, -1.0), InvalidArgument);
  EXPECT_THROW(make_dictionary({Field(g), Field(Grid(8, 8))}, 1.0), InvalidArgument);
}

TEST(Draw, SingleEntryAndZeroScale) {
  Grid g(4, 4);
  auto d = make_dictionary({Field(g, 1.5), Field(g, 1.5)}, 2.0);
  d.samples.resize(1);
  RandomStream rng(3);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(draw(d, rng)[7], 3.0);
  d.scale = 0.0;
  EXPECT_EQ(draw(d, rng).max_abs(), 0.0);
  d.samples.clear();
  EXPECT_THROW(draw(d, rng), InvalidArgument);
}

TEST(Draw, IndicesAreUniform) {
  Grid g(4, 4);
  auto d = make_dictionary(random_samples(g, 10, 4), 1.0);
  RandomStream rng(5);
  const int n = 1000000;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < n; ++i) ++counts[draw_index(d, rng)];
  const double p = 0.1;
  const double sd = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - n * p), 3.0 * sd);
}

TEST(Draw, ReproducibleUnderFixedStream) {
  Grid g(4, 4);
  auto d = make_dictionary(random_samples(g, 50, 6), 1.0);
  RandomStream a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_index(d, a), draw_index(d, b));
}

TEST(StateIncrement, ConstantPsiGivesZero) {
  Grid g(16, 16);
  State s = initial_state(g, PhysParams{});
  auto inc = state_increment(s, Field(g, 3.0), PhysParams{});
  EXPECT_LT(inc.u.max_abs() + inc.v.max_abs() + inc.eta.max_abs(), 1e-12);
}

TEST(StateIncrement, RestStateFeelsOnlyCoriolis) {
  Grid g(16, 16);
  PhysParams p;
  State s{Field(g), Field(g), Field::from_function(g, [](double x, double) { return 1.0 + 0.1 * std::sin(kTwoPi * x); })};
  Field psi = manufactured_psi(g, 0.7, -0.3);
  auto inc = state_increment(s, psi, p);
  const double rot = p.f_cor / p.ro;
  // zeta = (-psi_y, psi_x); -z x zeta = (zeta_v, -zeta_u).
  Field zu = Field::from_function(g, [](double x, double y) {
    return -(-0.7 * kTwoPi * std::sin(kTwoPi * x) * std::sin(kTwoPi * y) + 0.3 * 2 * kTwoPi * std::sin(2 * kTwoPi * y));
  });
  Field zv = Field::from_function(g, [](double x, double y) { return 0.7 * kTwoPi * std::cos(kTwoPi * x) * std::cos(kTwoPi * y); });
  EXPECT_LT(max_abs_diff(inc.u, zv * rot), 1e-10 * rot * kTwoPi);
  EXPECT_LT(max_abs_diff(inc.v, zu * -rot), 1e-10 * rot * kTwoPi);
}

TEST(StateIncrement, ConstantHeightHasNoHeightIncrement) {
  Grid g(16, 16);
  State s = initial_state(g, PhysParams{});
  s.eta = Field(g, 1.2);
  auto inc = state_increment(s, manufactured_psi(g, 1.0, 1.0), PhysParams{});
  EXPECT_LT(inc.eta.max_abs(), 1e-12);
}

TEST(StateIncrement, LinearInPsi) {
  Grid g(16, 16);
  PhysParams p;
  State s = initial_state(g, p);
  Field a = manufactured_psi(g, 1.0, 0.2);
  Field b = manufactured_psi(g, -0.4, 0.9);
  auto ia = state_increment(s, a, p);
  auto ib = state_increment(s, b, p);
  auto ic = state_increment(s, a * 2.0 + b * -3.0, p);
  EXPECT_LT(max_abs_diff(ic.u, ia.u * 2.0 + ib.u * -3.0), 1e-10 * ic.u.max_abs());
  EXPECT_LT(max_abs_diff(ic.v, ia.v * 2.0 + ib.v * -3.0), 1e-10 * ic.v.max_abs());
  EXPECT_LT(max_abs_diff(ic.eta, ia.eta * 2.0 + ib.eta * -3.0), 1e-10 * ic.eta.max_abs());
}

TEST(StateIncrement, HeightIncrementHasZeroMean) {
  Grid g(32, 32);
  State s = initial_state(g, PhysParams{});
  Field psi = manufactured_psi(g, 0.5, 0.5);
  auto inc = state_increment(s, psi, PhysParams{});
  auto [zu, zv] = grad_perp(psi);
  const double bound = 1e-10 * s.eta.max_abs() * std::max(zu.max_abs(), zv.max_abs());
  EXPECT_LE(std::abs(inc.eta.mean()), bound);
}

TEST(BuildDictionary, UntrainedModelGivesClippedFields) {
  Grid g(4, 4);
  std::vector<Field> psi = random_samples(g, 20, 7);
  auto data = build_training_dataset(std::span<const Field>(psi), 1.0);
  TrainConfig cfg;
  cfg.net.hidden = 8;
  cfg.net.hidden_layers = 1;
  cfg.net.embed_freqs = 2;
  DsbModel m = init_model(data.samples, make_schedule(5, 0.01, 0.05), cfg);
  RandomStream rng(8);
  auto d = build_dictionary(m, data, 25, 3.0, rng, 7);
  EXPECT_EQ(d.size(), 25u);
  EXPECT_EQ(d.grid, g);
  for (const auto& s : d.samples) EXPECT_TRUE(s.all_finite());
  EXPECT_THROW(build_dictionary(m, data, 1, 3.0, rng), InvalidArgument);
}

TEST(Dictionary, SaveLoadRoundTrip) {
  Grid g(8, 4);
  auto d = make_dictionary(random_samples(g, 6, 9), 0.25);
  auto dir = std::filesystem::temp_directory_path() / "swda-test-dict";
  std::filesystem::create_directories(dir);
  save_dictionary(d, dir / "dictionary.swda", dir / "dictionary.meta");
  auto e = load_dictionary(dir / "dictionary.swda", dir / "dictionary.meta");
  EXPECT_EQ(e.size(), d.size());
  EXPECT_EQ(e.scale, d.scale);
  EXPECT_EQ(e.local_mean.data(), d.local_mean.data());
  EXPECT_EQ(e.local_std.data(), d.local_std.data());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(e.samples[i].data(), d.samples[i].data());
  std::filesystem::remove_all(dir);
}
