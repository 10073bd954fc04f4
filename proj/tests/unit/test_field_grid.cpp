#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "swda/error.hpp"
#include "swda/field_grid.hpp"
#include "swda/random.hpp"

using namespace swda;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Field random_field(const Grid& g, std::uint64_t seed) {
  RandomStream rng(seed);
  Field f(g);
  for (auto& v : f.data()) v = rng.normal();
  return f;
}

}  // namespace

TEST(Grid, RejectsOddOrTinyDimensions) {
  EXPECT_THROW(Grid(3, 8), InvalidArgument);
  EXPECT_THROW(Grid(8, 7), InvalidArgument);
  EXPECT_THROW(Grid(2, 2), InvalidArgument);
  EXPECT_THROW(Grid(8, 8, 0.0, 1.0), InvalidArgument);
  Grid g(8, 4, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(g.dx(), 0.25);
  EXPECT_DOUBLE_EQ(g.dy(), 0.25);
  EXPECT_EQ(g.index(3, 2), 2u * 8u + 3u);
}

TEST(Field, RejectsWrongValueCount) {
  EXPECT_THROW(Field(Grid(4, 4), std::vector<double>(15)), InvalidArgument);
}

TEST(Field, ArithmeticChecksGrid) {
  Field a(Grid(4, 4), 1.0);
  Field b(Grid(8, 4), 1.0);
  EXPECT_THROW(a += b, InvalidArgument);
}

TEST(SpectralDerivative, ConstantHasZeroDerivative) {
  Field c(Grid(16, 16), 3.5);
  for (Axis ax : {Axis::x, Axis::y})
    for (int order : {1, 2}) EXPECT_LT(spectral_derivative(c, ax, order).max_abs(), 1e-12);
}

TEST(SpectralDerivative, SineAlongX) {
  Grid g(32, 32);
  Field f = Field::from_function(g, [](double x, double) { return std::sin(kTwoPi * x); });
  Field d = spectral_derivative(f, Axis::x, 1);
  EXPECT_NEAR(d(0, 0), kTwoPi, 1e-10 * kTwoPi);
  Field expect = Field::from_function(g, [](double x, double) { return kTwoPi * std::cos(kTwoPi * x); });
  EXPECT_LT(max_abs_diff(d, expect), 1e-10 * kTwoPi);
  EXPECT_LT(spectral_derivative(f, Axis::y, 1).max_abs(), 1e-12);
}

TEST(SpectralDerivative, ResolvedModesAreExact) {
  Grid g(32, 16, 1.0, 2.0);
  for (int kx : {0, 1, 3, 7}) {
    for (int ky : {1, 2, 5}) {
      const double ax = kTwoPi * kx / g.lx();
      const double ay = kTwoPi * ky / g.ly();
      Field f = Field::from_function(g, [&](double x, double y) { return std::cos(ax * x) * std::sin(ay * y); });
      Field fx = Field::from_function(g, [&](double x, double y) { return -ax * std::sin(ax * x) * std::sin(ay * y); });
      Field fyy = Field::from_function(g, [&](double x, double y) { return -ay * ay * std::cos(ax * x) * std::sin(ay * y); });
      const double sx = std::max(ax, 1.0);
      EXPECT_LT(max_abs_diff(spectral_derivative(f, Axis::x, 1), fx), 1e-10 * sx) << kx << "," << ky;
      EXPECT_LT(max_abs_diff(spectral_derivative(f, Axis::y, 2), fyy), 1e-10 * ay * ay) << kx << "," << ky;
    }
  }
}

TEST(SpectralDerivative, RejectsNonFinite) {
  Field f(Grid(8, 8));
  f(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(spectral_derivative(f, Axis::x, 1), InvalidArgument);
  EXPECT_THROW(spectral_derivative(Field(Grid(8, 8)), Axis::x, 3), InvalidArgument);
}

TEST(SpectralDerivative, MixedDerivativesCommute) {
  Field f = random_field(Grid(16, 16), 4);
  Field a = spectral_derivative(spectral_derivative(f, Axis::x, 1), Axis::y, 1);
  Field b = spectral_derivative(spectral_derivative(f, Axis::y, 1), Axis::x, 1);
  EXPECT_LT(max_abs_diff(a, b), 1e-9 * std::max(1.0, a.max_abs()));
}

TEST(Spectrum, RoundTripIsIdentity) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Field f = random_field(Grid(24, 12), seed);
    Field back = Spectrum(f).to_field();
    EXPECT_LT(max_abs_diff(f, back), 1e-12 * f.max_abs());
  }
}

TEST(Lowpass, ConstantUnchanged) {
  Field c(Grid(16, 16), -2.25);
  for (int fmax : {1, 4, 8}) EXPECT_LT(max_abs_diff(lowpass(c, {fmax}), c), 1e-14);
}

TEST(Lowpass, RemovesModeAboveCutoff) {
  Grid g(128, 128);
  Field f = Field::from_function(g, [](double x, double) { return std::sin(kTwoPi * 20.0 * x); });
  EXPECT_LT(lowpass(f, {16}).max_abs(), 1e-12);
}

TEST(Lowpass, CutoffIsPerAxisStrict) {
  Grid g(64, 64);
  auto mode = [&](int kx, int ky) {
    return Field::from_function(g, [=](double x, double y) { return std::cos(kTwoPi * (kx * x + ky * y)); });
  };
  // |k| < f_max on each axis survives; |k| = f_max does not.
  Field kept = mode(15, 15);
  EXPECT_LT(max_abs_diff(lowpass(kept, {16}), kept), 1e-12);
  EXPECT_LT(lowpass(mode(16, 0), {16}).max_abs(), 1e-12);
  EXPECT_LT(lowpass(mode(3, -16), {16}).max_abs(), 1e-12);
}

TEST(Lowpass, IdempotentAndMeanPreserving) {
  for (std::uint64_t seed : {10u, 11u, 12u, 13u}) {
    Field f = random_field(Grid(32, 32), seed);
    f *= 3.0;
    Field once = lowpass(f, {8});
    Field twice = lowpass(once, {8});
    EXPECT_LT(max_abs_diff(once, twice), 1e-12 * once.max_abs());
    EXPECT_NEAR(once.mean(), f.mean(), 1e-12 * f.max_abs());
  }
}

TEST(Lowpass, ValidatesCutoff) {
  Grid g(32, 16);
  EXPECT_THROW(validate_cutoff({0}, g), InvalidArgument);
  EXPECT_THROW(validate_cutoff({9}, g), InvalidArgument);
  EXPECT_NO_THROW(validate_cutoff({8}, g));
  EXPECT_THROW(lowpass(Field(g), {9}), InvalidArgument);
}

TEST(GradPerp, AnalyticCases) {
  Grid g(32, 32);
  Field sy = Field::from_function(g, [](double, double y) { return std::sin(kTwoPi * y); });
  auto [u1, v1] = grad_perp(sy);
  EXPECT_LT(max_abs_diff(u1, Field::from_function(g, [](double, double y) { return -kTwoPi * std::cos(kTwoPi * y); })),
            1e-10 * kTwoPi);
  EXPECT_LT(v1.max_abs(), 1e-12);

  Field sx = Field::from_function(g, [](double x, double) { return std::sin(kTwoPi * x); });
  auto [u2, v2] = grad_perp(sx);
  EXPECT_LT(u2.max_abs(), 1e-12);
  EXPECT_LT(max_abs_diff(v2, Field::from_function(g, [](double x, double) { return kTwoPi * std::cos(kTwoPi * x); })),
            1e-10 * kTwoPi);

  auto [u3, v3] = grad_perp(Field(g, 4.0));
  EXPECT_LT(u3.max_abs() + v3.max_abs(), 1e-12);
}

TEST(GradPerp, DivergenceFreeForRandomFields) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Field psi = random_field(Grid(32, 16, 1.0, 0.5), 100 + seed);
    auto [u, v] = grad_perp(psi);
    EXPECT_LE(divergence(u, v).max_abs(), 1e-10 * psi.max_abs());
  }
}

TEST(Restrict, SubsamplesExactly) {
  Grid fine(128, 128);
  Grid coarse(32, 32);
  Field f = Field::from_function(fine, [](double x, double) { return std::sin(kTwoPi * x); });
  Field c = restrict_to_coarse(f, coarse);
  ASSERT_EQ(c.grid(), coarse);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) EXPECT_EQ(c(i, j), f(4 * i, 4 * j));
  for (int i = 0; i < 32; ++i) EXPECT_NEAR(c(i, 0), std::sin(kTwoPi * coarse.x(i)), 1e-15);

  Field k = restrict_to_coarse(Field(fine, 7.0), coarse);
  EXPECT_EQ(k.min(), 7.0);
  EXPECT_EQ(k.max(), 7.0);
}

TEST(Restrict, RejectsNonDivisible) {
  EXPECT_THROW(restrict_to_coarse(Field(Grid(24, 24)), Grid(16, 16)), InvalidArgument);
  EXPECT_THROW(restrict_to_coarse(Field(Grid(16, 16)), Grid(32, 32)), InvalidArgument);
}
