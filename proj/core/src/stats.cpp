#include "swda/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "swda/error.hpp"

namespace swda {

double silverman_bandwidth(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2) throw InvalidArgument("silverman_bandwidth: need at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

KdeModes kde_modes(std::span<const double> values, const KdeOptions& opts) {
  if (values.size() < 2) throw InvalidArgument("kde_modes: need at least two values");
  if (opts.grid_points < 3 || !(opts.bandwidth_factor > 0.0) || opts.min_prominence < 0.0)
    throw InvalidArgument("kde_modes: invalid options");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("kde_modes: non-finite value");

  KdeModes out;
  out.bandwidth = opts.bandwidth_factor * silverman_bandwidth(values);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (!(out.bandwidth > 0.0)) {
    // All values equal.
    out.locations.push_back(*lo_it);
    out.heights.push_back(1.0);
    return out;
  }
  const double h = out.bandwidth;
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  const int g = opts.grid_points;
  const double step = (hi - lo) / (g - 1);

  // Linear binning onto the evaluation grid.
  std::vector<double> counts(static_cast<std::size_t>(g), 0.0);
  for (double v : values) {
    const double pos = (v - lo) / step;
    const auto i = std::min(static_cast<int>(pos), g - 2);
    const double frac = pos - i;
    counts[static_cast<std::size_t>(i)] += 1.0 - frac;
    counts[static_cast<std::size_t>(i) + 1] += frac;
  }

  const int half = static_cast<int>(std::ceil(4.0 * h / step));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) {
    const double z = k * step / h;
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * z * z);
  }
  std::vector<double> density(static_cast<std::size_t>(g), 0.0);
  for (int i = 0; i < g; ++i) {
    const double c = counts[static_cast<std::size_t>(i)];
    if (c == 0.0) continue;
    const int a = std::max(0, i - half);
    const int b = std::min(g - 1, i + half);
    for (int j = a; j <= b; ++j) density[static_cast<std::size_t>(j)] += c * kernel[static_cast<std::size_t>(j - i + half)];
  }
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (double& d : density) d *= norm;

  const double peak = *std::max_element(density.begin(), density.end());
  for (int i = 1; i + 1 < g; ++i) {
    const double d = density[static_cast<std::size_t>(i)];
    if (!(d > density[static_cast<std::size_t>(i) - 1] && d >= density[static_cast<std::size_t>(i) + 1])) continue;
    double left_min = d;
    for (int j = i - 1; j >= 0 && density[static_cast<std::size_t>(j)] <= d; --j)
      left_min = std::min(left_min, density[static_cast<std::size_t>(j)]);
    double right_min = d;
    for (int j = i + 1; j < g && density[static_cast<std::size_t>(j)] <= d; ++j)
      right_min = std::min(right_min, density[static_cast<std::size_t>(j)]);
    const double prominence = d - std::max(left_min, right_min);
    if (prominence >= opts.min_prominence * peak) {
      out.locations.push_back(lo + i * step);
      out.heights.push_back(d);
    }
  }
  return out;
}

}  // namespace swda
