#include "swda/verification.hpp"

#include <algorithm>
#include <cmath>

#include "swda/error.hpp"

namespace swda {

double crps(std::span<const double> ensemble, double y) {
  if (ensemble.empty()) throw InvalidArgument("crps: empty ensemble");
  const auto n = static_cast<double>(ensemble.size());
  double spread_obs = 0.0;
  for (double x : ensemble) spread_obs += std::abs(x - y);

  // sum_i sum_j |x_i - x_j| from sorted values in O(N log N).
  std::vector<double> s(ensemble.begin(), ensemble.end());
  std::sort(s.begin(), s.end());
  double pair = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    pair += (2.0 * static_cast<double>(i) - n + 1.0) * s[i];
  pair *= 2.0;
  return spread_obs / n - pair / (2.0 * n * n);
}

int truth_rank(std::span<const double> ensemble, double truth, RandomStream& rng) {
  int below = 0;
  int ties = 0;
  for (double x : ensemble) {
    if (x < truth) ++below;
    else if (x == truth) ++ties;
  }
  if (ties > 0) below += static_cast<int>(rng.index(static_cast<std::uint64_t>(ties) + 1));
  return below;
}

RankHistogram::RankHistogram(int ensemble_size) : n_(ensemble_size) {
  if (ensemble_size < 1) throw InvalidArgument("RankHistogram: ensemble size must be positive");
  counts_.assign(static_cast<std::size_t>(ensemble_size) + 1, 0);
}

void RankHistogram::add(std::span<const double> ensemble, double truth, RandomStream& rng) {
  if (static_cast<int>(ensemble.size()) != n_) throw InvalidArgument("RankHistogram: inconsistent ensemble size");
  ++counts_[static_cast<std::size_t>(truth_rank(ensemble, truth, rng))];
  ++events_;
}

PointError point_error(std::span<const double> ensemble, double truth) {
  if (ensemble.empty()) throw InvalidArgument("point_error: empty ensemble");
  const auto n = static_cast<double>(ensemble.size());
  PointError e;
  double sq = 0.0;
  for (double x : ensemble) {
    e.mean += x;
    sq += (x - truth) * (x - truth);
  }
  e.mean /= n;
  e.bias = e.mean - truth;
  e.rmse = std::sqrt(sq / n);
  return e;
}

}  // namespace swda
