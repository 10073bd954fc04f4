#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swda/random.hpp"

namespace swda {

/// Empirical CRPS of an ensemble against a scalar observation:
///   (1/N) sum |x_i - y| - (1/(2 N^2)) sum_i sum_j |x_i - x_j|
double crps(std::span<const double> ensemble, double y);

/// Number of members strictly below the truth; members equal to the truth
/// are split by a fair random draw.
int truth_rank(std::span<const double> ensemble, double truth, RandomStream& rng);

class RankHistogram {
 public:
  explicit RankHistogram(int ensemble_size);

  void add(std::span<const double> ensemble, double truth, RandomStream& rng);

  int ensemble_size() const { return n_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t events() const { return events_; }

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t events_ = 0;
};

/// Bias and RMSE of an ensemble at one point: mean(x) - truth and
/// sqrt(mean((x - truth)^2)).
struct PointError {
  double mean = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
};
PointError point_error(std::span<const double> ensemble, double truth);

}  // namespace swda
