#pragma once

#include <span>
#include <vector>

namespace swda {

struct KdeOptions {
  int grid_points = 512;
  double bandwidth_factor = 1.0;  // times Silverman's rule
  double min_prominence = 0.05;   // relative to the global density peak
};

struct KdeModes {
  std::vector<double> locations;
  std::vector<double> heights;
  double bandwidth = 0.0;

  int count() const { return static_cast<int>(locations.size()); }
};

/// Peaks of a Gaussian kernel density estimate. Local maxima whose
/// topographic prominence is below min_prominence * (global peak) are
/// merged into their neighbours.
KdeModes kde_modes(std::span<const double> values, const KdeOptions& opts = {});

double silverman_bandwidth(std::span<const double> values);

}  // namespace swda
