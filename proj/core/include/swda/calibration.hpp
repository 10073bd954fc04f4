#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "swda/field_grid.hpp"

namespace swda {

/// High-frequency height increments and filtered height gradients on the
/// coarse grid, one entry per consecutive pair of fine snapshots.
struct FluctuationSeries {
  std::vector<double> times;
  std::vector<Field> delta_eta;
  std::vector<Field> grad_x;  // restrict(d/dx lowpass(eta_i))
  std::vector<Field> grad_y;

  std::size_t size() const { return delta_eta.size(); }
};

/// Streaming form of compute_increments: push fine snapshots in time order.
class IncrementBuilder {
 public:
  struct Increment {
    double time;
    Field delta_eta;
    Field grad_x;
    Field grad_y;
  };

  IncrementBuilder(const CutoffSpec& cutoff, const Grid& coarse);

  /// Returns the increment between the previous snapshot and this one, or
  /// nothing for the first snapshot.
  std::optional<Increment> push(double time, const Field& fine_eta);

 private:
  CutoffSpec cutoff_;
  Grid coarse_;
  std::optional<Field> prev_fluct_;
  Field prev_gx_, prev_gy_;
  double prev_time_ = 0.0;
};

FluctuationSeries compute_increments(std::span<const Field> fine_run, const CutoffSpec& cutoff,
                                     const Grid& coarse, double dt = 1.0);

struct CalibrationSolution {
  Field psi;
  double residual = 0.0;  // ||L psi - rhs|| / ||rhs|| (0 for rhs = 0)
  int iterations = 0;
  bool converged = true;
};

/// Central-difference calibration operator
///   L(psi) = gx * d psi/dy - gy * d psi/dx   (periodic wrap)
/// and its adjoint.
Field calibration_operator(const Field& psi, const Field& gx, const Field& gy);
Field calibration_adjoint(const Field& r, const Field& gx, const Field& gy);

/// Minimum-norm, mean-zero least-squares solution of L(psi) = rhs by
/// conjugate gradients on the normal equations (CGLS), stopping when
/// ||L^T r|| <= tol * ||L^T rhs||. On non-convergence the last iterate is
/// returned with converged = false.
CalibrationSolution solve_stream_function(const Field& rhs, const Field& gx, const Field& gy,
                                          double tol, int max_iter);

/// Transformed noise samples: x -> (asinh((psi - mean)/scale) - min) / (max - min).
/// Samples are stored as the columns of a dim x N matrix.
struct TrainingDataset {
  Grid grid;
  Eigen::MatrixXd samples;
  Field mean_field;
  double arcsinh_scale = 1.0;
  double norm_min = 0.0;
  double norm_max = 1.0;

  std::size_t count() const { return static_cast<std::size_t>(samples.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.rows()); }

  Eigen::VectorXd transform(const Field& psi) const;
};

TrainingDataset build_training_dataset(std::span<const CalibrationSolution> solutions,
                                       double arcsinh_scale = 1.0);
TrainingDataset build_training_dataset(std::span<const Field> psi_fields, double arcsinh_scale = 1.0);

/// Exact inverse of the dataset transform; values outside [0, 1] are
/// extrapolated with the same formulas.
Field invert_transform(const TrainingDataset& d, std::span<const double> sample);

/// dataset.swda holds the mean field followed by the samples;
/// dataset.meta records the transform constants.
void save_dataset(const TrainingDataset& d, const std::filesystem::path& swda_path,
                  const std::filesystem::path& meta_path);
TrainingDataset load_dataset(const std::filesystem::path& swda_path,
                             const std::filesystem::path& meta_path);

}  // namespace swda
