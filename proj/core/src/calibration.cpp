#include "swda/calibration.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "meta_io.hpp"
#include "swda/error.hpp"
#include "swda/snapshot_io.hpp"

namespace swda {

IncrementBuilder::IncrementBuilder(const CutoffSpec& cutoff, const Grid& coarse)
    : cutoff_(cutoff), coarse_(coarse) {
  if (cutoff.f_max > coarse.nx() / 2 || cutoff.f_max > coarse.ny() / 2)
    throw InvalidArgument("cutoff exceeds the coarse-grid Nyquist wavenumber");
}

std::optional<IncrementBuilder::Increment> IncrementBuilder::push(double time, const Field& fine_eta) {
  if (!fine_eta.all_finite()) throw InvalidArgument("non-finite fine snapshot");
  validate_cutoff(cutoff_, fine_eta.grid());
  const Spectrum low = Spectrum(fine_eta).lowpassed(cutoff_);
  Field fluct = restrict_to_coarse(fine_eta - low.to_field(), coarse_);
  Field gx = restrict_to_coarse(low.derivative(Axis::x, 1), coarse_);
  Field gy = restrict_to_coarse(low.derivative(Axis::y, 1), coarse_);

  std::optional<Increment> out;
  if (prev_fluct_)
    out = Increment{prev_time_, fluct - *prev_fluct_, std::move(prev_gx_), std::move(prev_gy_)};
  prev_fluct_ = std::move(fluct);
  prev_gx_ = std::move(gx);
  prev_gy_ = std::move(gy);
  prev_time_ = time;
  return out;
}

FluctuationSeries compute_increments(std::span<const Field> fine_run, const CutoffSpec& cutoff,
                                     const Grid& coarse, double dt) {
  if (fine_run.size() < 2) throw InvalidArgument("compute_increments needs at least 2 snapshots");
  IncrementBuilder builder(cutoff, coarse);
  FluctuationSeries series;
  for (std::size_t n = 0; n < fine_run.size(); ++n) {
    if (auto inc = builder.push(static_cast<double>(n) * dt, fine_run[n])) {
      series.times.push_back(inc->time);
      series.delta_eta.push_back(std::move(inc->delta_eta));
      series.grad_x.push_back(std::move(inc->grad_x));
      series.grad_y.push_back(std::move(inc->grad_y));
    }
  }
  return series;
}

Field calibration_operator(const Field& psi, const Field& gx, const Field& gy) {
  const Grid& g = psi.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double cx = 1.0 / (2.0 * g.dx());
  const double cy = 1.0 / (2.0 * g.dy());
  Field out(g);
  for (int j = 0; j < ny; ++j) {
    const int jp = (j + 1) % ny;
    const int jm = (j + ny - 1) % ny;
    for (int i = 0; i < nx; ++i) {
      const int ip = (i + 1) % nx;
      const int im = (i + nx - 1) % nx;
      const double dpsi_dy = (psi(i, jp) - psi(i, jm)) * cy;
      const double dpsi_dx = (psi(ip, j) - psi(im, j)) * cx;
      out(i, j) = gx(i, j) * dpsi_dy - gy(i, j) * dpsi_dx;
    }
  }
  return out;
}

Field calibration_adjoint(const Field& r, const Field& gx, const Field& gy) {
  // Central differences are skew-adjoint: D^T = -D.
  const Grid& g = r.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double cx = 1.0 / (2.0 * g.dx());
  const double cy = 1.0 / (2.0 * g.dy());
  Field a = gx * r;
  Field b = gy * r;
  Field out(g);
  for (int j = 0; j < ny; ++j) {
    const int jp = (j + 1) % ny;
    const int jm = (j + ny - 1) % ny;
    for (int i = 0; i < nx; ++i) {
      const int ip = (i + 1) % nx;
      const int im = (i + nx - 1) % nx;
      out(i, j) = -(a(i, jp) - a(i, jm)) * cy + (b(ip, j) - b(im, j)) * cx;
    }
  }
  return out;
}

namespace {

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void axpy(double alpha, const Field& x, Field& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

}  // namespace

CalibrationSolution solve_stream_function(const Field& rhs, const Field& gx, const Field& gy,
                                          double tol, int max_iter) {
  const Grid& g = rhs.grid();
  if (!(gx.grid() == g) || !(gy.grid() == g))
    throw InvalidArgument("solve_stream_function: fields on different grids");
  if (!rhs.all_finite() || !gx.all_finite() || !gy.all_finite())
    throw InvalidArgument("solve_stream_function: non-finite input");
  if (!(tol > 0.0) || max_iter < 0) throw InvalidArgument("solve_stream_function: bad tolerance");

  CalibrationSolution sol{Field(g), 0.0, 0, true};
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  if (rhs_norm == 0.0) return sol;

  Field& x = sol.psi;
  Field r = rhs;
  Field s = calibration_adjoint(r, gx, gy);
  Field p = s;
  double gamma = dot(s, s);
  const double stop = tol * std::sqrt(gamma);

  bool converged = std::sqrt(gamma) <= stop || gamma == 0.0;
  int it = 0;
  while (!converged && it < max_iter) {
    const Field q = calibration_operator(p, gx, gy);
    const double qq = dot(q, q);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    s = calibration_adjoint(r, gx, gy);
    const double gamma_new = dot(s, s);
    ++it;
    if (std::sqrt(gamma_new) <= stop) {
      converged = true;
      break;
    }
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = s[k] + beta * p[k];
  }

  // Constants lie in the null space of L; remove any round-off drift.
  const double m = x.mean();
  for (double& v : x.data()) v -= m;
  const Field res = calibration_operator(x, gx, gy) - rhs;
  sol.residual = std::sqrt(dot(res, res)) / rhs_norm;
  sol.iterations = it;
  sol.converged = converged;
  return sol;
}

Eigen::VectorXd TrainingDataset::transform(const Field& psi) const {
  if (!(psi.grid() == grid)) throw InvalidArgument("transform: grid mismatch");
  const double range = norm_max - norm_min;
  Eigen::VectorXd out(static_cast<Eigen::Index>(psi.size()));
  for (std::size_t k = 0; k < psi.size(); ++k)
    out[static_cast<Eigen::Index>(k)] =
        (std::asinh((psi[k] - mean_field[k]) / arcsinh_scale) - norm_min) / range;
  return out;
}

TrainingDataset build_training_dataset(std::span<const Field> psi, double arcsinh_scale) {
  if (psi.size() < 2) throw InvalidArgument("build_training_dataset needs at least 2 samples");
  if (!(arcsinh_scale > 0.0)) throw InvalidArgument("arcsinh_scale must be positive");
  const Grid g = psi.front().grid();
  for (const auto& f : psi)
    if (!(f.grid() == g)) throw InvalidArgument("build_training_dataset: mixed grids");

  TrainingDataset d;
  d.grid = g;
  d.arcsinh_scale = arcsinh_scale;
  d.mean_field = Field(g);
  for (const auto& f : psi) d.mean_field += f;
  d.mean_field *= 1.0 / static_cast<double>(psi.size());

  const auto dim = static_cast<Eigen::Index>(g.size());
  const auto n = static_cast<Eigen::Index>(psi.size());
  d.samples.resize(dim, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Field& f = psi[static_cast<std::size_t>(c)];
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      d.samples(k, c) = std::asinh((f[kk] - d.mean_field[kk]) / arcsinh_scale);
    }
  }
  d.norm_min = d.samples.minCoeff();
  d.norm_max = d.samples.maxCoeff();
  if (!(d.norm_max > d.norm_min)) throw InvalidArgument("degenerate dataset: zero value range");
  d.samples = (d.samples.array() - d.norm_min) / (d.norm_max - d.norm_min);
  return d;
}

TrainingDataset build_training_dataset(std::span<const CalibrationSolution> solutions,
                                       double arcsinh_scale) {
  std::vector<Field> psi;
  psi.reserve(solutions.size());
  for (const auto& s : solutions) psi.push_back(s.psi);
  return build_training_dataset(std::span<const Field>(psi), arcsinh_scale);
}

Field invert_transform(const TrainingDataset& d, std::span<const double> sample) {
  if (sample.size() != d.grid.size()) throw InvalidArgument("invert_transform: wrong sample size");
  const double range = d.norm_max - d.norm_min;
  Field out(d.grid);
  for (std::size_t k = 0; k < sample.size(); ++k)
    out[k] = std::sinh(sample[k] * range + d.norm_min) * d.arcsinh_scale + d.mean_field[k];
  return out;
}

using detail::fmt_exact;
using detail::meta_double;
using detail::read_meta;

void save_dataset(const TrainingDataset& d, const std::filesystem::path& swda_path,
                  const std::filesystem::path& meta_path) {
  SnapshotWriter w(swda_path, d.grid);
  w.append("mean", d.mean_field);
  Field col(d.grid);
  for (Eigen::Index c = 0; c < d.samples.cols(); ++c) {
    for (Eigen::Index k = 0; k < d.samples.rows(); ++k) col[static_cast<std::size_t>(k)] = d.samples(k, c);
    w.append("sample_" + std::to_string(c), col);
  }
  w.close();

  std::ofstream meta(meta_path, std::ios::trunc);
  if (!meta) throw FormatError("cannot write " + meta_path.string());
  meta << "# swda training dataset\n"
       << "fields = " << swda_path.filename().string() << "\n"
       << "mean_field = mean\n"
       << "count = " << d.count() << "\n"
       << "nx = " << d.grid.nx() << "\n"
       << "ny = " << d.grid.ny() << "\n"
       << "arcsinh_scale = " << fmt_exact(d.arcsinh_scale) << "\n"
       << "norm_min = " << fmt_exact(d.norm_min) << "\n"
       << "norm_max = " << fmt_exact(d.norm_max) << "\n";
}

TrainingDataset load_dataset(const std::filesystem::path& swda_path,
                             const std::filesystem::path& meta_path) {
  const auto kv = read_meta(meta_path);
  SnapshotReader reader(swda_path);
  const auto count = static_cast<std::size_t>(meta_double(kv, "count"));
  if (reader.count() != count + 1 || reader.names().front() != "mean")
    throw FormatError(swda_path.string() + ": field layout does not match metadata");
  TrainingDataset d;
  d.grid = reader.grid();
  d.arcsinh_scale = meta_double(kv, "arcsinh_scale");
  d.norm_min = meta_double(kv, "norm_min");
  d.norm_max = meta_double(kv, "norm_max");
  d.mean_field = reader.read(0);
  d.samples.resize(static_cast<Eigen::Index>(d.grid.size()), static_cast<Eigen::Index>(count));
  for (std::size_t c = 0; c < count; ++c) {
    const Field f = reader.read(c + 1);
    for (std::size_t k = 0; k < f.size(); ++k)
      d.samples(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = f[k];
  }
  return d;
}

}  // namespace swda
