#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace swda {

/// Uniform periodic grid on [0, lx) x [0, ly). Point (i, j) sits at
/// (i * dx, j * dy) and is stored at index j * nx + i.
class Grid {
 public:
  Grid() = default;
  Grid(int nx, int ny, double lx = 1.0, double ly = 1.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double dx() const { return lx_ / nx_; }
  double dy() const { return ly_ / ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double lx_ = 1.0;
  double ly_ = 1.0;
};

/// Real scalar field on a Grid.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double value = 0.0);
  Field(const Grid& grid, std::vector<double> values);

  template <class F>
  static Field from_function(const Grid& grid, F&& f) {
    Field out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) out(i, j) = f(grid.x(i), grid.y(j));
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double mean() const;
  double max_abs() const;
  double min() const;
  double max() const;
  bool all_finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(const Field& o);
  Field& operator*=(double s);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, const Field& b) { return a *= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  void check_same_grid(const Field& o) const;

  Grid grid_;
  std::vector<double> values_;
};

struct CutoffSpec {
  int f_max = 16;
};

enum class Axis { x, y };

/// Throws InvalidArgument unless 0 < f_max <= min(nx, ny) / 2.
void validate_cutoff(const CutoffSpec& cutoff, const Grid& grid);

/// Half-complex spectrum of a real field (FFTW r2c layout: ny rows of
/// nx/2 + 1 coefficients). The forward transform is unnormalized; the
/// inverse divides by nx * ny.
///
/// First-derivative multipliers vanish on the Nyquist row/column so that
/// derivatives of real fields stay real and mixed derivatives commute.
class Spectrum {
 public:
  explicit Spectrum(const Field& f);

  const Grid& grid() const { return grid_; }
  int kx_count() const { return grid_.nx() / 2 + 1; }
  std::complex<double>& at(int kx_index, int ky_index) {
    return coeffs_[static_cast<std::size_t>(ky_index) * kx_count() + kx_index];
  }
  const std::complex<double>& at(int kx_index, int ky_index) const {
    return coeffs_[static_cast<std::size_t>(ky_index) * kx_count() + kx_index];
  }

  /// Signed integer wavenumber for a row index.
  int ky(int ky_index) const { return ky_index <= grid_.ny() / 2 ? ky_index : ky_index - grid_.ny(); }

  Field to_field() const;
  Field derivative(Axis axis, int order) const;
  Field dxdy() const;
  Field laplacian() const;
  /// Zero every coefficient with |kx| >= f_max or |ky| >= f_max.
  Spectrum lowpassed(const CutoffSpec& cutoff) const;

 private:
  Spectrum(const Grid& grid, std::vector<std::complex<double>> coeffs);
  template <class M>
  Field apply(M&& multiplier) const;

  Grid grid_;
  std::vector<std::complex<double>> coeffs_;
};

Field spectral_derivative(const Field& f, Axis axis, int order);
Field lowpass(const Field& f, const CutoffSpec& cutoff);
/// (-d psi/dy, d psi/dx).
std::pair<Field, Field> grad_perp(const Field& psi);
/// d a/dx + d b/dy.
Field divergence(const Field& a, const Field& b);
/// Pointwise subsampling at stride (fine.nx / coarse.nx, fine.ny / coarse.ny).
Field restrict_to_coarse(const Field& f, const Grid& coarse);

}  // namespace swda
