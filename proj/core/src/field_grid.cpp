#include "swda/field_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "swda/error.hpp"

namespace swda {

namespace {

// FFTW planning is not thread-safe; execution on new arrays is. Plans are
// created once per shape with FFTW_UNALIGNED so any std::vector buffer works.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

const PlanPair& plans_for(int nx, int ny) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<PlanPair>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{nx, ny}];
  if (!slot) {
    slot = std::make_unique<PlanPair>();
    const std::size_t n_real = static_cast<std::size_t>(nx) * ny;
    const std::size_t n_cplx = static_cast<std::size_t>(ny) * (nx / 2 + 1);
    std::vector<double> real(n_real);
    std::vector<std::complex<double>> cplx(n_cplx);
    auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    slot->forward = fftw_plan_dft_r2c_2d(ny, nx, real.data(), c, flags);
    slot->inverse = fftw_plan_dft_c2r_2d(ny, nx, c, real.data(), flags);
    if (!slot->forward || !slot->inverse) throw Error("FFTW planning failed");
  }
  return *slot;
}

void require_finite(const Field& f, const char* what) {
  if (!f.all_finite()) throw InvalidArgument(std::string(what) + ": non-finite input field");
}

}  // namespace

Grid::Grid(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0)
    throw InvalidArgument("grid dimensions must be even and >= 4, got " + std::to_string(nx) +
                          "x" + std::to_string(ny));
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("grid lengths must be positive");
}

Field::Field(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw InvalidArgument("field value count " + std::to_string(values_.size()) +
                          " does not match grid size " + std::to_string(grid_.size()));
}

double Field::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Field::check_same_grid(const Field& o) const {
  if (!(grid_ == o.grid_)) throw InvalidArgument("field grid mismatch");
}

Field& Field::operator+=(const Field& o) {
  check_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

Field& Field::operator*=(const Field& o) {
  check_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

void validate_cutoff(const CutoffSpec& cutoff, const Grid& grid) {
  const int limit = std::min(grid.nx(), grid.ny()) / 2;
  if (cutoff.f_max <= 0 || cutoff.f_max > limit)
    throw InvalidArgument("cutoff f_max=" + std::to_string(cutoff.f_max) + " outside (0, " +
                          std::to_string(limit) + "]");
}

Spectrum::Spectrum(const Field& f) : grid_(f.grid()) {
  const auto& p = plans_for(grid_.nx(), grid_.ny());
  coeffs_.resize(static_cast<std::size_t>(grid_.ny()) * kx_count());
  // r2c with FFTW_UNALIGNED does not modify its input.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(f.data().data()),
                       reinterpret_cast<fftw_complex*>(coeffs_.data()));
}

Spectrum::Spectrum(const Grid& grid, std::vector<std::complex<double>> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {}

Field Spectrum::to_field() const {
  return apply([](int, int) { return std::complex<double>(1.0, 0.0); });
}

template <class M>
Field Spectrum::apply(M&& multiplier) const {
  const auto& p = plans_for(grid_.nx(), grid_.ny());
  const int nkx = kx_count();
  std::vector<std::complex<double>> scratch(coeffs_.size());
  for (int jy = 0; jy < grid_.ny(); ++jy) {
    const int ky_v = ky(jy);
    for (int ix = 0; ix < nkx; ++ix) {
      const std::size_t k = static_cast<std::size_t>(jy) * nkx + ix;
      scratch[k] = coeffs_[k] * multiplier(ix, ky_v);
    }
  }
  Field out(grid_);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out.data().data());
  out *= 1.0 / static_cast<double>(grid_.size());
  return out;
}

Field Spectrum::derivative(Axis axis, int order) const {
  if (order != 1 && order != 2) throw InvalidArgument("derivative order must be 1 or 2");
  const double two_pi = 2.0 * std::numbers::pi;
  const double kx0 = two_pi / grid_.lx();
  const double ky0 = two_pi / grid_.ly();
  const int nyq_x = grid_.nx() / 2;
  const int nyq_y = grid_.ny() / 2;
  using C = std::complex<double>;
  if (axis == Axis::x) {
    if (order == 1)
      return apply([&](int kx, int) { return kx == nyq_x ? C(0.0) : C(0.0, kx0 * kx); });
    return apply([&](int kx, int) { return C(-(kx0 * kx) * (kx0 * kx), 0.0); });
  }
  if (order == 1)
    return apply([&](int, int ky_v) {
      return std::abs(ky_v) == nyq_y ? C(0.0) : C(0.0, ky0 * ky_v);
    });
  return apply([&](int, int ky_v) { return C(-(ky0 * ky_v) * (ky0 * ky_v), 0.0); });
}

Field Spectrum::dxdy() const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double kx0 = two_pi / grid_.lx();
  const double ky0 = two_pi / grid_.ly();
  const int nyq_x = grid_.nx() / 2;
  const int nyq_y = grid_.ny() / 2;
  return apply([&](int kx, int ky_v) {
    if (kx == nyq_x || std::abs(ky_v) == nyq_y) return std::complex<double>(0.0);
    return std::complex<double>(-(kx0 * kx) * (ky0 * ky_v), 0.0);
  });
}

Field Spectrum::laplacian() const {
  const double two_pi = 2.0 * std::numbers::pi;
  const double kx0 = two_pi / grid_.lx();
  const double ky0 = two_pi / grid_.ly();
  return apply([&](int kx, int ky_v) {
    const double a = kx0 * kx;
    const double b = ky0 * ky_v;
    return std::complex<double>(-(a * a + b * b), 0.0);
  });
}

Spectrum Spectrum::lowpassed(const CutoffSpec& cutoff) const {
  validate_cutoff(cutoff, grid_);
  std::vector<std::complex<double>> out = coeffs_;
  const int nkx = kx_count();
  for (int jy = 0; jy < grid_.ny(); ++jy) {
    const bool drop_row = std::abs(ky(jy)) >= cutoff.f_max;
    for (int ix = 0; ix < nkx; ++ix)
      if (drop_row || ix >= cutoff.f_max) out[static_cast<std::size_t>(jy) * nkx + ix] = 0.0;
  }
  return Spectrum(grid_, std::move(out));
}

Field spectral_derivative(const Field& f, Axis axis, int order) {
  require_finite(f, "spectral_derivative");
  return Spectrum(f).derivative(axis, order);
}

Field lowpass(const Field& f, const CutoffSpec& cutoff) {
  validate_cutoff(cutoff, f.grid());
  require_finite(f, "lowpass");
  return Spectrum(f).lowpassed(cutoff).to_field();
}

std::pair<Field, Field> grad_perp(const Field& psi) {
  require_finite(psi, "grad_perp");
  const Spectrum s(psi);
  Field u = s.derivative(Axis::y, 1);
  u *= -1.0;
  return {std::move(u), s.derivative(Axis::x, 1)};
}

Field divergence(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("divergence: grid mismatch");
  return Spectrum(a).derivative(Axis::x, 1) + Spectrum(b).derivative(Axis::y, 1);
}

Field restrict_to_coarse(const Field& f, const Grid& coarse) {
  const Grid& fine = f.grid();
  if (coarse.nx() > fine.nx() || coarse.ny() > fine.ny() || fine.nx() % coarse.nx() != 0 ||
      fine.ny() % coarse.ny() != 0)
    throw InvalidArgument("restrict_to_coarse: fine grid " + std::to_string(fine.nx()) + "x" +
                          std::to_string(fine.ny()) + " not divisible by coarse grid " +
                          std::to_string(coarse.nx()) + "x" + std::to_string(coarse.ny()));
  const int sx = fine.nx() / coarse.nx();
  const int sy = fine.ny() / coarse.ny();
  Field out(coarse);
  for (int j = 0; j < coarse.ny(); ++j)
    for (int i = 0; i < coarse.nx(); ++i) out(i, j) = f(i * sx, j * sy);
  return out;
}

}  // namespace swda
