#include "swda/rsw.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "swda/error.hpp"

namespace swda {

namespace {

constexpr double kPi = std::numbers::pi;

double omega_pattern(double x, double y) {
  return std::sin(8 * kPi * x) * std::sin(8 * kPi * y) +
         0.4 * std::cos(6 * kPi * x) * std::cos(6 * kPi * y) +
         0.3 * std::cos(10 * kPi * x) * std::cos(4 * kPi * y) + 0.02 * std::sin(2 * kPi * y) +
         0.02 * std::sin(2 * kPi * x);
}

void require_positive_height(const Field& eta) {
  for (std::size_t k = 0; k < eta.size(); ++k)
    if (!(eta[k] > 0.0))
      throw NumericalError("non-positive or non-finite height eta=" + std::to_string(eta[k]) +
                           " at index " + std::to_string(k));
}

void require_finite_state(const State& s) {
  if (!s.u.all_finite() || !s.v.all_finite() || !s.eta.all_finite())
    throw NumericalError("non-finite state after step (blow-up)");
}

// Spatial operators shared by the deterministic and stochastic updates.
struct Derivatives {
  Field ux, uy, lap_u;
  Field vx, vy, lap_v;
  Field hx, hy;  // gradient of eta - b
};

Derivatives derivatives(const State& s, const PhysParams& p) {
  const Spectrum su(s.u);
  const Spectrum sv(s.v);
  const Spectrum sh(p.bathymetry ? s.eta - *p.bathymetry : s.eta);
  return Derivatives{su.derivative(Axis::x, 1), su.derivative(Axis::y, 1), su.laplacian(),
                     sv.derivative(Axis::x, 1), sv.derivative(Axis::y, 1), sv.laplacian(),
                     sh.derivative(Axis::x, 1), sh.derivative(Axis::y, 1)};
}

std::vector<double> wind_column(const Grid& g, const PhysParams& p) {
  std::vector<double> f(static_cast<std::size_t>(g.nx()), 0.0);
  if (p.wind_on)
    for (int i = 0; i < g.nx(); ++i) f[static_cast<std::size_t>(i)] = wind_forcing(g.x(i), g.lx());
  return f;
}

// Transport-noise velocity W = grad_perp(psi) and the four entries of grad W.
struct NoiseTerms {
  Field wu, wv;
  Field wu_x, wu_y, wv_x, wv_y;
};

NoiseTerms noise_terms(const Field& psi) {
  const Spectrum sp(psi);
  Field psi_x = sp.derivative(Axis::x, 1);
  Field psi_y = sp.derivative(Axis::y, 1);
  Field psi_xx = sp.derivative(Axis::x, 2);
  Field psi_yy = sp.derivative(Axis::y, 2);
  Field psi_xy = sp.dxdy();
  NoiseTerms t;
  t.wu = psi_y * -1.0;
  t.wv = std::move(psi_x);
  t.wu_x = psi_xy * -1.0;
  t.wu_y = std::move(psi_yy) * -1.0;
  t.wv_x = std::move(psi_xx);
  t.wv_y = std::move(psi_xy);
  return t;
}

State advance(const State& s, const NoiseTerms* noise, const PhysParams& p, double dt) {
  p.validate();
  validate_state(s);
  require_positive_height(s.eta);
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const Grid& g = s.grid();
  const Derivatives d = derivatives(s, p);
  const std::vector<double> wind = wind_column(g, p);
  const double rot = p.f_cor / p.ro;
  const double pressure = dt / (p.fr * p.fr);
  const double visc = dt * p.nu;

  // Transport velocity u*dt + W.
  Field tu = s.u * dt;
  Field tv = s.v * dt;
  if (noise) {
    tu += noise->wu;
    tv += noise->wv;
  }

  State out{Field(g), Field(g), Field(g)};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      const double u = s.u[k];
      const double v = s.v[k];
      const double eta = s.eta[k];
      const double speed = std::sqrt(u * u + v * v);
      const double drag = -(p.c_d / eta) * speed;

      double du = u - (tu[k] * d.ux[k] + tv[k] * d.uy[k]);
      double dv = v - (tu[k] * d.vx[k] + tv[k] * d.vy[k]);
      if (noise) {
        du -= u * noise->wu_x[k] + v * noise->wv_x[k];
        dv -= u * noise->wu_y[k] + v * noise->wv_y[k];
      }
      du += rot * tv[k];
      dv -= rot * tu[k];
      du -= pressure * d.hx[k];
      dv -= pressure * d.hy[k];
      du += visc * d.lap_u[k];
      dv += visc * d.lap_v[k];
      du += dt * wind[static_cast<std::size_t>(i)];
      du += dt * (drag * u);
      dv += dt * (drag * v);
      out.u[k] = du;
      out.v[k] = dv;
    }
  }
  out.eta = s.eta - divergence(s.eta * tu, s.eta * tv);
  require_finite_state(out);
  return out;
}

}  // namespace

void PhysParams::validate() const {
  if (!(fr > 0.0)) throw InvalidArgument("Froude number must be positive");
  if (!(ro > 0.0)) throw InvalidArgument("Rossby number must be positive");
  if (!(nu >= 0.0)) throw InvalidArgument("viscosity must be non-negative");
  if (!(c_d >= 0.0)) throw InvalidArgument("drag coefficient must be non-negative");
  if (!std::isfinite(f_cor)) throw InvalidArgument("Coriolis parameter must be finite");
}

void validate_state(const State& s) {
  const Grid& g = s.eta.grid();
  if (!(s.u.grid() == g) || !(s.v.grid() == g)) throw InvalidArgument("state fields on different grids");
  if (s.eta.empty()) throw InvalidArgument("empty state");
}

double wind_forcing(double x, double length) {
  const double arg = 2.0 * kPi * x / length - kPi;
  return std::cos(arg) + 2.0 * std::sin(arg);
}

State initial_state(const Grid& grid, const PhysParams& p) {
  p.validate();
  const double a = p.a_init;
  Field eta = Field::from_function(grid, [a](double x, double y) {
    const double r2 = (x - 0.6) * (x - 0.6) + (y - 0.6) * (y - 0.6);
    return a * (0.05 * omega_pattern(x, y) + 0.2 * std::exp(-r2 / 0.1)) + 1.0;
  });

  if (p.f_cor == 0.0) throw InvalidArgument("geostrophic initialization needs f_cor != 0");
  const double coeff = -(1.0 / p.f_cor) * (p.ro / (p.fr * p.fr));
  auto [gu, gv] = grad_perp(eta);
  gu *= coeff;
  gv *= coeff;
  for (Field* c : {&gu, &gv}) {
    const double m = c->max_abs();
    if (m > 0.0) *c *= 1.0 / (1.5 * m);
  }
  return State{std::move(gu), std::move(gv), std::move(eta)};
}

StateIncrement tendency(const State& s, const PhysParams& p) {
  p.validate();
  validate_state(s);
  require_positive_height(s.eta);
  const Grid& g = s.grid();
  const Derivatives d = derivatives(s, p);
  const std::vector<double> wind = wind_column(g, p);
  const double rot = p.f_cor / p.ro;
  const double inv_fr2 = 1.0 / (p.fr * p.fr);

  StateIncrement out{Field(g), Field(g), Field(g)};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      const double u = s.u[k];
      const double v = s.v[k];
      const double drag = -(p.c_d / s.eta[k]) * std::sqrt(u * u + v * v);
      out.u[k] = -(u * d.ux[k] + v * d.uy[k]) + rot * v - inv_fr2 * d.hx[k] + p.nu * d.lap_u[k] +
                 wind[static_cast<std::size_t>(i)] + drag * u;
      out.v[k] = -(u * d.vx[k] + v * d.vy[k]) - rot * u - inv_fr2 * d.hy[k] + p.nu * d.lap_v[k] +
                 drag * v;
    }
  }
  out.eta = divergence(s.eta * s.u, s.eta * s.v) * -1.0;
  return out;
}

State step_deterministic(const State& s, const PhysParams& p, double dt) {
  return advance(s, nullptr, p, dt);
}

State step_stochastic(const State& s, const Field& psi, const PhysParams& p, double dt) {
  if (!(psi.grid() == s.grid())) throw InvalidArgument("noise field grid differs from state grid");
  if (!psi.all_finite()) throw InvalidArgument("non-finite noise field");
  const NoiseTerms noise = noise_terms(psi);
  return advance(s, &noise, p, dt);
}

}  // namespace swda
