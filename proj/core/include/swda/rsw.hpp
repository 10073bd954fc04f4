#pragma once

#include <optional>

#include "swda/field_grid.hpp"

namespace swda {

/// Nondimensional rotating shallow-water parameters. Viscosity, Coriolis
/// parameter and bathymetry defaults are not taken from any reference run;
/// override them from the config file.
struct PhysParams {
  double fr = 1.1;
  double ro = 0.2;
  double f_cor = 1.0;
  double nu = 2e-3;
  double c_d = 1e-3;
  double a_init = 0.5;
  bool wind_on = true;
  std::optional<Field> bathymetry;  // b; absent means b = 0

  void validate() const;
};

struct State {
  Field u;
  Field v;
  Field eta;

  const Grid& grid() const { return eta.grid(); }
};

/// Same layout as State but without the eta > 0 invariant.
struct StateIncrement {
  Field u;
  Field v;
  Field eta;
};

/// Height bump plus standing-wave pattern, with a geostrophically balanced
/// velocity whose components are divided by 1.5 * max|component|.
State initial_state(const Grid& grid, const PhysParams& p);

/// Wind profile F(x) = cos(2 pi x / L - pi) + 2 sin(2 pi x / L - pi).
double wind_forcing(double x, double length);

/// (-R(u, eta), -P(eta, u)) with spectral derivatives.
StateIncrement tendency(const State& s, const PhysParams& p);

/// Explicit Euler step of the deterministic model.
State step_deterministic(const State& s, const PhysParams& p, double dt);

/// One step of the transport-noise scheme. The perturbed transport velocity
/// is u*dt + grad_perp(psi); advection, Coriolis and the height flux use it
/// directly, the remaining terms carry an explicit dt, and the (grad W).u
/// term is added to the momentum update. psi = 0 reproduces
/// step_deterministic exactly.
State step_stochastic(const State& s, const Field& psi, const PhysParams& p, double dt);

void validate_state(const State& s);

}  // namespace swda
