#pragma once

#include "chdf/grid.hpp"

namespace chdf {

/// Full simulation state (u, φ, ψ) at one time level.
struct State {
  explicit State(GridPtr grid) : u(grid), phi(grid), psi(grid, 0.5) {}
  State(VectorField u_, ScalarField phi_, ScalarField psi_, double time_ = 0.0, long step = 0)
      : u(std::move(u_)), phi(std::move(phi_)), psi(std::move(psi_)), time(time_), step_index(step) {}

  const GridPtr& grid_ptr() const { return phi.grid_ptr(); }

  VectorField u;
  ScalarField phi;
  ScalarField psi;
  double time = 0.0;
  long step_index = 0;
};

/// Physical chemical potentials and their zero-mean solver counterparts.
struct ChemicalPotentials {
  explicit ChemicalPotentials(const GridPtr& grid)
      : mu_phi(grid), mu_psi(grid), mu_phi_hat(grid), mu_psi_hat(grid) {}

  ScalarField mu_phi;
  ScalarField mu_psi;
  ScalarField mu_phi_hat;
  ScalarField mu_psi_hat;
};

}  // namespace chdf
