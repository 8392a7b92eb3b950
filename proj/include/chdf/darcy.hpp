#pragma once

// Velocity-pressure subproblem of one time step:
//   α/h (u - u_prev) + ν u + η |u|^{r-2} u + ∇π = force,  div u = 0,  u.n = 0.

#include "chdf/grid.hpp"
#include "chdf/model.hpp"

namespace chdf {

/// Unique m >= 0 with c1 m + c2 m^{r-1} = g_mag. Throws NonConvergence.
double forchheimer_scalar_root(double c1, double c2, double r, double g_mag);

/// Per-cell drag coefficients, frozen at the previous time level.
struct DragCoefficients {
  ScalarField nu;
  ScalarField eta;

  static DragCoefficients evaluate(const ScalarField& phi, const ScalarField& psi, const ModelParams& p);
  static DragCoefficients constant(const GridPtr& grid, const ModelParams& p);
};

struct VelocitySolveReport {
  int outer_iterations = 0;
  double final_div_residual = 0.0;
  double final_momentum_residual = 0.0;
  double pointwise_root_max_residual = 0.0;
};

struct VelocitySolverOptions {
  double tol = 1e-10;
  int max_outer = 500;
  double omega = 1.0;  ///< relaxation of the pressure update
};

struct VelocitySolution {
  VectorField u;
  ScalarField pi;
  VelocitySolveReport report;
};

/// Pointwise radial solve of the drag law for a fixed pressure, with the
/// pressure driven to div u = 0 by Newton steps on the pressure Schur
/// complement. Throws NonConvergence after max_outer updates.
VelocitySolution velocity_solve(const VectorField& u_prev, const VectorField& force, double h,
                                const DragCoefficients& drag, const ModelParams& p,
                                const VelocitySolverOptions& options = {}, const ScalarField* pi_guess = nullptr);

VelocitySolution velocity_solve(const VectorField& u_prev, const VectorField& force, double h, const ModelParams& p,
                                const VelocitySolverOptions& options = {});

/// Max-norm of α/h(u - u_prev) + νu + η|u|^{r-2}u + ∇π - force.
double momentum_residual(const VectorField& u, const ScalarField& pi, const VectorField& u_prev,
                         const VectorField& force, double h, const DragCoefficients& drag, const ModelParams& p);

struct Dissipation {
  double d2 = 0.0;  ///< ∫ ν|u|^2
  double dr = 0.0;  ///< ∫ η|u|^r
};

Dissipation dissipation_integrands(const VectorField& u, const DragCoefficients& drag, double r);
Dissipation dissipation_integrands(const VectorField& u, const ModelParams& p);

}  // namespace chdf
