#pragma once

// One implicit-explicit time step of the coupled system.
//
//   α/h(u - uᵏ) + νu + η|u|^{r-2}u + ∇π = μ̂φ∇φᵏ + μ̂ψ∇ψᵏ,   div u = 0
//   (φ - φᵏ)/h + u·∇φᵏ + σ1(φᵏ)(φ̄ᵏ - c) = div(mφ(φᵏ)∇μ̂φ)
//   μ̂φ = -Δφ + P0[F'φ(φ) + Gφ(φ, φᵏ, ψ)] + σ2𝒩(φ - φ̄)
//   (ψ - ψᵏ)/h + u·∇ψᵏ = div(mψ(ψᵏ)∇μ̂ψ)
//   μ̂ψ = -βΔψ + P0[F'ψ(ψ) + Gψ(φᵏ, ψ, ψᵏ)]
//
// with mean(φ) = a, mean(ψ) = b prescribed and μ̂ zero-mean.

#include "chdf/darcy.hpp"
#include "chdf/model.hpp"
#include "chdf/state.hpp"

namespace chdf {

struct SolverTolerances {
  double newton_tol = 1e-10;
  double picard_tol = 1e-10;
  double energy_tol = 1e-9;
  double velocity_tol = 1e-10;
  int max_newton = 50;
  int max_picard = 50;
  double newton_damping_min = 1.0 / 1024.0;
  double uzawa_omega = 1.0;
  int max_outer = 500;
  int max_halvings = 5;
  bool dealias = false;

  void validate() const;
};

struct MeanTargets {
  double a;
  double b;
};

/// a = φ̄ᵏ - h·mean(σ1(φᵏ))(φ̄ᵏ - c), b = ψ̄ᵏ. Throws StepTooLarge if h·σ1 >= 1.
MeanTargets mean_targets(const ScalarField& phi_prev, const ScalarField& psi_prev, double h, const ModelParams& p);

struct NewtonReport {
  int iterations = 0;
  double residual = 0.0;
  int linear_iterations = 0;
};

struct SubsystemSolution {
  ScalarField phi;
  ScalarField psi;
  ScalarField mu_phi_hat;
  ScalarField mu_psi_hat;
  NewtonReport phi_report;
  NewtonReport psi_report;
};

/// Solves both Cahn-Hilliard subsystems for a frozen velocity. The ψ system
/// only sees φᵏ, so it is solved first and its result feeds the φ system.
/// `guess` (optional) supplies starting iterates with the target means.
SubsystemSolution ch_subsystem_solve(const State& prev, const VectorField& u, const MeanTargets& targets, double h,
                                     const ModelParams& p, const SolverTolerances& tol,
                                     const SubsystemSolution* guess = nullptr);

/// Shifts the zero-mean potentials to the physical ones:
///   μφ = μ̂φ + mean(F'φ(φ)) + mean(Gφ(φ, φᵏ, ψ)),  μψ = μ̂ψ + mean(F'ψ(ψ)) + mean(Gψ(φᵏ, ψ, ψᵏ)).
ChemicalPotentials recover_physical_potentials(const ScalarField& phi, const ScalarField& psi, const State& prev,
                                               const ScalarField& mu_phi_hat, const ScalarField& mu_psi_hat,
                                               const ModelParams& p);

struct StepReport {
  int picard_iterations = 0;
  int newton_iterations_phi = 0;
  int newton_iterations_psi = 0;
  int velocity_iterations = 0;
  int halvings = 0;
  double h = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double dissipation_h = 0.0;  ///< h times the dissipation rate
  double inequality_slack = 0.0;
  double mass_target_a = 0.0;
  double mass_target_b = 0.0;
  double mass_achieved_phi = 0.0;
  double mass_achieved_psi = 0.0;
  double max_phi = 0.0;
  double min_phi = 0.0;
  double max_psi = 0.0;
  double min_psi = 0.0;
  // time-averaged rates over the step
  double d2 = 0.0;
  double dr = 0.0;
  double grad_mu_phi_sq = 0.0;  ///< ‖∇μφ‖²
  double grad_mu_psi_sq = 0.0;
  double mobility_phi_sq = 0.0;  ///< ∫mφ|∇μφ|²
  double mobility_psi_sq = 0.0;
  double reaction_term = 0.0;  ///< (φ̄ᵏ - c)∫σ1 μφ
};

struct StepResult {
  State next;
  ChemicalPotentials potentials;
  ScalarField pressure;
  StepReport report;
};

/// Picard iteration velocity -> ψ -> φ until successive iterates agree to
/// picard_tol. On a solver failure h is halved (two substeps) up to
/// max_halvings times. `warm` (the previous step) seeds the frozen
/// potentials and the pressure of the first Picard sweep.
StepResult coupled_time_step(const State& prev, double h, const ModelParams& p, const SolverTolerances& tol,
                             const StepResult* warm = nullptr);

}  // namespace chdf
