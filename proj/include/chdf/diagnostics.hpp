#pragma once

// Per-run analysis: energy ledger rows, equilibrium residuals, good times,
// separation margins and the stationary problem.
//
//   -Δφ∞ + σ2𝒩(φ∞ - φ̄∞) + F'φ(φ∞) + ∂φG(φ∞, ψ∞) = μφ∞
//   -βΔψ∞ + F'ψ(ψ∞) + ∂ψG(φ∞, ψ∞) = μψ∞
//
// with prescribed means and constant μ.

#include <array>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "chdf/model.hpp"
#include "chdf/state.hpp"
#include "chdf/step.hpp"

namespace chdf {

struct LedgerRow {
  double time = 0.0;
  double energy_total = 0.0;
  double energy_free = 0.0;
  double kinetic = 0.0;
  double dissipation_d2 = 0.0;
  double dissipation_dr = 0.0;
  double grad_mu_phi_sq = 0.0;
  double grad_mu_psi_sq = 0.0;
  double reaction_term = 0.0;
  double slack = 0.0;
  double mean_phi = 0.0;
  double mean_psi = 0.0;
  double min_phi = 0.0;
  double max_phi = 0.0;
  double min_psi = 0.0;
  double max_psi = 0.0;
  double u_l2 = 0.0;
  double u_lr = 0.0;

  static constexpr std::size_t kColumns = 18;
  static const std::array<std::string_view, kColumns>& column_names();
  std::array<double, kColumns> values() const;
};

/// Row describing the state reached by `step`.
LedgerRow make_ledger_row(const StepResult& step, const ModelParams& p);

/// max(‖∇μφ‖, ‖∇μψ‖, ‖u‖, |mean σ1 (φ̄ - c)|).
double equilibrium_residual(const State& state, const ChemicalPotentials& potentials, const ModelParams& p);

/// Indices with time >= T and ‖∇μφ‖² + ‖∇μψ‖² <= M².
std::vector<std::size_t> classify_good_times(const std::vector<LedgerRow>& ledger, double M = std::numeric_limits<double>::infinity(),
                                             double T = 0.0);

struct SeparationMargin {
  double delta_phi;
  double delta_psi;
};
SeparationMargin separation_margin(const ScalarField& phi, const ScalarField& psi);

struct EquilibriumSolution {
  ScalarField phi_inf;
  ScalarField psi_inf;
  double mu_phi_inf = 0.0;
  double mu_psi_inf = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

struct StationaryOptions {
  double tol = 1e-10;
  int max_newton = 50;
  double damping_min = 1.0 / 1024.0;
};

/// Damped Newton on the stationary system starting from `seed`; the seed is
/// shifted to the requested means first.
EquilibriumSolution stationary_solve(double phi_mass, double psi_mass, const ScalarField& seed_phi,
                                     const ScalarField& seed_psi, const ModelParams& p,
                                     const StationaryOptions& options = {});

/// Max-norm residual of the two stationary equations, with μ taken as the
/// mean of the pointwise terms.
double stationary_residual(const ScalarField& phi, const ScalarField& psi, const ModelParams& p);

/// c + (φ̄0 - c) exp(-σ1 t).
double mass_closed_form(double t, const ModelParams& p, double phi_bar_0);

}  // namespace chdf
