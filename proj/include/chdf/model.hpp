#pragma once

// Constitutive content: Flory-Huggins potentials, the bounded coupling G and
// its secant quotients, coefficient functions and the energy functionals.

#include "chdf/grid.hpp"
#include "chdf/state.hpp"

namespace chdf {

struct ModelParams {
  double alpha = 0.0;      ///< relaxation coefficient, >= 0
  double beta = 1.0;       ///< surfactant gradient coefficient, > 0
  double sigma1 = 0.0;     ///< reaction rate, >= 0
  double sigma2 = 0.0;     ///< Ohta-Kawasaki strength, >= 0
  double c = 0.0;          ///< reaction target, in (-1, 1)
  double r = 3.0;          ///< Forchheimer exponent, > 2
  double theta_phi = 1.0;  ///< log temperature of F_phi, > 0
  double theta_psi = 1.0;  ///< log temperature of F_psi, > 0
  double theta_c = 0.0;    ///< double-well depth housed in G, >= 0
  double w = 0.0;          ///< surfactant-interface coupling, >= 0
  double nu_const = 1.0;   ///< Darcy coefficient, > 0
  double eta_const = 1.0;  ///< Forchheimer coefficient, > 0
  double m_phi_const = 1.0;
  double m_psi_const = 1.0;

  /// Throws ValidationError naming the first violated key.
  void validate() const;
};

struct PotentialEval {
  double value;
  double first_derivative;
  double second_derivative;
};

/// (θφ/2)[(1+s)ln(1+s) + (1-s)ln(1-s)]; OutOfDomain unless |s| < 1.
PotentialEval f_phi(double s, const ModelParams& p);
/// θψ[s ln s + (1-s)ln(1-s)] + θψ ln 2; OutOfDomain unless 0 < s < 1.
PotentialEval f_psi(double s, const ModelParams& p);

struct ClampEval {
  double value;
  double d1;
  double d2;
};
inline constexpr double kClampMargin = 0.1;
/// C^2 clamp: identity on [lo, hi], constant beyond a margin of kClampMargin.
ClampEval smooth_clamp(double s, double lo, double hi);

struct CouplingEval {
  double value;
  double d_phi;
  double d_psi;
};
struct CouplingHessian {
  double phi_phi;
  double phi_psi;
  double psi_psi;
};

/// G(φ,ψ) = -(θc/2)φ^2 - wψ(1-φ^2) on [-1,1]x[0,1], extended through the clamp.
CouplingEval coupling_g(double phi, double psi, const ModelParams& p);
CouplingHessian coupling_hessian(double phi, double psi, const ModelParams& p);

/// (G(a,c) - G(b,c))/(a-b), or ∂φG(a,c) when a and b coincide.
double secant_g_phi(double a, double b, double c_arg, const ModelParams& p);
/// (G(c,a) - G(c,b))/(a-b), or ∂ψG(c,a) when a and b coincide.
double secant_g_psi(double c_arg, double a, double b, const ModelParams& p);
/// Partial derivatives of the quotients with respect to their `a` slot.
double secant_g_phi_da(double a, double b, double c_arg, const ModelParams& p);
double secant_g_psi_da(double c_arg, double a, double b, const ModelParams& p);

// Coefficient functions. Constant by default but evaluated per cell.
double darcy_nu(double phi, double psi, const ModelParams& p);
double forchheimer_eta(double phi, double psi, const ModelParams& p);
double mobility_phi(double phi, const ModelParams& p);
double mobility_psi(double psi, const ModelParams& p);
double reaction_sigma1(double phi, const ModelParams& p);

ScalarField darcy_nu(const ScalarField& phi, const ScalarField& psi, const ModelParams& p);
ScalarField forchheimer_eta(const ScalarField& phi, const ScalarField& psi, const ModelParams& p);
ScalarField mobility_phi(const ScalarField& phi, const ModelParams& p);
ScalarField mobility_psi(const ScalarField& psi, const ModelParams& p);
ScalarField reaction_sigma1(const ScalarField& phi, const ModelParams& p);

/// Individual contributions to E_tot.
struct EnergyParts {
  double gradient_phi = 0.0;
  double potential_phi = 0.0;
  double nonlocal = 0.0;
  double gradient_psi = 0.0;
  double potential_psi = 0.0;
  double coupling = 0.0;
  double kinetic = 0.0;

  double free() const {
    return gradient_phi + potential_phi + nonlocal + gradient_psi + potential_psi + coupling;
  }
  double total() const { return free() + kinetic; }
};

EnergyParts energy_parts(const VectorField& u, const ScalarField& phi, const ScalarField& psi,
                         const ModelParams& p);
double free_energy(const ScalarField& phi, const ScalarField& psi, const ModelParams& p);
double total_energy(const State& state, const ModelParams& p);

}  // namespace chdf
