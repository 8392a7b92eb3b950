#pragma once

// Run configuration: flat "key = value" lines under [section] headers.
//
//   seed = 7
//   [grid]        nx ny Lx Ly
//   [time]        h t_end output_every equilibrium_tol
//   [model]       every ModelParams field by name
//   [tolerances]  every SolverTolerances field by name
//   [initial]     preset phi_mean psi_mean stripe_amplitude stripe_width noise noise_modes snapshot
//   [output]      directory series snapshot_prefix
//   [steady]      phi_mass psi_mass tol max_newton
//   [debug]       perturb_step perturb_amplitude
//
// Every key is optional; omitted keys keep the defaults below.

#include <cstdint>
#include <optional>
#include <string>

#include "chdf/model.hpp"
#include "chdf/step.hpp"

namespace chdf {

struct GridConfig {
  int nx = 64;
  int ny = 64;
  double Lx = 4.0;
  double Ly = 4.0;
};

struct TimeConfig {
  double h = 1e-3;
  double t_end = 1.0;
  long output_every = 100;      ///< snapshot cadence in steps, 0 = final only
  double equilibrium_tol = 0.0;  ///< stop once the equilibrium residual drops below this (0 = off)
};

struct InitialConfig {
  std::string preset = "homogeneous";  ///< homogeneous | stripe | random_spinodal | snapshot
  double phi_mean = 0.0;
  double psi_mean = 0.5;
  double stripe_amplitude = 0.9;
  double stripe_width = 0.5;
  double noise = 0.05;  ///< max amplitude of the spinodal perturbation, <= 0.05
  int noise_modes = 6;  ///< perturbation uses cosine modes k, l < noise_modes
  std::string snapshot;  ///< path prefix: <snapshot>_phi.chdf, _psi, _ux, _uy
};

struct OutputConfig {
  std::string directory = "out";
  std::string series = "ledger.csv";
  std::string snapshot_prefix = "snap";
};

struct SteadyConfig {
  std::optional<double> phi_mass;  ///< defaults to the seed mean
  std::optional<double> psi_mass;
  double tol = 1e-10;
  int max_newton = 50;
};

struct DebugConfig {
  long perturb_step = -1;  ///< after this step, φ is perturbed (test hook)
  double perturb_amplitude = 0.01;
};

struct RunConfig {
  std::uint64_t seed = 1;
  GridConfig grid;
  TimeConfig time;
  ModelParams model;
  SolverTolerances tolerances;
  InitialConfig initial;
  OutputConfig output;
  SteadyConfig steady;
  DebugConfig debug;

  /// Throws ValidationError naming the offending key.
  void validate() const;
};

/// Parses and validates; `source` labels ParseError messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
/// Reads `path`; IoError if it cannot be opened.
RunConfig load_config(const std::string& path);

}  // namespace chdf
