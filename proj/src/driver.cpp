#include "chdf/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "chdf/darcy.hpp"
#include "chdf/diagnostics.hpp"
#include "chdf/io.hpp"
#include "chdf/step.hpp"

namespace chdf {

namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

constexpr double kStripeClip = 1e-3;

ScalarField band_limited_noise(const GridPtr& g, std::mt19937_64& rng, int modes, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralCoeffs a{Basis::CosCos, g->nx(), g->ny(), std::vector<double>(g->size(), 0.0)};
  const int kmax = std::min(modes, g->nx()), lmax = std::min(modes, g->ny());
  for (int l = 0; l < lmax; ++l)
    for (int k = 0; k < kmax; ++k)
      if (k || l) a.at(k, l) = u(rng);
  ScalarField f = inverse_transform(a, g);
  const double peak = f.max_abs();
  if (peak > 0.0) f *= amplitude / peak;
  return f;
}

std::string snapshot_path(const RunConfig& cfg, const std::string& tag, const std::string& field) {
  return (fs::path(cfg.output.directory) / (cfg.output.snapshot_prefix + "_" + tag + "_" + field + ".chdf")).string();
}

std::string step_tag(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06ld", step);
  return buf;
}

void write_state(const RunConfig& cfg, const State& s, const std::string& tag) {
  write_snapshot(snapshot_path(cfg, tag, "phi"), s.phi, s.time, "phi");
  write_snapshot(snapshot_path(cfg, tag, "psi"), s.psi, s.time, "psi");
  write_snapshot(snapshot_path(cfg, tag, "ux"), s.u.x, s.time, "ux");
  write_snapshot(snapshot_path(cfg, tag, "uy"), s.u.y, s.time, "uy");
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory '" + dir + "': " + ec.message());
}

GridPtr make_grid(const RunConfig& cfg) { return Grid2D::create(cfg.grid.nx, cfg.grid.ny, cfg.grid.Lx, cfg.grid.Ly); }

// φ perturbation used by the test hook: a zero-mean high mode that raises
// the gradient energy.
void perturb(ScalarField& phi, double amplitude) {
  const Grid2D& g = phi.grid();
  const int k = std::max(1, g.nx() / 8), l = std::max(1, g.ny() / 8);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      phi(i, j) += amplitude * std::cos(k * pi * g.x_center(i) / g.Lx()) * std::cos(l * pi * g.y_center(j) / g.Ly());
}

bool strictly_inside(const State& s) {
  return s.phi.min() > -1.0 && s.phi.max() < 1.0 && s.psi.min() > 0.0 && s.psi.max() < 1.0;
}

// ---- invariant suite ----

struct CheckLine {
  std::string name;
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

CheckLine check_operators(const GridPtr& g) {
  const double Lx = g->Lx(), Ly = g->Ly();
  const double kx = pi / Lx, ky = 2 * pi / Ly, lam = kx * kx + ky * ky;
  const auto mode = ScalarField::from_function(g, [&](double x, double y) { return std::cos(kx * x) * std::cos(ky * y); });
  double worst = (neumann_laplacian(mode) - lam * mode).max_abs() / (1.0 + lam);
  worst = std::max(worst, (inverse_neumann_laplacian(mode) - (1.0 / lam) * mode).max_abs());
  const VectorField d = gradient(mode);
  const auto ex = ScalarField::from_function(g, [&](double x, double y) { return -kx * std::sin(kx * x) * std::cos(ky * y); });
  const auto ey = ScalarField::from_function(g, [&](double x, double y) { return -ky * std::cos(kx * x) * std::sin(ky * y); });
  const double gscale = 1.0 + std::max(kx, ky);
  worst = std::max(worst, std::max((d.x - ex).max_abs(), (d.y - ey).max_abs()) / gscale);
  worst = std::max(worst, (divergence(d) + lam * mode).max_abs() / (1.0 + lam));
  const bool eig = worst <= 1e-11;

  const auto q = ScalarField::from_function(g, [&](double x, double y) {
    return std::cos(3 * pi * x / Lx) * std::cos(pi * y / Ly) + 0.4 * std::cos(pi * x / Lx);
  });
  const Projection pg = helmholtz_project(gradient(q));
  std::mt19937_64 rng(11);
  VectorField v(g);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n = 0; n < v.x.size(); ++n) {
    v.x[n] = u(rng);
    v.y[n] = u(rng);
  }
  const Projection once = helmholtz_project(v);
  const Projection twice = helmholtz_project(once.u);
  const double idem = std::max((once.u.x - twice.u.x).max_abs(), (once.u.y - twice.u.y).max_abs()) / (1.0 + v.max_abs());
  const double ann = pg.u.max_abs() / (1.0 + q.max_abs());
  const bool proj = idem <= 1e-10 && ann <= 1e-10;
  return {"operator exactness", eig && proj,
          fmt("eigenmode %.2e, projection %.2e", worst, std::max(idem, ann))};
}

CheckLine check_roots(const GridPtr& g, const ModelParams& p) {
  const double r1 = forchheimer_scalar_root(1.0, 1.0, 3.0, 2.0);
  const double r2 = forchheimer_scalar_root(1.0, 1.0, 4.0, 10.0);
  bool ok = std::abs(r1 - 1.0) <= 1e-12 && std::abs(r2 - 2.0) <= 1e-12;
  double prev = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const double m = forchheimer_scalar_root(1.0 + p.nu_const, p.eta_const, p.r, 1e-3 * k + 1e-4 * k * k);
    ok = ok && m > prev;
    prev = m;
  }
  const auto q = ScalarField::from_function(g, [&](double x, double y) {
    return std::cos(pi * x / g->Lx()) * std::cos(pi * y / g->Ly()) + 0.5 * std::cos(2 * pi * x / g->Lx());
  });
  const auto sol = velocity_solve(VectorField(g), gradient(q), 1e-3, p);
  const double un = norm_l2(sol.u);
  ok = ok && un <= 1e-9;
  return {"forchheimer roots", ok, fmt("root error %.2e, gradient forcing |u| %.2e", std::max(std::abs(r1 - 1.0), std::abs(r2 - 2.0)), un)};
}

CheckLine check_secants(const ModelParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a(-1.0, 1.0), q(0.0, 1.0);
  double worst = 0.0, branch = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double x = a(rng), y = a(rng), c = q(rng);
    worst = std::max(worst, std::abs(secant_g_phi(x, y, c, p) * (x - y) -
                                     (coupling_g(x, c, p).value - coupling_g(y, c, p).value)));
    const double s = q(rng), t = q(rng), cp = a(rng);
    worst = std::max(worst, std::abs(secant_g_psi(cp, s, t, p) * (s - t) -
                                     (coupling_g(cp, s, p).value - coupling_g(cp, t, p).value)));
    branch = std::max(branch, std::abs(secant_g_phi(x, x, c, p) - coupling_g(x, c, p).d_phi));
    branch = std::max(branch, std::abs(secant_g_psi(cp, s, s, p) - coupling_g(cp, s, p).d_psi));
  }
  return {"secant identities", worst <= 1e-13 && branch <= 1e-10, fmt("identity %.2e, branch %.2e", worst, branch)};
}

CheckLine check_potentials(const ModelParams& p) {
  bool ok = true;
  for (int k = 1; k < 10000; ++k) {
    const double s = -1.0 + 2.0 * k / 10000.0;
    ok = ok && f_phi(s, p).second_derivative >= p.theta_phi;
    ok = ok && f_psi(0.5 * (s + 1.0), p).second_derivative >= 4.0 * p.theta_psi;
  }
  ok = ok && f_phi(0.0, p).value == 0.0 && f_phi(0.0, p).first_derivative == 0.0;
  ok = ok && std::abs(f_psi(0.5, p).value) <= 1e-15 && f_psi(0.5, p).first_derivative == 0.0;
  return {"potential convexity", ok, "10^4 samples"};
}

struct Trajectory {
  double min_slack = INFINITY;  ///< min over steps of slack / (1 + |E0|)
  double psi_mass = 0.0;
  double phi_product = 0.0;
  double min_margin = INFINITY;
  bool nonincreasing = true;
};

Trajectory march(State s, int steps, const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  const double h = cfg.time.h;
  const double e0 = total_energy(s, p), psi0 = mean(s.psi), phi0 = mean(s.phi);
  Trajectory t;
  std::optional<StepResult> last;
  for (int k = 1; k <= steps; ++k) {
    StepResult r = coupled_time_step(s, h, p, cfg.tolerances, last ? &last.value() : nullptr);
    t.min_slack = std::min(t.min_slack, r.report.inequality_slack / (1.0 + std::abs(e0)));
    t.psi_mass = std::max(t.psi_mass, std::abs(mean(r.next.psi) - psi0));
    const double expect = p.c + std::pow(1.0 - h * p.sigma1, k) * (phi0 - p.c);
    t.phi_product = std::max(t.phi_product, std::abs(mean(r.next.phi) - expect));
    const SeparationMargin m = separation_margin(r.next.phi, r.next.psi);
    t.min_margin = std::min({t.min_margin, m.delta_phi, m.delta_psi});
    if (p.sigma1 == 0.0 && r.report.energy_after > r.report.energy_before + cfg.tolerances.energy_tol * (1.0 + std::abs(e0)))
      t.nonincreasing = false;
    s = r.next;
    last = std::move(r);
  }
  return t;
}

// Stationary stripe for the configured masses (homogeneous if the stripe
// relaxes away), nudged by 1e-7 so the steps move and the slack sits at
// rounding level.
State equilibrium_state(const RunConfig& cfg, const GridPtr& g) {
  const double m = cfg.initial.phi_mean, b = cfg.initial.psi_mean;
  ScalarField seed = ScalarField::from_function(g, [&](double x, double) {
    return std::clamp(m + 0.8 * std::tanh((x - 0.5 * g->Lx()) / 0.5), -0.95, 0.95);
  });
  State s(g);
  s.phi = ScalarField(g, m);
  s.psi = ScalarField(g, b);
  try {
    const auto sol = stationary_solve(m, b, seed, ScalarField(g, b), cfg.model);
    s.phi = sol.phi_inf;
    s.psi = sol.psi_inf;
  } catch (const Error&) {
  }
  for (int j = 0; j < g->ny(); ++j)
    for (int i = 0; i < g->nx(); ++i)
      s.phi(i, j) += 1e-7 * std::cos(2 * pi * g->x_center(i) / g->Lx()) * std::cos(pi * g->y_center(j) / g->Ly());
  return s;
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::UnknownPreset:
    case ErrorKind::StepTooLarge:
      return kExitValidation;
    case ErrorKind::SnapshotFormatError:
    case ErrorKind::IoError:
      return kExitIo;
    default:
      return kExitSolver;
  }
}

State initial_condition(const RunConfig& cfg, const GridPtr& g) {
  const InitialConfig& ic = cfg.initial;
  State s(g);
  if (ic.preset == "homogeneous") {
    s.phi = ScalarField(g, ic.phi_mean);
    s.psi = ScalarField(g, ic.psi_mean);
  } else if (ic.preset == "stripe") {
    s.phi = ScalarField::from_function(g, [&](double x, double) {
      const double v = ic.phi_mean + ic.stripe_amplitude * std::tanh((x - 0.5 * g->Lx()) / ic.stripe_width);
      return std::clamp(v, -1.0 + kStripeClip, 1.0 - kStripeClip);
    });
    s.psi = ScalarField(g, ic.psi_mean);
  } else if (ic.preset == "random_spinodal") {
    std::mt19937_64 rng(cfg.seed);
    s.phi = band_limited_noise(g, rng, ic.noise_modes, ic.noise);
    s.psi = band_limited_noise(g, rng, ic.noise_modes, ic.noise);
    s.phi += ic.phi_mean - mean(s.phi);
    s.psi += ic.psi_mean - mean(s.psi);
  } else if (ic.preset == "snapshot") {
    double time = 0.0;
    s.phi = read_snapshot_field(ic.snapshot + "_phi.chdf", g, &time);
    s.psi = read_snapshot_field(ic.snapshot + "_psi.chdf", g);
    s.u.x = read_snapshot_field(ic.snapshot + "_ux.chdf", g);
    s.u.y = read_snapshot_field(ic.snapshot + "_uy.chdf", g);
    s.time = time;
    if (!s.phi.all_finite() || !s.psi.all_finite() || !s.u.x.all_finite() || !s.u.y.all_finite() || !strictly_inside(s))
      throw Error(ErrorKind::SnapshotFormatError, "snapshot '" + ic.snapshot + "' violates the state bounds");
  } else {
    throw Error(ErrorKind::UnknownPreset, "unknown preset '" + ic.preset + "'");
  }
  return s;
}

int run(const RunConfig& cfg, std::ostream& log) {
  long step = 0;
  try {
    const GridPtr g = make_grid(cfg);
    State s = initial_condition(cfg, g);
    const ModelParams& p = cfg.model;
    const double h = cfg.time.h;
    ensure_directory(cfg.output.directory);
    const std::string series = (fs::path(cfg.output.directory) / cfg.output.series).string();
    std::ofstream csv(series, std::ios::trunc);
    if (!csv) throw Error(ErrorKind::IoError, "cannot write ledger '" + series + "'");
    write_ledger_header(csv);
    write_state(cfg, s, step_tag(0));

    const double e0 = total_energy(s, p);
    const double psi0 = mean(s.psi);
    const double slack_floor = -cfg.tolerances.energy_tol * (1.0 + std::abs(e0));
    double energy = e0;
    double expected_phi = mean(s.phi);
    const long steps = std::max(0L, std::lround((cfg.time.t_end - s.time) / h));
    std::optional<StepResult> last;

    for (step = 1; step <= steps; ++step) {
      StepResult r = coupled_time_step(s, h, p, cfg.tolerances, last ? &last.value() : nullptr);
      LedgerRow row = make_ledger_row(r, p);
      // chained against the recorded energy so an outside change to the state shows up
      row.slack = r.report.inequality_slack + (energy - r.report.energy_before);
      expected_phi = r.report.halvings == 0 ? p.c + (1.0 - h * p.sigma1) * (expected_phi - p.c) : row.mean_phi;

      std::string violation;
      if (!(row.slack >= slack_floor))
        violation = fmt("energy inequality slack %.3e below %.3e", row.slack, slack_floor);
      else if (!strictly_inside(r.next))
        violation = "order parameter left its admissible interval";
      else if (std::abs(row.mean_psi - psi0) > 1e-12)
        violation = fmt("surfactant mass drift %.3e", row.mean_psi - psi0);
      else if (std::abs(row.mean_phi - expected_phi) > 1e-10)
        violation = fmt("phase mass off the discrete decay law by %.3e", row.mean_phi - expected_phi);
      write_ledger_row(csv, row);
      csv.flush();
      if (!csv) throw Error(ErrorKind::IoError, "failed writing ledger '" + series + "'");
      if (!violation.empty()) {
        log << "step " << step << ": invariant violated: " << violation << "\n";
        return kExitSolver;
      }

      s = r.next;
      energy = row.energy_total;
      if (cfg.time.output_every > 0 && step % cfg.time.output_every == 0) write_state(cfg, s, step_tag(step));
      if (step == cfg.debug.perturb_step) perturb(s.phi, cfg.debug.perturb_amplitude);
      if (cfg.time.equilibrium_tol > 0.0 && step % 10 == 0) {
        const double res = equilibrium_residual(s, r.potentials, p);
        if (res < cfg.time.equilibrium_tol) {
          log << "equilibrium residual " << res << " at t = " << s.time << "\n";
          write_state(cfg, s, step_tag(step));
          break;
        }
      }
      last = std::move(r);
      if (step == steps && (cfg.time.output_every == 0 || step % cfg.time.output_every != 0))
        write_state(cfg, s, step_tag(step));
    }
    log << "completed " << std::min(step, steps) << " steps, t = " << s.time << ", E = " << energy << "\n";
    return kExitOk;
  } catch (const Error& e) {
    log << "step " << step << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int check(const RunConfig& cfg, std::ostream& log) {
  std::vector<CheckLine> lines;
  auto guarded = [&](const std::string& name, const std::function<CheckLine()>& body) {
    try {
      lines.push_back(body());
    } catch (const Error& e) {
      lines.push_back({name, false, e.what()});
    }
  };
  GridPtr g;
  try {
    g = make_grid(cfg);
  } catch (const Error& e) {
    log << e.what() << "\n";
    return exit_code_for(e);
  }
  const double floor = -cfg.tolerances.energy_tol;

  guarded("operator exactness", [&] { return check_operators(g); });
  guarded("forchheimer roots", [&] { return check_roots(g, cfg.model); });
  guarded("secant identities", [&] { return check_secants(cfg.model, cfg.seed); });
  guarded("potential convexity", [&] { return check_potentials(cfg.model); });

  std::optional<Trajectory> traj;
  guarded("initial-state slack", [&] {
    traj = march(initial_condition(cfg, g), 3, cfg);
    return CheckLine{"initial-state slack", traj->min_slack >= floor && traj->nonincreasing,
                     fmt("min slack/(1+|E0|) %.3e", traj->min_slack)};
  });
  guarded("equilibrium slack", [&] {
    const Trajectory t = march(equilibrium_state(cfg, g), 20, cfg);
    return CheckLine{"equilibrium slack", t.min_slack >= floor, fmt("min slack/(1+|E0|) %.3e", t.min_slack)};
  });
  if (traj) {
    lines.push_back({"mass laws", traj->psi_mass <= 1e-12 && traj->phi_product <= 1e-10,
                     fmt("psi drift %.2e, phi product formula %.2e", traj->psi_mass, traj->phi_product)});
    lines.push_back({"bound preservation", traj->min_margin > 0.0, fmt("min margin %.3e", traj->min_margin)});
  }

  bool all = true;
  for (const auto& l : lines) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-4s  %-22s", l.pass ? "PASS" : "FAIL", l.name.c_str());
    log << buf << "  " << l.detail << "\n";
    all = all && l.pass;
  }
  log << (all ? "all checks passed" : "some checks failed") << "\n";
  return all ? kExitOk : kExitSolver;
}

int steady(const RunConfig& cfg, std::ostream& log) {
  try {
    const GridPtr g = make_grid(cfg);
    const State seed = initial_condition(cfg, g);
    const double pm = cfg.steady.phi_mass.value_or(mean(seed.phi));
    const double sm = cfg.steady.psi_mass.value_or(mean(seed.psi));
    StationaryOptions opt;
    opt.tol = cfg.steady.tol;
    opt.max_newton = cfg.steady.max_newton;
    opt.damping_min = cfg.tolerances.newton_damping_min;
    const EquilibriumSolution sol = stationary_solve(pm, sm, seed.phi, seed.psi, cfg.model, opt);
    ensure_directory(cfg.output.directory);
    State eq(VectorField(g), sol.phi_inf, sol.psi_inf, seed.time);
    write_state(cfg, eq, "steady");
    const SeparationMargin m = separation_margin(sol.phi_inf, sol.psi_inf);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "mu_phi_inf = %.17g\nmu_psi_inf = %.17g\ndelta_phi = %.17g\ndelta_psi = %.17g\n"
                  "newton_iterations = %d\nresidual = %.3e\n",
                  sol.mu_phi_inf, sol.mu_psi_inf, m.delta_phi, m.delta_psi, sol.iterations, sol.residual);
    log << buf;
    return kExitOk;
  } catch (const Error& e) {
    log << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace chdf
