#include "chdf/step.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "chdf/errors.hpp"
#include "chdf/krylov.hpp"

namespace chdf {

namespace {

constexpr double kBoundGap = 1e-13;

void require(bool ok, const char* key, const char* message) {
  if (!ok) throw ValidationError(key, std::string(key) + " " + message);
}

ScalarField project_zero(ScalarField f) {
  f += -mean(f);
  return f;
}

std::vector<double> cosine_symbol(const Grid2D& g, const std::function<double(double)>& of_lambda) {
  std::vector<double> s(g.size(), 0.0);
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k)
      if (k != 0 || l != 0) s[static_cast<std::size_t>(l) * g.nx() + k] = of_lambda(g.eigenvalue(k, l));
  return s;
}

// g -> zero-mean v with -div(m∇v) = g.
class MobilityInverse {
 public:
  explicit MobilityInverse(const ScalarField& m) : m_(m) {
    mbar_ = mean(m);
    constant_ = m.max() == m.min();
    inv_ = cosine_symbol(m.grid(), [&](double lam) { return 1.0 / (mbar_ * lam); });
  }

  double mean_mobility() const { return mbar_; }
  bool constant() const { return constant_; }

  ScalarField apply(const ScalarField& g) const {
    if (constant_) return cosine_multiply(g, inv_);
    const GridPtr& grid = g.grid_ptr();
    auto op = [&](const krylov::Vec& in, krylov::Vec& out) {
      VectorField flux = gradient(ScalarField(grid, in));
      for (std::size_t k = 0; k < in.size(); ++k) {
        flux.x[k] *= m_[k];
        flux.y[k] *= m_[k];
      }
      out = divergence(flux).data();
      for (double& v : out) v = -v;
    };
    auto pre = [&](const krylov::Vec& in, krylov::Vec& out) {
      out = cosine_multiply(project_zero(ScalarField(grid, in)), inv_).data();
    };
    krylov::Vec x = cosine_multiply(g, inv_).data();
    const auto res = krylov::pcg(op, pre, g.data(), x, 1e-13, 500);
    if (!res.converged && res.relative_residual > 1e-10)
      throw Error(ErrorKind::NonConvergence, "variable-mobility solve did not converge");
    return project_zero(ScalarField(grid, std::move(x)));
  }

 private:
  ScalarField m_;
  double mbar_ = 1.0;
  bool constant_ = true;
  std::vector<double> inv_;
};

// One Cahn-Hilliard subsystem with μ̂ eliminated:
//   R(f) = κA_N f + σ𝒩P0 f + P0 N(f) + (1/h) L_m⁻¹ P0[f - fk + h·rhs] = 0,  mean(f) = target.
struct ChSubproblem {
  const char* name;
  const ScalarField& fk;
  ScalarField rhs;
  double target;
  double kappa;
  double sigma;
  double lo, hi;
  const MobilityInverse& minv;
  std::function<void(const ScalarField& f, ScalarField& N, ScalarField& D)> nonlinear;
};

struct ChSolution {
  ScalarField f;
  ScalarField mu_hat;
  NewtonReport report;
};

bool inside(const ScalarField& f, double lo, double hi) {
  for (double v : f.data())
    if (!(v > lo + kBoundGap && v < hi - kBoundGap)) return false;
  return true;
}

ScalarField initial_guess(const ChSubproblem& sp) {
  const double mk = mean(sp.fk);
  ScalarField f = sp.fk;
  f += sp.target - mk;
  if (inside(f, sp.lo, sp.hi)) return f;
  for (double theta = 0.9; theta > 1e-6; theta *= 0.9) {
    for (std::size_t n = 0; n < f.size(); ++n) f[n] = sp.target + theta * (sp.fk[n] - mk);
    if (inside(f, sp.lo, sp.hi)) return f;
  }
  return ScalarField(sp.fk.grid_ptr(), sp.target);
}

ChSolution solve_subproblem(const ChSubproblem& sp, double h, const SolverTolerances& tol,
                            const ScalarField* guess) {
  const Grid2D& g = sp.fk.grid();
  const GridPtr& grid = sp.fk.grid_ptr();
  const std::vector<double> lin = cosine_symbol(g, [&](double lam) { return sp.kappa * lam + sp.sigma / lam; });

  ScalarField offset = sp.rhs;
  offset *= h;
  offset -= sp.fk;  // f + offset = f - fk + h·rhs

  const double mbar = sp.minv.mean_mobility();
  const bool fast = sp.minv.constant();
  // constant mobility: the transport part is diagonal in cosine space too
  std::vector<double> full = lin;
  ScalarField shift(grid);
  if (fast) {
    const std::vector<double> inv = cosine_symbol(g, [&](double lam) { return 1.0 / (h * mbar * lam); });
    for (std::size_t n = 0; n < full.size(); ++n) full[n] += inv[n];
    shift = cosine_multiply(offset, inv);
  }

  ScalarField N(grid), D(grid);
  auto residual = [&](const ScalarField& f) {
    sp.nonlinear(f, N, D);
    if (fast) {
      ScalarField r = cosine_multiply(f, full);
      r += shift;
      r += project_zero(N);
      return project_zero(std::move(r));
    }
    ScalarField r = cosine_multiply(f, lin);
    r += project_zero(N);
    ScalarField flux = sp.minv.apply(project_zero(f + offset));
    flux *= 1.0 / h;
    r += flux;
    return project_zero(std::move(r));
  };

  ScalarField f = guess && inside(*guess, sp.lo, sp.hi) ? *guess : initial_guess(sp);
  f += sp.target - mean(f);
  ScalarField R = residual(f);
  NewtonReport report;
  for (int it = 0;; ++it) {
    report.residual = R.max_abs();
    report.iterations = it;
    if (report.residual <= tol.newton_tol) break;
    if (it >= tol.max_newton) {
      std::ostringstream msg;
      msg << sp.name << " Newton residual " << report.residual << " after " << it << " iterations";
      throw Error(ErrorKind::NewtonDivergence, msg.str());
    }

    const double dbar = mean(D);
    const std::vector<double> pre_symbol = cosine_symbol(g, [&](double lam) {
      const double diag = sp.kappa * lam + sp.sigma / lam + dbar + 1.0 / (h * mbar * lam);
      return 1.0 / std::max(diag, 1e-12);
    });
    const ScalarField Dk = D;
    auto jac = [&](const krylov::Vec& in, krylov::Vec& out) {
      const ScalarField v(grid, in);
      ScalarField r = cosine_multiply(v, fast ? full : lin);
      ScalarField dv(grid);
      for (std::size_t n = 0; n < dv.size(); ++n) dv[n] = Dk[n] * v[n];
      r += project_zero(std::move(dv));
      if (!fast) {
        ScalarField flux = sp.minv.apply(project_zero(v));
        flux *= 1.0 / h;
        r += flux;
      }
      out = project_zero(std::move(r)).data();
    };
    auto pre = [&](const krylov::Vec& in, krylov::Vec& out) {
      out = cosine_multiply(ScalarField(grid, in), pre_symbol).data();
    };
    krylov::Vec b = R.data();
    for (double& v : b) v = -v;
    krylov::Vec x(b.size(), 0.0);
    const double rtol = std::clamp(0.1 * tol.newton_tol / report.residual, 1e-12, 1e-4);
    const auto lin_res = krylov::pcg(jac, pre, b, x, rtol, 400);
    report.linear_iterations += lin_res.iterations;
    const ScalarField delta = project_zero(ScalarField(grid, std::move(x)));

    double t = 1.0;
    ScalarField trial(grid);
    auto make_trial = [&](double step) {
      trial = f;
      for (std::size_t n = 0; n < trial.size(); ++n) trial[n] += step * delta[n];
      trial += sp.target - mean(trial);
    };
    make_trial(t);
    while (!inside(trial, sp.lo, sp.hi)) {
      t *= 0.5;
      if (t < tol.newton_damping_min) {
        std::ostringstream msg;
        msg << sp.name << " iterate leaves (" << sp.lo << ", " << sp.hi << ") at damping " << t;
        throw Error(ErrorKind::BoundViolation, msg.str());
      }
      make_trial(t);
    }
    const double base = norm_l2(R);
    for (;;) {
      ScalarField Rt = residual(trial);
      if (norm_l2(Rt) < base || Rt.max_abs() <= tol.newton_tol) {
        f = std::move(trial);
        R = std::move(Rt);
        break;
      }
      t *= 0.5;
      if (t < tol.newton_damping_min) {
        std::ostringstream msg;
        msg << sp.name << " Newton step fails to reduce residual " << report.residual;
        throw Error(ErrorKind::NewtonDivergence, msg.str());
      }
      make_trial(t);
    }
  }

  // μ̂ from the constitutive relation at the converged iterate
  sp.nonlinear(f, N, D);
  ScalarField mu = cosine_multiply(f, lin);
  mu += project_zero(N);
  return {std::move(f), project_zero(std::move(mu)), report};
}

ScalarField convection(const VectorField& u, const VectorField& grad, bool dealias) {
  ScalarField c(u.grid_ptr());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = u.x[n] * grad.x[n] + u.y[n] * grad.y[n];
  return dealias ? two_thirds_filter(c) : c;
}

struct StepContext {
  VectorField grad_phi_k;
  VectorField grad_psi_k;
  ScalarField m_phi;
  ScalarField m_psi;
  MobilityInverse inv_phi;
  MobilityInverse inv_psi;

  StepContext(const State& prev, const ModelParams& p)
      : grad_phi_k(gradient(prev.phi)),
        grad_psi_k(gradient(prev.psi)),
        m_phi(mobility_phi(prev.phi, p)),
        m_psi(mobility_psi(prev.psi, p)),
        inv_phi(m_phi),
        inv_psi(m_psi) {}
};

SubsystemSolution solve_subsystems(const State& prev, const StepContext& ctx, const VectorField& u,
                                   const MeanTargets& targets, double h, const ModelParams& p,
                                   const SolverTolerances& tol, const SubsystemSolution* guess) {
  const ScalarField& phik = prev.phi;
  const ScalarField& psik = prev.psi;

  ChSubproblem psi_problem{"psi",
                           psik,
                           convection(u, ctx.grad_psi_k, tol.dealias),
                           targets.b,
                           p.beta,
                           0.0,
                           0.0,
                           1.0,
                           ctx.inv_psi,
                           [&](const ScalarField& f, ScalarField& N, ScalarField& D) {
                             for (std::size_t n = 0; n < f.size(); ++n) {
                               const PotentialEval e = f_psi(f[n], p);
                               N[n] = e.first_derivative + secant_g_psi(phik[n], f[n], psik[n], p);
                               D[n] = e.second_derivative + secant_g_psi_da(phik[n], f[n], psik[n], p);
                             }
                           }};
  ChSolution psi = solve_subproblem(psi_problem, h, tol, guess ? &guess->psi : nullptr);

  ScalarField phi_rhs = convection(u, ctx.grad_phi_k, tol.dealias);
  const double phibar = mean(phik);
  if (p.sigma1 != 0.0) phi_rhs += (phibar - p.c) * reaction_sigma1(phik, p);
  const ScalarField& psin = psi.f;
  ChSubproblem phi_problem{"phi",
                           phik,
                           std::move(phi_rhs),
                           targets.a,
                           1.0,
                           p.sigma2,
                           -1.0,
                           1.0,
                           ctx.inv_phi,
                           [&](const ScalarField& f, ScalarField& N, ScalarField& D) {
                             for (std::size_t n = 0; n < f.size(); ++n) {
                               const PotentialEval e = f_phi(f[n], p);
                               N[n] = e.first_derivative + secant_g_phi(f[n], phik[n], psin[n], p);
                               D[n] = e.second_derivative + secant_g_phi_da(f[n], phik[n], psin[n], p);
                             }
                           }};
  ChSolution phi = solve_subproblem(phi_problem, h, tol, guess ? &guess->phi : nullptr);
  return {std::move(phi.f), std::move(psi.f), std::move(phi.mu_hat), std::move(psi.mu_hat), phi.report,
          psi.report};
}

double weighted_grad_sq(const ScalarField& mu, const ScalarField& m) {
  const VectorField g = gradient(mu);
  ScalarField d(mu.grid_ptr());
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = m[n] * (g.x[n] * g.x[n] + g.y[n] * g.y[n]);
  return integrate(d);
}

StepResult attempt_step(const State& prev, double h, const ModelParams& p, const SolverTolerances& tol,
                        const StepResult* warm) {
  const GridPtr& grid = prev.grid_ptr();
  const MeanTargets targets = mean_targets(prev.phi, prev.psi, h, p);
  const StepContext ctx(prev, p);
  const DragCoefficients drag = DragCoefficients::evaluate(prev.phi, prev.psi, p);
  const VelocitySolverOptions vopts{tol.velocity_tol, tol.max_outer, tol.uzawa_omega};

  ScalarField mu_phi_hat = warm ? warm->potentials.mu_phi_hat : ScalarField(grid);
  ScalarField mu_psi_hat = warm ? warm->potentials.mu_psi_hat : ScalarField(grid);
  VectorField u = prev.u;
  std::optional<ScalarField> pressure;
  if (warm) pressure = warm->pressure;
  std::optional<SubsystemSolution> sub;
  StepReport report;
  report.h = h;

  for (int it = 1;; ++it) {
    if (it > tol.max_picard) {
      std::ostringstream msg;
      msg << "Picard iteration did not settle within " << tol.max_picard << " sweeps (h = " << h << ")";
      throw Error(ErrorKind::PicardStall, msg.str());
    }
    VectorField force(grid);
    for (std::size_t n = 0; n < force.x.size(); ++n) {
      force.x[n] = mu_phi_hat[n] * ctx.grad_phi_k.x[n] + mu_psi_hat[n] * ctx.grad_psi_k.x[n];
      force.y[n] = mu_phi_hat[n] * ctx.grad_phi_k.y[n] + mu_psi_hat[n] * ctx.grad_psi_k.y[n];
    }
    VelocitySolution vel =
        velocity_solve(prev.u, force, h, drag, p, vopts, pressure ? &pressure.value() : nullptr);
    report.velocity_iterations += vel.report.outer_iterations;

    SubsystemSolution next = solve_subsystems(prev, ctx, vel.u, targets, h, p, tol, sub ? &sub.value() : nullptr);
    report.newton_iterations_phi += next.phi_report.iterations;
    report.newton_iterations_psi += next.psi_report.iterations;

    double change = std::max((vel.u.x - u.x).max_abs(), (vel.u.y - u.y).max_abs());
    const ScalarField& phi_old = sub ? sub->phi : prev.phi;
    const ScalarField& psi_old = sub ? sub->psi : prev.psi;
    change = std::max({change, (next.phi - phi_old).max_abs(), (next.psi - psi_old).max_abs()});

    u = std::move(vel.u);
    pressure = std::move(vel.pi);
    mu_phi_hat = next.mu_phi_hat;
    mu_psi_hat = next.mu_psi_hat;
    sub = std::move(next);
    report.picard_iterations = it;
    if (it >= 2 && change <= tol.picard_tol) break;
  }

  State next(std::move(u), std::move(sub->phi), std::move(sub->psi), prev.time + h, prev.step_index + 1);
  ChemicalPotentials mu = recover_physical_potentials(next.phi, next.psi, prev, mu_phi_hat, mu_psi_hat, p);

  const Dissipation diss = dissipation_integrands(next.u, drag, p.r);
  report.d2 = diss.d2;
  report.dr = diss.dr;
  const VectorField gphi = gradient(mu.mu_phi);
  const VectorField gpsi = gradient(mu.mu_psi);
  report.grad_mu_phi_sq = inner(gphi, gphi);
  report.grad_mu_psi_sq = inner(gpsi, gpsi);
  report.mobility_phi_sq = weighted_grad_sq(mu.mu_phi, ctx.m_phi);
  report.mobility_psi_sq = weighted_grad_sq(mu.mu_psi, ctx.m_psi);
  ScalarField sig_mu = reaction_sigma1(prev.phi, p);
  for (std::size_t n = 0; n < sig_mu.size(); ++n) sig_mu[n] *= mu.mu_phi[n];
  report.reaction_term = (mean(prev.phi) - p.c) * integrate(sig_mu);

  report.energy_before = total_energy(prev, p);
  report.energy_after = total_energy(next, p);
  report.dissipation_h = h * (report.d2 + report.dr + report.mobility_phi_sq + report.mobility_psi_sq);
  report.inequality_slack =
      report.energy_before - (report.energy_after + report.dissipation_h + h * report.reaction_term);
  report.mass_target_a = targets.a;
  report.mass_target_b = targets.b;
  report.mass_achieved_phi = mean(next.phi);
  report.mass_achieved_psi = mean(next.psi);
  report.min_phi = next.phi.min();
  report.max_phi = next.phi.max();
  report.min_psi = next.psi.min();
  report.max_psi = next.psi.max();
  return {std::move(next), std::move(mu), std::move(*pressure), report};
}

bool retryable(ErrorKind k) {
  return k == ErrorKind::PicardStall || k == ErrorKind::NewtonDivergence || k == ErrorKind::BoundViolation ||
         k == ErrorKind::NonConvergence || k == ErrorKind::OutOfDomain;
}

StepReport merge(const StepReport& a, const StepReport& b) {
  StepReport m = b;
  const double h = a.h + b.h;
  m.h = h;
  m.picard_iterations = a.picard_iterations + b.picard_iterations;
  m.newton_iterations_phi = a.newton_iterations_phi + b.newton_iterations_phi;
  m.newton_iterations_psi = a.newton_iterations_psi + b.newton_iterations_psi;
  m.velocity_iterations = a.velocity_iterations + b.velocity_iterations;
  m.halvings = a.halvings + b.halvings + 1;
  m.energy_before = a.energy_before;
  m.dissipation_h = a.dissipation_h + b.dissipation_h;
  m.inequality_slack = a.inequality_slack + b.inequality_slack;
  m.min_phi = std::min(a.min_phi, b.min_phi);
  m.max_phi = std::max(a.max_phi, b.max_phi);
  m.min_psi = std::min(a.min_psi, b.min_psi);
  m.max_psi = std::max(a.max_psi, b.max_psi);
  auto avg = [&](double x, double y) { return (a.h * x + b.h * y) / h; };
  m.d2 = avg(a.d2, b.d2);
  m.dr = avg(a.dr, b.dr);
  m.grad_mu_phi_sq = avg(a.grad_mu_phi_sq, b.grad_mu_phi_sq);
  m.grad_mu_psi_sq = avg(a.grad_mu_psi_sq, b.grad_mu_psi_sq);
  m.mobility_phi_sq = avg(a.mobility_phi_sq, b.mobility_phi_sq);
  m.mobility_psi_sq = avg(a.mobility_psi_sq, b.mobility_psi_sq);
  m.reaction_term = avg(a.reaction_term, b.reaction_term);
  return m;
}

StepResult advance(const State& prev, double h, const ModelParams& p, const SolverTolerances& tol,
                   const StepResult* warm, int depth) {
  try {
    return attempt_step(prev, h, p, tol, warm);
  } catch (const Error& e) {
    if (!retryable(e.kind()) || depth >= tol.max_halvings) throw;
  }
  StepResult first = advance(prev, 0.5 * h, p, tol, warm, depth + 1);
  StepResult second = advance(first.next, 0.5 * h, p, tol, &first, depth + 1);
  second.report = merge(first.report, second.report);
  second.next.step_index = prev.step_index + 1;
  second.next.time = prev.time + h;
  return second;
}

}  // namespace

void SolverTolerances::validate() const {
  require(std::isfinite(newton_tol) && newton_tol > 0.0, "newton_tol", "must be > 0");
  require(std::isfinite(picard_tol) && picard_tol > 0.0, "picard_tol", "must be > 0");
  require(std::isfinite(energy_tol) && energy_tol >= 0.0, "energy_tol", "must be >= 0");
  require(std::isfinite(velocity_tol) && velocity_tol > 0.0, "velocity_tol", "must be > 0");
  require(max_newton > 0, "max_newton", "must be > 0");
  require(max_picard > 0, "max_picard", "must be > 0");
  require(newton_damping_min > 0.0 && newton_damping_min <= 1.0, "newton_damping_min", "must lie in (0,1]");
  require(std::isfinite(uzawa_omega) && uzawa_omega > 0.0 && uzawa_omega <= 1.0, "uzawa_omega",
          "must lie in (0,1]");
  require(max_outer > 0, "max_outer", "must be > 0");
  require(max_halvings >= 0, "max_halvings", "must be >= 0");
}

MeanTargets mean_targets(const ScalarField& phi_prev, const ScalarField& psi_prev, double h, const ModelParams& p) {
  const double sig = mean(reaction_sigma1(phi_prev, p));
  if (!(h * sig < 1.0)) {
    std::ostringstream msg;
    msg << "h*sigma1 = " << h * sig << " must be < 1";
    throw Error(ErrorKind::StepTooLarge, msg.str());
  }
  const double phibar = mean(phi_prev);
  return {phibar - h * sig * (phibar - p.c), mean(psi_prev)};
}

SubsystemSolution ch_subsystem_solve(const State& prev, const VectorField& u, const MeanTargets& targets, double h,
                                     const ModelParams& p, const SolverTolerances& tol,
                                     const SubsystemSolution* guess) {
  const StepContext ctx(prev, p);
  return solve_subsystems(prev, ctx, u, targets, h, p, tol, guess);
}

ChemicalPotentials recover_physical_potentials(const ScalarField& phi, const ScalarField& psi, const State& prev,
                                               const ScalarField& mu_phi_hat, const ScalarField& mu_psi_hat,
                                               const ModelParams& p) {
  ScalarField a(phi.grid_ptr()), b(phi.grid_ptr());
  for (std::size_t n = 0; n < a.size(); ++n) {
    a[n] = f_phi(phi[n], p).first_derivative + secant_g_phi(phi[n], prev.phi[n], psi[n], p);
    b[n] = f_psi(psi[n], p).first_derivative + secant_g_psi(prev.phi[n], psi[n], prev.psi[n], p);
  }
  ChemicalPotentials mu(phi.grid_ptr());
  mu.mu_phi_hat = mu_phi_hat;
  mu.mu_psi_hat = mu_psi_hat;
  mu.mu_phi = mu_phi_hat;
  mu.mu_phi += mean(a);
  mu.mu_psi = mu_psi_hat;
  mu.mu_psi += mean(b);
  return mu;
}

StepResult coupled_time_step(const State& prev, double h, const ModelParams& p, const SolverTolerances& tol,
                             const StepResult* warm) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("h", "h must be > 0");
  return advance(prev, h, p, tol, warm, 0);
}

}  // namespace chdf
