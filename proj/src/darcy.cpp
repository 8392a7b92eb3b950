#include "chdf/darcy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chdf/errors.hpp"
#include "chdf/krylov.hpp"

namespace chdf {

namespace {

// m^e with the integer exponents of the common r = 3, 4 cases done exactly
double power(double m, double e) {
  if (e == 1.0) return m;
  if (e == 2.0) return m * m;
  if (e == 3.0) return m * m * m;
  return std::pow(m, e);
}

}  // namespace

double forchheimer_scalar_root(double c1, double c2, double r, double g_mag) {
  if (g_mag == 0.0) return 0.0;
  auto residual = [&](double m) { return c1 * m + c2 * power(m, r - 1.0) - g_mag; };
  double lo = 0.0;
  double hi = std::min(g_mag / c1, std::pow(g_mag / c2, 1.0 / (r - 1.0)));
  double m = hi;
  for (int it = 0; it < 200; ++it) {
    const double f = residual(m);
    if (f == 0.0) return m;
    if (f > 0.0)
      hi = m;
    else
      lo = m;
    const double slope = c1 + (r - 1.0) * c2 * power(m, r - 2.0);
    double next = m - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - m) <= 2.0 * std::numeric_limits<double>::epsilon() * m || hi - lo <= 0.0) {
      m = next;
      break;
    }
    m = next;
  }
  if (std::abs(residual(m)) > 1e-12 * (1.0 + g_mag)) {
    std::ostringstream msg;
    msg << "Forchheimer root did not converge (c1=" << c1 << ", c2=" << c2 << ", r=" << r << ", g=" << g_mag << ")";
    throw Error(ErrorKind::NonConvergence, msg.str());
  }
  return m;
}

DragCoefficients DragCoefficients::evaluate(const ScalarField& phi, const ScalarField& psi, const ModelParams& p) {
  return {darcy_nu(phi, psi, p), forchheimer_eta(phi, psi, p)};
}

DragCoefficients DragCoefficients::constant(const GridPtr& grid, const ModelParams& p) {
  return evaluate(ScalarField(grid, 0.0), ScalarField(grid, 0.5), p);
}

namespace {

struct RadialSolve {
  VectorField u;
  // Jacobian of w -> u per cell: jt I + (jr - jt) ŵŵᵀ
  std::vector<double> jt, jr, nx, ny;
  double root_residual = 0.0;
};

RadialSolve radial_solve(const VectorField& w, double lin, const DragCoefficients& drag, double r) {
  const std::size_t n = w.x.size();
  RadialSolve out{VectorField(w.grid_ptr()), std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    const double c1 = lin + drag.nu[k];
    const double c2 = drag.eta[k];
    const double gmag = std::hypot(w.x[k], w.y[k]);
    if (gmag == 0.0) {
      out.jt[k] = out.jr[k] = 1.0 / c1;
      continue;
    }
    const double m = forchheimer_scalar_root(c1, c2, r, gmag);
    const double ex = w.x[k] / gmag, ey = w.y[k] / gmag;
    out.u.x[k] = m * ex;
    out.u.y[k] = m * ey;
    out.nx[k] = ex;
    out.ny[k] = ey;
    const double mr2 = power(m, r - 2.0);
    out.jr[k] = 1.0 / (c1 + (r - 1.0) * c2 * mr2);
    out.jt[k] = 1.0 / (c1 + c2 * mr2);
    out.root_residual = std::max(out.root_residual, std::abs(c1 * m + c2 * mr2 * m - gmag));
  }
  return out;
}

}  // namespace

double momentum_residual(const VectorField& u, const ScalarField& pi, const VectorField& u_prev,
                         const VectorField& force, double h, const DragCoefficients& drag, const ModelParams& p) {
  const VectorField gp = gradient(pi);
  const double lin = p.alpha / h;
  double worst = 0.0;
  for (std::size_t k = 0; k < u.x.size(); ++k) {
    const double mag = std::hypot(u.x[k], u.y[k]);
    const double drag_k = drag.nu[k] + drag.eta[k] * power(mag, p.r - 2.0);
    const double rx = lin * (u.x[k] - u_prev.x[k]) + drag_k * u.x[k] + gp.x[k] - force.x[k];
    const double ry = lin * (u.y[k] - u_prev.y[k]) + drag_k * u.y[k] + gp.y[k] - force.y[k];
    worst = std::max(worst, std::hypot(rx, ry));
  }
  return worst;
}

VelocitySolution velocity_solve(const VectorField& u_prev, const VectorField& force, double h,
                                const DragCoefficients& drag, const ModelParams& p,
                                const VelocitySolverOptions& options, const ScalarField* pi_guess) {
  const GridPtr& grid = force.grid_ptr();
  const double lin = p.alpha / h;
  VectorField g = force;
  if (lin > 0.0) {
    for (std::size_t k = 0; k < g.x.size(); ++k) {
      g.x[k] += lin * u_prev.x[k];
      g.y[k] += lin * u_prev.y[k];
    }
  }
  ScalarField pi = pi_guess ? zero_mean(*pi_guess) : ScalarField(grid);

  auto evaluate = [&](const ScalarField& pressure) {
    const VectorField gp = gradient(pressure);
    VectorField w = g;
    w.x -= gp.x;
    w.y -= gp.y;
    return radial_solve(w, lin, drag, p.r);
  };

  RadialSolve state = evaluate(pi);
  ScalarField div = divergence(state.u);
  for (int outer = 0;; ++outer) {
    const double div_res = div.max_abs();
    // u = R(g - ∇π) pointwise, so the momentum residual is the radial one
    const double mom_res = state.root_residual;
    if (div_res <= options.tol && mom_res <= options.tol) {
      return {std::move(state.u), std::move(pi), {outer, div_res, mom_res, state.root_residual}};
    }
    if (outer >= options.max_outer) {
      std::ostringstream msg;
      msg << "velocity solve stalled after " << outer << " pressure updates (div residual " << div_res << ")";
      throw Error(ErrorKind::NonConvergence, msg.str());
    }

    // Schur complement S δ = -div(J ∇δ) on zero-mean pressures.
    double jbar = 0.0;
    for (std::size_t k = 0; k < state.jt.size(); ++k) jbar += 0.5 * (state.jt[k] + state.jr[k]);
    jbar /= static_cast<double>(state.jt.size());
    auto apply_S = [&](const krylov::Vec& in, krylov::Vec& out) {
      const VectorField gd = gradient(ScalarField(grid, in));
      VectorField flux(grid);
      for (std::size_t k = 0; k < in.size(); ++k) {
        const double proj = state.nx[k] * gd.x[k] + state.ny[k] * gd.y[k];
        const double dj = state.jr[k] - state.jt[k];
        flux.x[k] = state.jt[k] * gd.x[k] + dj * proj * state.nx[k];
        flux.y[k] = state.jt[k] * gd.y[k] + dj * proj * state.ny[k];
      }
      ScalarField d = divergence(flux);
      out = std::move(d.data());
      for (double& v : out) v = -v;
    };
    auto precondition = [&](const krylov::Vec& in, krylov::Vec& out) {
      ScalarField z = inverse_neumann_laplacian(zero_mean(ScalarField(grid, in)));
      z *= 1.0 / jbar;
      out = std::move(z.data());
    };
    krylov::Vec rhs(div.data());
    for (double& v : rhs) v = -v;
    krylov::Vec delta(rhs.size(), 0.0);
    krylov::pcg(apply_S, precondition, rhs, delta, 1e-6, 200);

    const double base = norm_l2(div);
    double step = options.omega;
    ScalarField trial(grid);
    for (int ls = 0;; ++ls) {
      trial = pi;
      for (std::size_t k = 0; k < delta.size(); ++k) trial[k] += step * delta[k];
      trial = zero_mean(trial);
      RadialSolve trial_state = evaluate(trial);
      ScalarField trial_div = divergence(trial_state.u);
      if (norm_l2(trial_div) < base || ls == 29) {
        state = std::move(trial_state);
        div = std::move(trial_div);
        break;
      }
      step *= 0.5;
    }
    pi = std::move(trial);
  }
}

VelocitySolution velocity_solve(const VectorField& u_prev, const VectorField& force, double h, const ModelParams& p,
                                const VelocitySolverOptions& options) {
  return velocity_solve(u_prev, force, h, DragCoefficients::constant(force.grid_ptr(), p), p, options);
}

Dissipation dissipation_integrands(const VectorField& u, const DragCoefficients& drag, double r) {
  ScalarField a(u.grid_ptr()), b(u.grid_ptr());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double mag2 = u.x[k] * u.x[k] + u.y[k] * u.y[k];
    a[k] = drag.nu[k] * mag2;
    b[k] = drag.eta[k] * std::pow(mag2, 0.5 * r);
  }
  return {integrate(a), integrate(b)};
}

Dissipation dissipation_integrands(const VectorField& u, const ModelParams& p) {
  return dissipation_integrands(u, DragCoefficients::constant(u.grid_ptr(), p), p.r);
}

}  // namespace chdf
