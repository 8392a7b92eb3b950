#include "chdf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "chdf/errors.hpp"
#include "chdf/krylov.hpp"

namespace chdf {

namespace {

constexpr double kBoundGap = 1e-13;

ScalarField project_zero(ScalarField f) {
  f += -mean(f);
  return f;
}

std::vector<double> symbol_of(const Grid2D& g, double kappa, double sigma, double shift) {
  std::vector<double> s(g.size(), 0.0);
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k) {
      if (k == 0 && l == 0) continue;
      const double lam = g.eigenvalue(k, l);
      s[static_cast<std::size_t>(l) * g.nx() + k] = kappa * lam + sigma / lam + shift;
    }
  return s;
}

std::vector<double> inverted(std::vector<double> s) {
  for (double& v : s) v = v > 0.0 ? 1.0 / v : 0.0;
  return s;
}

double norm_lr(const VectorField& u, double r) {
  double acc = 0.0;
  for (std::size_t n = 0; n < u.x.size(); ++n) acc += std::pow(std::hypot(u.x[n], u.y[n]), r);
  return std::pow(acc * u.grid().cell_area(), 1.0 / r);
}

// Pointwise terms of the stationary equations and their second derivatives.
struct Pointwise {
  ScalarField n_phi, n_psi;
  ScalarField d11, d12, d22;

  Pointwise(const ScalarField& phi, const ScalarField& psi, const ModelParams& p)
      : n_phi(phi.grid_ptr()), n_psi(phi.grid_ptr()), d11(phi.grid_ptr()), d12(phi.grid_ptr()),
        d22(phi.grid_ptr()) {
    for (std::size_t n = 0; n < phi.size(); ++n) {
      const PotentialEval fp = f_phi(phi[n], p);
      const PotentialEval fs = f_psi(psi[n], p);
      const CouplingEval gc = coupling_g(phi[n], psi[n], p);
      const CouplingHessian gh = coupling_hessian(phi[n], psi[n], p);
      n_phi[n] = fp.first_derivative + gc.d_phi;
      n_psi[n] = fs.first_derivative + gc.d_psi;
      d11[n] = fp.second_derivative + gh.phi_phi;
      d12[n] = gh.phi_psi;
      d22[n] = fs.second_derivative + gh.psi_psi;
    }
  }
};

struct StationaryResidual {
  ScalarField phi, psi;
  double max_abs() const { return std::max(phi.max_abs(), psi.max_abs()); }
  double l2() const { return std::hypot(norm_l2(phi), norm_l2(psi)); }
};

StationaryResidual residual_of(const ScalarField& phi, const ScalarField& psi, const Pointwise& pw,
                               const std::vector<double>& lin_phi, const std::vector<double>& lin_psi) {
  ScalarField rphi = cosine_multiply(phi, lin_phi);
  rphi += pw.n_phi;
  ScalarField rpsi = cosine_multiply(psi, lin_psi);
  rpsi += pw.n_psi;
  return {project_zero(std::move(rphi)), project_zero(std::move(rpsi))};
}

bool admissible(const ScalarField& phi, const ScalarField& psi) {
  for (std::size_t n = 0; n < phi.size(); ++n) {
    if (!(std::abs(phi[n]) < 1.0 - kBoundGap)) return false;
    if (!(psi[n] > kBoundGap && psi[n] < 1.0 - kBoundGap)) return false;
  }
  return true;
}

}  // namespace

const std::array<std::string_view, LedgerRow::kColumns>& LedgerRow::column_names() {
  static const std::array<std::string_view, kColumns> names{
      "time",    "energy_total", "energy_free", "kinetic", "dissipation_d2", "dissipation_dr",
      "grad_mu_phi_sq", "grad_mu_psi_sq", "reaction_term", "slack", "mean_phi", "mean_psi",
      "min_phi", "max_phi", "min_psi", "max_psi", "u_l2", "u_lr"};
  return names;
}

std::array<double, LedgerRow::kColumns> LedgerRow::values() const {
  return {time,    energy_total, energy_free, kinetic, dissipation_d2, dissipation_dr,
          grad_mu_phi_sq, grad_mu_psi_sq, reaction_term, slack, mean_phi, mean_psi,
          min_phi, max_phi, min_psi, max_psi, u_l2, u_lr};
}

LedgerRow make_ledger_row(const StepResult& step, const ModelParams& p) {
  const State& s = step.next;
  const StepReport& r = step.report;
  const EnergyParts e = energy_parts(s.u, s.phi, s.psi, p);
  LedgerRow row;
  row.time = s.time;
  row.energy_total = e.total();
  row.energy_free = e.free();
  row.kinetic = e.kinetic;
  row.dissipation_d2 = r.d2;
  row.dissipation_dr = r.dr;
  row.grad_mu_phi_sq = r.grad_mu_phi_sq;
  row.grad_mu_psi_sq = r.grad_mu_psi_sq;
  row.reaction_term = r.reaction_term;
  row.slack = r.inequality_slack;
  row.mean_phi = mean(s.phi);
  row.mean_psi = mean(s.psi);
  row.min_phi = s.phi.min();
  row.max_phi = s.phi.max();
  row.min_psi = s.psi.min();
  row.max_psi = s.psi.max();
  row.u_l2 = norm_l2(s.u);
  row.u_lr = norm_lr(s.u, p.r);
  return row;
}

double equilibrium_residual(const State& state, const ChemicalPotentials& potentials, const ModelParams& p) {
  const double gphi = norm_l2(gradient(potentials.mu_phi));
  const double gpsi = norm_l2(gradient(potentials.mu_psi));
  const double reaction = std::abs(mean(reaction_sigma1(state.phi, p)) * (mean(state.phi) - p.c));
  return std::max({gphi, gpsi, norm_l2(state.u), reaction});
}

std::vector<std::size_t> classify_good_times(const std::vector<LedgerRow>& ledger, double M, double T) {
  std::vector<std::size_t> out;
  const double M2 = std::isinf(M) ? M : M * M;
  for (std::size_t i = 0; i < ledger.size(); ++i)
    if (ledger[i].time >= T && ledger[i].grad_mu_phi_sq + ledger[i].grad_mu_psi_sq <= M2) out.push_back(i);
  return out;
}

SeparationMargin separation_margin(const ScalarField& phi, const ScalarField& psi) {
  double worst = 0.0;
  for (double v : psi.data()) worst = std::max(worst, std::abs(v - 0.5));
  return {1.0 - phi.max_abs(), 0.5 - worst};
}

double stationary_residual(const ScalarField& phi, const ScalarField& psi, const ModelParams& p) {
  const Grid2D& g = phi.grid();
  const Pointwise pw(phi, psi, p);
  return residual_of(phi, psi, pw, symbol_of(g, 1.0, p.sigma2, 0.0), symbol_of(g, p.beta, 0.0, 0.0)).max_abs();
}

EquilibriumSolution stationary_solve(double phi_mass, double psi_mass, const ScalarField& seed_phi,
                                     const ScalarField& seed_psi, const ModelParams& p,
                                     const StationaryOptions& options) {
  if (!(std::abs(phi_mass) < 1.0)) throw ValidationError("phi_mass", "phi_mass must lie in (-1, 1)");
  if (!(psi_mass > 0.0 && psi_mass < 1.0)) throw ValidationError("psi_mass", "psi_mass must lie in (0, 1)");
  const GridPtr& grid = seed_phi.grid_ptr();
  const Grid2D& g = *grid;
  const std::size_t n = g.size();

  ScalarField phi = seed_phi, psi = seed_psi;
  phi += phi_mass - mean(phi);
  psi += psi_mass - mean(psi);
  if (!admissible(phi, psi)) throw Error(ErrorKind::BoundViolation, "stationary seed outside the admissible box");

  const std::vector<double> lin_phi = symbol_of(g, 1.0, p.sigma2, 0.0);
  const std::vector<double> lin_psi = symbol_of(g, p.beta, 0.0, 0.0);

  auto pw = std::make_unique<Pointwise>(phi, psi, p);
  StationaryResidual R = residual_of(phi, psi, *pw, lin_phi, lin_psi);
  int it = 0;
  for (;; ++it) {
    const double res = R.max_abs();
    if (res <= options.tol) break;
    if (it >= options.max_newton) {
      std::ostringstream msg;
      msg << "stationary residual " << res << " after " << it << " iterations";
      throw Error(ErrorKind::NewtonDivergence, msg.str());
    }

    const Pointwise& d = *pw;
    const std::vector<double> pre_phi = inverted(symbol_of(g, 1.0, p.sigma2, std::max(mean(d.d11), 0.0)));
    const std::vector<double> pre_psi = inverted(symbol_of(g, p.beta, 0.0, std::max(mean(d.d22), 0.0)));
    auto split = [&](const krylov::Vec& in) {
      ScalarField a(grid, std::vector<double>(in.begin(), in.begin() + n));
      ScalarField b(grid, std::vector<double>(in.begin() + n, in.end()));
      return std::pair{project_zero(std::move(a)), project_zero(std::move(b))};
    };
    auto join = [&](const ScalarField& a, const ScalarField& b, krylov::Vec& out) {
      out.resize(2 * n);
      std::copy(a.data().begin(), a.data().end(), out.begin());
      std::copy(b.data().begin(), b.data().end(), out.begin() + n);
    };
    auto jac = [&](const krylov::Vec& in, krylov::Vec& out) {
      const auto [a, b] = split(in);
      ScalarField ja = cosine_multiply(a, lin_phi), jb = cosine_multiply(b, lin_psi);
      for (std::size_t k = 0; k < n; ++k) {
        ja[k] += d.d11[k] * a[k] + d.d12[k] * b[k];
        jb[k] += d.d12[k] * a[k] + d.d22[k] * b[k];
      }
      join(project_zero(std::move(ja)), project_zero(std::move(jb)), out);
    };
    auto pre = [&](const krylov::Vec& in, krylov::Vec& out) {
      const auto [a, b] = split(in);
      join(cosine_multiply(a, pre_phi), cosine_multiply(b, pre_psi), out);
    };
    krylov::Vec b;
    join(R.phi, R.psi, b);
    for (double& v : b) v = -v;
    krylov::Vec x(2 * n, 0.0);
    const double rtol = std::clamp(0.1 * options.tol / res, 1e-12, 1e-4);
    krylov::gmres(jac, pre, b, x, rtol, 60, 2000);
    const auto [dphi, dpsi] = split(x);

    const double base = R.l2();
    double t = 1.0;
    bool inside = true;
    for (;;) {
      ScalarField tphi = phi, tpsi = psi;
      for (std::size_t k = 0; k < n; ++k) {
        tphi[k] += t * dphi[k];
        tpsi[k] += t * dpsi[k];
      }
      inside = admissible(tphi, tpsi);
      if (inside) {
        auto tpw = std::make_unique<Pointwise>(tphi, tpsi, p);
        StationaryResidual Rt = residual_of(tphi, tpsi, *tpw, lin_phi, lin_psi);
        if (Rt.l2() < base || Rt.max_abs() <= options.tol) {
          phi = std::move(tphi);
          psi = std::move(tpsi);
          pw = std::move(tpw);
          R = std::move(Rt);
          break;
        }
      }
      t *= 0.5;
      if (t < options.damping_min) {
        std::ostringstream msg;
        msg << "stationary Newton stalls at residual " << res;
        throw Error(inside ? ErrorKind::NewtonDivergence : ErrorKind::BoundViolation, msg.str());
      }
    }
  }

  EquilibriumSolution sol{phi, psi, mean(pw->n_phi), mean(pw->n_psi), it, R.max_abs()};
  return sol;
}

double mass_closed_form(double t, const ModelParams& p, double phi_bar_0) {
  return p.c + (phi_bar_0 - p.c) * std::exp(-p.sigma1 * t);
}

}  // namespace chdf
