#include "chdf/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "chdf/errors.hpp"

namespace chdf {

namespace {

void require(bool ok, const char* key, const char* message) {
  if (!ok) throw ValidationError(key, std::string(key) + " " + message);
}

bool finite(double v) { return std::isfinite(v); }

bool same_point(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

bool in_box(double s, double lo, double hi) { return s >= lo && s <= hi; }

// Coefficients of G viewed as a polynomial in the clamped arguments:
// G = -(θc/2)P^2 - wQ(1-P^2) = -wQ + (wQ - θc/2) P^2.
double quadratic_coeff(double q, const ModelParams& p) { return p.w * q - 0.5 * p.theta_c; }
double linear_coeff(double pc, const ModelParams& p) { return -p.w * (1.0 - pc * pc); }

// (χ(a) - χ(b))/(a - b), exactly one inside the identity region.
double clamp_secant(double a, double b, double lo, double hi) {
  if (in_box(a, lo, hi) && in_box(b, lo, hi)) return 1.0;
  if (same_point(a, b)) return smooth_clamp(a, lo, hi).d1;
  return (smooth_clamp(a, lo, hi).value - smooth_clamp(b, lo, hi).value) / (a - b);
}

}  // namespace

void ModelParams::validate() const {
  require(finite(alpha) && alpha >= 0.0, "alpha", "must be >= 0");
  require(finite(beta) && beta > 0.0, "beta", "must be > 0");
  require(finite(sigma1) && sigma1 >= 0.0, "sigma1", "must be >= 0");
  require(finite(sigma2) && sigma2 >= 0.0, "sigma2", "must be >= 0");
  require(finite(c) && c > -1.0 && c < 1.0, "c", "must lie in the open interval (-1,1)");
  require(finite(r) && r > 2.0, "r", "must be > 2");
  require(finite(theta_phi) && theta_phi > 0.0, "theta_phi", "must be > 0");
  require(finite(theta_psi) && theta_psi > 0.0, "theta_psi", "must be > 0");
  require(finite(theta_c) && theta_c >= 0.0, "theta_c", "must be >= 0");
  require(finite(w) && w >= 0.0, "w", "must be >= 0");
  require(finite(nu_const) && nu_const > 0.0, "nu_const", "must be > 0");
  require(finite(eta_const) && eta_const > 0.0, "eta_const", "must be > 0");
  require(finite(m_phi_const) && m_phi_const > 0.0, "m_phi_const", "must be > 0");
  require(finite(m_psi_const) && m_psi_const > 0.0, "m_psi_const", "must be > 0");
}

PotentialEval f_phi(double s, const ModelParams& p) {
  if (!(std::abs(s) < 1.0)) {
    std::ostringstream msg;
    msg << "F_phi evaluated at " << s << " outside (-1,1)";
    throw Error(ErrorKind::OutOfDomain, msg.str());
  }
  const double t = p.theta_phi;
  return {0.5 * t * ((1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s)), t * std::atanh(s),
          t / ((1.0 - s) * (1.0 + s))};
}

PotentialEval f_psi(double s, const ModelParams& p) {
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream msg;
    msg << "F_psi evaluated at " << s << " outside (0,1)";
    throw Error(ErrorKind::OutOfDomain, msg.str());
  }
  const double t = p.theta_psi;
  const double q = 1.0 - s;
  return {t * (s * std::log(s) + q * std::log(q) + std::numbers::ln2), t * (std::log(s) - std::log(q)),
          t / (s * q)};
}

ClampEval smooth_clamp(double s, double lo, double hi) {
  constexpr double d = kClampMargin;
  if (in_box(s, lo, hi)) return {s, 1.0, 0.0};
  if (s > hi) {
    const double t = (s - hi) / d;
    if (t >= 1.0) return {hi + 0.5 * d, 0.0, 0.0};
    return {hi + d * (t - t * t * t + 0.5 * t * t * t * t), 1.0 - 3.0 * t * t + 2.0 * t * t * t,
            (-6.0 * t + 6.0 * t * t) / d};
  }
  const double t = (lo - s) / d;
  if (t >= 1.0) return {lo - 0.5 * d, 0.0, 0.0};
  return {lo - d * (t - t * t * t + 0.5 * t * t * t * t), 1.0 - 3.0 * t * t + 2.0 * t * t * t,
          (6.0 * t - 6.0 * t * t) / d};
}

CouplingEval coupling_g(double phi, double psi, const ModelParams& p) {
  const ClampEval cp = smooth_clamp(phi, -1.0, 1.0);
  const ClampEval cq = smooth_clamp(psi, 0.0, 1.0);
  const double P = cp.value, Q = cq.value;
  const double value = -0.5 * p.theta_c * P * P - p.w * Q * (1.0 - P * P);
  const double dP = -p.theta_c * P + 2.0 * p.w * Q * P;
  const double dQ = -p.w * (1.0 - P * P);
  return {value, dP * cp.d1, dQ * cq.d1};
}

CouplingHessian coupling_hessian(double phi, double psi, const ModelParams& p) {
  const ClampEval cp = smooth_clamp(phi, -1.0, 1.0);
  const ClampEval cq = smooth_clamp(psi, 0.0, 1.0);
  const double P = cp.value, Q = cq.value;
  const double dP = -p.theta_c * P + 2.0 * p.w * Q * P;
  const double dQ = -p.w * (1.0 - P * P);
  const double dPP = -p.theta_c + 2.0 * p.w * Q;
  const double dPQ = 2.0 * p.w * P;
  return {dPP * cp.d1 * cp.d1 + dP * cp.d2, dPQ * cp.d1 * cq.d1, dQ * cq.d2};
}

double secant_g_phi(double a, double b, double c_arg, const ModelParams& p) {
  if (same_point(a, b)) return coupling_g(a, c_arg, p).d_phi;
  const double B = quadratic_coeff(smooth_clamp(c_arg, 0.0, 1.0).value, p);
  const double Pa = smooth_clamp(a, -1.0, 1.0).value;
  const double Pb = smooth_clamp(b, -1.0, 1.0).value;
  return B * (Pa + Pb) * clamp_secant(a, b, -1.0, 1.0);
}

double secant_g_psi(double c_arg, double a, double b, const ModelParams& p) {
  if (same_point(a, b)) return coupling_g(c_arg, a, p).d_psi;
  const double A = linear_coeff(smooth_clamp(c_arg, -1.0, 1.0).value, p);
  return A * clamp_secant(a, b, 0.0, 1.0);
}

double secant_g_phi_da(double a, double b, double c_arg, const ModelParams& p) {
  const double B = quadratic_coeff(smooth_clamp(c_arg, 0.0, 1.0).value, p);
  if (in_box(a, -1.0, 1.0) && in_box(b, -1.0, 1.0)) return B;
  if (same_point(a, b)) return 0.5 * coupling_hessian(a, c_arg, p).phi_phi;
  const ClampEval ca = smooth_clamp(a, -1.0, 1.0);
  const double Pb = smooth_clamp(b, -1.0, 1.0).value;
  const double gap = a - b;
  return B * (2.0 * ca.value * ca.d1 * gap - (ca.value * ca.value - Pb * Pb)) / (gap * gap);
}

double secant_g_psi_da(double c_arg, double a, double b, const ModelParams& p) {
  if (in_box(a, 0.0, 1.0) && in_box(b, 0.0, 1.0)) return 0.0;
  if (same_point(a, b)) return 0.5 * coupling_hessian(c_arg, a, p).psi_psi;
  const double A = linear_coeff(smooth_clamp(c_arg, -1.0, 1.0).value, p);
  const ClampEval ca = smooth_clamp(a, 0.0, 1.0);
  const double Qb = smooth_clamp(b, 0.0, 1.0).value;
  const double gap = a - b;
  return A * (ca.d1 * gap - (ca.value - Qb)) / (gap * gap);
}

double darcy_nu(double, double, const ModelParams& p) { return p.nu_const; }
double forchheimer_eta(double, double, const ModelParams& p) { return p.eta_const; }
double mobility_phi(double, const ModelParams& p) { return p.m_phi_const; }
double mobility_psi(double, const ModelParams& p) { return p.m_psi_const; }
double reaction_sigma1(double, const ModelParams& p) { return p.sigma1; }

ScalarField darcy_nu(const ScalarField& phi, const ScalarField& psi, const ModelParams& p) {
  ScalarField out(phi.grid_ptr());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = darcy_nu(phi[n], psi[n], p);
  return out;
}

ScalarField forchheimer_eta(const ScalarField& phi, const ScalarField& psi, const ModelParams& p) {
  ScalarField out(phi.grid_ptr());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = forchheimer_eta(phi[n], psi[n], p);
  return out;
}

ScalarField mobility_phi(const ScalarField& phi, const ModelParams& p) {
  return map(phi, [&](double s) { return mobility_phi(s, p); });
}

ScalarField mobility_psi(const ScalarField& psi, const ModelParams& p) {
  return map(psi, [&](double s) { return mobility_psi(s, p); });
}

ScalarField reaction_sigma1(const ScalarField& phi, const ModelParams& p) {
  return map(phi, [&](double s) { return reaction_sigma1(s, p); });
}

EnergyParts energy_parts(const VectorField& u, const ScalarField& phi, const ScalarField& psi,
                         const ModelParams& p) {
  EnergyParts e;
  const VectorField gphi = gradient(phi);
  const VectorField gpsi = gradient(psi);
  e.gradient_phi = 0.5 * inner(gphi, gphi);
  e.gradient_psi = 0.5 * p.beta * inner(gpsi, gpsi);
  e.potential_phi = integrate(map(phi, [&](double s) { return f_phi(s, p).value; }));
  e.potential_psi = integrate(map(psi, [&](double s) { return f_psi(s, p).value; }));
  ScalarField g(phi.grid_ptr());
  for (std::size_t n = 0; n < g.size(); ++n) g[n] = coupling_g(phi[n], psi[n], p).value;
  e.coupling = integrate(g);
  if (p.sigma2 > 0.0) e.nonlocal = 0.5 * p.sigma2 * hminus1_norm_sq(zero_mean(phi));
  if (p.alpha > 0.0) e.kinetic = 0.5 * p.alpha * inner(u, u);
  return e;
}

double free_energy(const ScalarField& phi, const ScalarField& psi, const ModelParams& p) {
  return energy_parts(VectorField(phi.grid_ptr()), phi, psi, p).free();
}

double total_energy(const State& state, const ModelParams& p) {
  return energy_parts(state.u, state.phi, state.psi, p).total();
}

}  // namespace chdf
