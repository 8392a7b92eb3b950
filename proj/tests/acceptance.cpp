// End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chdf/config.hpp"
#include "chdf/darcy.hpp"
#include "chdf/diagnostics.hpp"
#include "chdf/driver.hpp"
#include "chdf/errors.hpp"
#include "chdf/io.hpp"
#include "chdf/step.hpp"

using namespace chdf;
namespace fs = std::filesystem;
using std::numbers::pi;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Smallest bound margin seen by any acceptance run.
double g_min_margin = INFINITY;
void note_margin(const State& s) {
  const SeparationMargin m = separation_margin(s.phi, s.psi);
  g_min_margin = std::min({g_min_margin, m.delta_phi, m.delta_psi});
  if (!(s.phi.max() < 1.0 && s.phi.min() > -1.0 && s.psi.min() > 0.0 && s.psi.max() < 1.0)) g_min_margin = -1.0;
}

struct Outcome {
  bool pass;
  std::string detail;
};

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

RunConfig surfactant_config(const std::string& preset) {
  RunConfig c = parse_config(
      "[grid]\nnx = 64\nny = 64\nLx = 4\nLy = 4\n"
      "[model]\ntheta_c = 3\nw = 1\ntheta_psi = 0.5\nsigma2 = 0.05\nr = 3\n"
      "[initial]\npsi_mean = 0.5\n");
  c.initial.preset = preset;
  return c;
}

Outcome operators() {
  const auto t0 = Clock::now();
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  double eig = 0.0;
  for (auto [k, l] : {std::pair{1, 0}, {2, 3}, {5, 1}}) {
    const double kx = k * pi, ky = l * pi, lam = kx * kx + ky * ky;
    const auto f = ScalarField::from_function(g, [&](double x, double y) { return std::cos(kx * x) * std::cos(ky * y); });
    eig = std::max(eig, (neumann_laplacian(f) - lam * f).max_abs() / lam);
    eig = std::max(eig, (inverse_neumann_laplacian(f) - (1.0 / lam) * f).max_abs());
    const VectorField d = gradient(f);
    const auto ex = ScalarField::from_function(g, [&](double x, double y) { return -kx * std::sin(kx * x) * std::cos(ky * y); });
    const auto ey = ScalarField::from_function(g, [&](double x, double y) { return -ky * std::cos(kx * x) * std::sin(ky * y); });
    eig = std::max({eig, (d.x - ex).max_abs() / std::max(kx, 1.0), (d.y - ey).max_abs() / std::max(ky, 1.0)});
    eig = std::max(eig, (divergence(d) + lam * f).max_abs() / lam);
  }
  const auto q = ScalarField::from_function(g, [](double x, double y) {
    return std::cos(pi * x) * std::cos(2 * pi * y) + 0.3 * std::cos(3 * pi * x) + 0.2;
  });
  const double annihilate = helmholtz_project(gradient(q)).u.max_abs();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField v(g);
  for (std::size_t n = 0; n < v.x.size(); ++n) {
    v.x[n] = u(rng);
    v.y[n] = u(rng);
  }
  const Projection once = helmholtz_project(v), twice = helmholtz_project(once.u);
  const double idem = std::max((once.u.x - twice.u.x).max_abs(), (once.u.y - twice.u.y).max_abs());
  const double dt = seconds_since(t0);
  return {eig <= 1e-11 && annihilate <= 1e-10 && idem <= 1e-10 && dt < 1.0,
          fmt("eigenmodes %.1e, annihilation %.1e, idempotence %.1e, %.2fs", eig, annihilate, idem, dt)};
}

struct StripeStats {
  double worst_slack = INFINITY;  // min slack/(1+|E0|)
  bool nonincreasing = true;
  double psi_drift = 0.0;
};

StripeStats stripe_run(double alpha) {
  RunConfig c = surfactant_config("stripe");
  c.model.alpha = alpha;
  State s = initial_condition(c, Grid2D::create(64, 64, 4.0, 4.0));
  const double e0 = total_energy(s, c.model), psi0 = mean(s.psi);
  StripeStats st;
  std::optional<StepResult> last;
  double prev = e0;
  for (int k = 0; k < 500; ++k) {
    StepResult r = coupled_time_step(s, 1e-3, c.model, c.tolerances, last ? &last.value() : nullptr);
    st.worst_slack = std::min(st.worst_slack, r.report.inequality_slack / (1.0 + std::abs(e0)));
    if (!(r.report.energy_after <= prev)) st.nonincreasing = false;
    prev = r.report.energy_after;
    st.psi_drift = std::max(st.psi_drift, std::abs(mean(r.next.psi) - psi0));
    note_margin(r.next);
    s = r.next;
    last = std::move(r);
  }
  return st;
}

std::vector<StripeStats> g_stripe;

Outcome energy_inequality() {
  const auto t0 = Clock::now();
  g_stripe = {stripe_run(0.0), stripe_run(1.0)};
  const double dt = seconds_since(t0);
  bool ok = dt < 120.0;
  double worst = INFINITY;
  for (const auto& s : g_stripe) {
    ok = ok && s.worst_slack >= -1e-9 && s.nonincreasing;
    worst = std::min(worst, s.worst_slack);
  }
  return {ok, fmt("min slack/(1+|E0|) %.2e, energy nonincreasing %s, %.1fs", worst,
                  yes_no(g_stripe[0].nonincreasing && g_stripe[1].nonincreasing), dt)};
}

Outcome mass_laws() {
  double psi = 0.0;
  for (const auto& s : g_stripe) psi = std::max(psi, s.psi_drift);

  RunConfig c = surfactant_config("random_spinodal");
  c.grid.nx = c.grid.ny = 32;
  c.model.sigma1 = 0.5;
  c.model.c = 0.0;
  c.initial.phi_mean = 0.3;
  const GridPtr g = Grid2D::create(32, 32, 4.0, 4.0);
  const double T = 0.2;
  double product = 0.0;
  std::vector<double> err;
  for (double h : {2e-3, 1e-3, 5e-4}) {
    State s = initial_condition(c, g);
    const double m0 = mean(s.phi);
    std::optional<StepResult> last;
    const long steps = std::lround(T / h);
    for (long k = 1; k <= steps; ++k) {
      StepResult r = coupled_time_step(s, h, c.model, c.tolerances, last ? &last.value() : nullptr);
      product = std::max(product, std::abs(mean(r.next.phi) - std::pow(1.0 - h * c.model.sigma1, k) * m0));
      note_margin(r.next);
      s = r.next;
      last = std::move(r);
    }
    err.push_back(std::abs(mean(s.phi) - mass_closed_form(T, c.model, 0.3)));
  }
  const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
  return {psi <= 1e-12 && product <= 1e-10 && std::min(o1, o2) >= 0.9,
          fmt("psi drift %.1e, product formula %.1e, observed orders %.3f %.3f", psi, product, o1, o2)};
}

Outcome bounds() { return {g_min_margin > 0.0, fmt("smallest margin over all runs %.3e", g_min_margin)}; }

Outcome roots() {
  const double a = forchheimer_scalar_root(1.0, 1.0, 3.0, 2.0), b = forchheimer_scalar_root(1.0, 1.0, 4.0, 10.0);
  bool mono = true;
  double prev = -1.0;
  for (int k = 0; k < 1000; ++k) {
    const double m = forchheimer_scalar_root(1.0, 1.0, 3.0, 0.01 * k * k);
    mono = mono && m > prev;
    prev = m;
  }
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  ModelParams p;
  const auto q = ScalarField::from_function(g, [](double x, double y) { return std::cos(pi * x) * std::cos(pi * y) + 0.5 * std::cos(2 * pi * y); });
  const double un = norm_l2(velocity_solve(VectorField(g), gradient(q), 1e-3, p).u);
  const double e = std::max(std::abs(a - 1.0), std::abs(b - 2.0));
  return {e <= 1e-12 && mono && un <= 1e-9, fmt("root error %.1e, monotone %s, |u| %.1e", e, yes_no(mono), un)};
}

Outcome secants() {
  ModelParams p;
  p.theta_c = 3.0;
  p.w = 1.0;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> a(-1.0, 1.0), q(0.0, 1.0);
  double ident = 0.0, branch = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double x = a(rng), y = a(rng), c = q(rng);
    ident = std::max(ident, std::abs(secant_g_phi(x, y, c, p) * (x - y) - (coupling_g(x, c, p).value - coupling_g(y, c, p).value)));
    const double s = q(rng), t = q(rng), cp = a(rng);
    ident = std::max(ident, std::abs(secant_g_psi(cp, s, t, p) * (s - t) - (coupling_g(cp, s, p).value - coupling_g(cp, t, p).value)));
    // analytic partials of -(θc/2)φ² - wψ(1-φ²) inside the box
    branch = std::max(branch, std::abs(secant_g_phi(x, x, c, p) - (-p.theta_c * x + 2.0 * p.w * c * x)));
    branch = std::max(branch, std::abs(secant_g_psi(cp, s, s, p) - (-p.w * (1.0 - cp * cp))));
  }
  return {ident <= 1e-13 && branch <= 1e-10, fmt("identity %.1e, equal-argument branch %.1e", ident, branch)};
}

Outcome equilibrium() {
  const auto t0 = Clock::now();
  RunConfig c = surfactant_config("random_spinodal");
  c.model.m_phi_const = c.model.m_psi_const = 5.0;
  c.initial.phi_mean = 0.0;
  c.initial.psi_mean = 0.4;
  c.initial.noise = 0.05;
  c.seed = 1;
  const GridPtr g = Grid2D::create(64, 64, 4.0, 4.0);
  State s = initial_condition(c, g);
  std::optional<StepResult> last;
  double res = INFINITY, grad_sum = INFINITY, un = INFINITY;
  const double h = 1e-3;
  // Steps until the sampled residual drops below `threshold` or t = 50.
  auto relax = [&](double threshold) {
    while (s.time < 50.0 - 0.5 * h) {
      StepResult r = coupled_time_step(s, h, c.model, c.tolerances, last ? &last.value() : nullptr);
      note_margin(r.next);
      s = r.next;
      last = std::move(r);
      if (s.step_index % 10 == 0) {
        res = equilibrium_residual(s, last->potentials, c.model);
        if (res < threshold) break;
      }
    }
    grad_sum = norm_l2(gradient(last->potentials.mu_phi)) + norm_l2(gradient(last->potentials.mu_psi));
    un = norm_l2(s.u);
  };
  auto resolve = [&](SeparationMargin& m) -> double {
    try {
      const EquilibriumSolution e = stationary_solve(mean(s.phi), mean(s.psi), s.phi, s.psi, c.model);
      m = separation_margin(e.phi_inf, e.psi_inf);
      return std::max((e.phi_inf - s.phi).max_abs(), (e.psi_inf - s.psi).max_abs());
    } catch (const Error& e) {
      std::printf("  stationary re-solve failed: %s\n", e.what());
      return INFINITY;
    }
  };

  relax(1e-6);
  SeparationMargin m{-1.0, -1.0};
  const double dist = resolve(m);
  const SeparationMargin mf = separation_margin(s.phi, s.psi);
  const double dt = seconds_since(t0);
  const bool ok = res < 1e-6 && un < 1e-5 && grad_sum < 1e-5 && dist <= 1e-6 && mf.delta_phi > 0 &&
                  mf.delta_psi > 0 && m.delta_phi > 0 && m.delta_psi > 0 && dt < 600.0;
  std::string detail = fmt("t = %.2f, residual %.2e, |u| %.1e, grad mu sum %.1e, re-solve distance %.2e", s.time, res,
                           un, grad_sum, dist) +
                       fmt(", margins %.3f %.3f, %.0fs", std::min(mf.delta_phi, m.delta_phi),
                           std::min(mf.delta_psi, m.delta_psi), dt);

  // Not part of the verdict: the same trajectory continued to a tighter residual.
  const double ratio = dist / res;
  relax(1e-8);
  SeparationMargin m2{-1.0, -1.0};
  const double dist2 = resolve(m2);
  detail += fmt("; distance/residual %.2f; continued to t = %.2f, residual %.2e, re-solve distance %.2e", ratio,
                s.time, res, dist2);
  return {ok, detail};
}

Outcome self_convergence() {
  RunConfig c = surfactant_config("stripe");
  const GridPtr g = Grid2D::create(64, 64, 4.0, 4.0);
  std::vector<ScalarField> phi;
  for (double h : {4e-3, 2e-3, 1e-3}) {
    State s = initial_condition(c, g);
    std::optional<StepResult> last;
    for (long k = 0; k < std::lround(0.1 / h); ++k) {
      StepResult r = coupled_time_step(s, h, c.model, c.tolerances, last ? &last.value() : nullptr);
      note_margin(r.next);
      s = r.next;
      last = std::move(r);
    }
    phi.push_back(s.phi);
  }
  const double d1 = norm_l2(phi[0] - phi[1]), d2 = norm_l2(phi[1] - phi[2]);
  const double order = std::log2(d1 / d2);
  return {order >= 0.9, fmt("differences %.3e %.3e, observed order %.3f", d1, d2, order)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "chdf_acceptance";
  fs::remove_all(root);
  RunConfig c = surfactant_config("random_spinodal");
  c.grid.nx = c.grid.ny = 32;
  c.initial.psi_mean = 0.4;
  c.time.t_end = 0.05;
  c.time.output_every = 25;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::ostringstream log;
  c.output.directory = (root / "a").string();
  const int ea = run(c, log);
  c.output.directory = (root / "b").string();
  const int eb = run(c, log);
  bool same = ea == 0 && eb == 0 && slurp(root / "a" / "ledger.csv") == slurp(root / "b" / "ledger.csv");
  for (const char* f : {"snap_000025_phi.chdf", "snap_000050_psi.chdf", "snap_000050_ux.chdf"})
    same = same && slurp(root / "a" / f) == slurp(root / "b" / f);

  const GridPtr g = Grid2D::create(32, 32, 4.0, 4.0);
  const State s = initial_condition(c, g);
  write_snapshot((root / "rt.chdf").string(), s.phi, 1.25, "phi");
  double t = 0.0;
  const bool round = read_snapshot_field((root / "rt.chdf").string(), g, &t).data() == s.phi.data() && t == 1.25;

  const std::vector<std::pair<std::string, std::string>> bad{
      {"[model]\nbeta = 0\n", "beta"},           {"[model]\nsigma2 = -1\n", "sigma2"},
      {"[model]\nc = 1.5\n", "c"},               {"[model]\nalpha = -1\n", "alpha"},
      {"[model]\ntheta_phi = 0\n", "theta_phi"}, {"[model]\ntheta_psi = 0\n", "theta_psi"},
      {"[model]\nnu_const = 0\n", "nu_const"},   {"[model]\neta_const = -1\n", "eta_const"},
      {"[model]\nm_phi_const = 0\n", "m_phi_const"}, {"[model]\nm_psi_const = 0\n", "m_psi_const"},
      {"[model]\nr = 2.0\n", "r"},               {"[model]\nsigma1 = -1\n", "sigma1"},
      {"[model]\ntheta_c = -1\n", "theta_c"},    {"[model]\nw = -0.5\n", "w"}};
  int named = 0;
  for (const auto& [text, key] : bad) {
    try {
      parse_config(text);
    } catch (const ValidationError& e) {
      named += e.key() == key;
    }
  }
  fs::remove_all(root);
  return {same && round && named == static_cast<int>(bad.size()),
          fmt("bitwise repeat %s, snapshot round trip %s, keys named %d/%zu", yes_no(same), yes_no(round), named,
              bad.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // 4 is evaluated last because it collects margins from every other run.
  const std::vector<Criterion> list{
      {1, "operator exactness", operators},         {2, "discrete energy inequality", energy_inequality},
      {3, "mass laws", mass_laws},                  {5, "forchheimer scalar solver", roots},
      {6, "secant identities", secants},            {7, "convergence to equilibrium", equilibrium},
      {8, "time self-convergence", self_convergence}, {9, "determinism and formats", determinism},
      {4, "bound preservation", bounds}};
  std::vector<std::string> lines(10);
  bool all = true;
  for (const auto& c : list) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %d %s  %-28s ", c.id, o.pass ? "PASS" : "FAIL", c.name);
    lines[c.id] = head + o.detail;
    std::printf("%s\n", lines[c.id].c_str());
    std::fflush(stdout);
  }
  std::printf("summary\n");
  for (int i = 1; i <= 9; ++i) std::printf("%s\n", lines[i].c_str());
  std::printf("%s\n", all ? "all criteria passed" : "some criteria failed");
  return all ? 0 : 1;
}
