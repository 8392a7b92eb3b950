#include <cmath>
#include <numbers>
#include <random>

#include "chdf/errors.hpp"
#include "chdf/model.hpp"
#include "doctest.h"

using namespace chdf;
using std::numbers::pi;

namespace {

ModelParams coupled() {
  ModelParams p;
  p.theta_c = 2.0;
  p.w = 1.0;
  return p;
}

double fd(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("parameter validation names the key") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  auto key_of = [](ModelParams q) {
    try {
      q.validate();
    } catch (const ValidationError& e) {
      return e.key();
    }
    return std::string();
  };
  ModelParams q = p;
  q.c = 1.5;
  CHECK(key_of(q) == "c");
  q = p;
  q.r = 2.0;
  CHECK(key_of(q) == "r");
  q = p;
  q.beta = 0.0;
  CHECK(key_of(q) == "beta");
  q = p;
  q.alpha = -1.0;
  CHECK(key_of(q) == "alpha");
  q = p;
  q.sigma2 = -0.1;
  CHECK(key_of(q) == "sigma2");
  q = p;
  q.nu_const = 0.0;
  CHECK(key_of(q) == "nu_const");
  q = p;
  q.theta_phi = 0.0;
  CHECK(key_of(q) == "theta_phi");
}

TEST_CASE("F_phi") {
  ModelParams p;
  const auto z = f_phi(0.0, p);
  CHECK(z.value == 0.0);
  CHECK(z.first_derivative == 0.0);
  CHECK(z.second_derivative == doctest::Approx(1.0));
  CHECK(f_phi(0.5, p).first_derivative == doctest::Approx(0.5493061443340549).epsilon(1e-14));
  CHECK(f_phi(1.0 - 1e-12, p).first_derivative > 10.0);
  CHECK(f_phi(-1.0 + 1e-12, p).first_derivative < -10.0);
  CHECK_THROWS_AS(f_phi(1.0, p), Error);
  CHECK_THROWS_AS(f_phi(-1.2, p), Error);
}

TEST_CASE("F_psi") {
  ModelParams p;
  const auto h = f_psi(0.5, p);
  CHECK(std::abs(h.value) <= 1e-16);
  CHECK(h.first_derivative == 0.0);
  CHECK(f_psi(0.75, p).first_derivative == doctest::Approx(1.0986122886681098).epsilon(1e-14));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  for (int k = 0; k < 1000; ++k) {
    const double s = u(rng);
    CHECK(std::abs(f_psi(s, p).value - f_psi(1.0 - s, p).value) <= 1e-14);
  }
  CHECK_THROWS_AS(f_psi(0.0, p), Error);
  CHECK_THROWS_AS(f_psi(1.0, p), Error);
}

TEST_CASE("convexity and derivative consistency of the potentials") {
  ModelParams p;
  p.theta_phi = 0.7;
  p.theta_psi = 0.3;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double s = u(rng) * (1.0 - 1e-9);
    const double q = 0.5 + 0.5 * s;
    CHECK(f_phi(s, p).second_derivative >= p.theta_phi);
    CHECK(f_psi(q, p).second_derivative >= 4.0 * p.theta_psi);
  }
  std::uniform_real_distribution<double> inner_pt(-0.95, 0.95);
  for (int k = 0; k < 200; ++k) {
    const double s = inner_pt(rng);
    const double q = 0.5 + 0.5 * s;
    const auto fp = f_phi(s, p);
    const auto fq = f_psi(q, p);
    CHECK(fd([&](double x) { return f_phi(x, p).value; }, s) ==
          doctest::Approx(fp.first_derivative).epsilon(1e-7).scale(1.0));
    CHECK(fd([&](double x) { return f_phi(x, p).first_derivative; }, s) ==
          doctest::Approx(fp.second_derivative).epsilon(1e-7));
    CHECK(fd([&](double x) { return f_psi(x, p).value; }, q) ==
          doctest::Approx(fq.first_derivative).epsilon(1e-7).scale(1.0));
    CHECK(fd([&](double x) { return f_psi(x, p).first_derivative; }, q) ==
          doctest::Approx(fq.second_derivative).epsilon(1e-7));
  }
}

TEST_CASE("smooth clamp") {
  CHECK(smooth_clamp(0.3, -1.0, 1.0).value == 0.3);
  CHECK(smooth_clamp(5.0, -1.0, 1.0).value == doctest::Approx(1.05));
  CHECK(smooth_clamp(-5.0, 0.0, 1.0).value == doctest::Approx(-0.05));
  // C^2 at the seams
  for (double s : {1.0, 1.1, -1.0, -1.1}) {
    const auto a = smooth_clamp(s - 1e-9, -1.0, 1.0);
    const auto b = smooth_clamp(s + 1e-9, -1.0, 1.0);
    CHECK(std::abs(a.value - b.value) <= 1e-8);
    CHECK(std::abs(a.d1 - b.d1) <= 1e-6);
    CHECK(std::abs(a.d2 - b.d2) <= 1e-6);
  }
  for (double s : {1.03, 1.07, -1.02, -1.09}) {
    const auto e = smooth_clamp(s, -1.0, 1.0);
    CHECK(fd([](double x) { return smooth_clamp(x, -1.0, 1.0).value; }, s) == doctest::Approx(e.d1).epsilon(1e-7));
    CHECK(fd([](double x) { return smooth_clamp(x, -1.0, 1.0).d1; }, s) == doctest::Approx(e.d2).epsilon(1e-6));
  }
}

TEST_CASE("coupling G") {
  const ModelParams p = coupled();
  const auto z = coupling_g(0.0, 0.4, p);
  CHECK(z.value == doctest::Approx(-0.4));
  CHECK(z.d_phi == 0.0);
  const auto g = coupling_g(0.5, 0.5, p);
  CHECK(g.value == doctest::Approx(-0.625).epsilon(1e-15));
  CHECK(g.d_phi == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g.d_psi == doctest::Approx(-0.75).epsilon(1e-15));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(-1.3, 1.3), b(-0.3, 1.3);
  for (int k = 0; k < 500; ++k) {
    const double x = a(rng), y = b(rng);
    const auto e = coupling_g(x, y, p);
    CHECK(std::abs(fd([&](double t) { return coupling_g(t, y, p).value; }, x) - e.d_phi) <= 1e-8);
    CHECK(std::abs(fd([&](double t) { return coupling_g(x, t, p).value; }, y) - e.d_psi) <= 1e-8);
    const auto h = coupling_hessian(x, y, p);
    CHECK(std::abs(fd([&](double t) { return coupling_g(t, y, p).d_phi; }, x) - h.phi_phi) <= 1e-6);
    CHECK(std::abs(fd([&](double t) { return coupling_g(x, t, p).d_phi; }, y) - h.phi_psi) <= 1e-6);
    CHECK(std::abs(fd([&](double t) { return coupling_g(x, t, p).d_psi; }, y) - h.psi_psi) <= 1e-6);
  }
}

TEST_CASE("secant quotients") {
  const ModelParams p = coupled();
  CHECK(secant_g_phi(0.3, 0.3, 0.5, p) == coupling_g(0.3, 0.5, p).d_phi);
  CHECK(secant_g_psi(0.3, 0.2, 0.2, p) == coupling_g(0.3, 0.2, p).d_psi);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a(-1.0, 1.0), q(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = a(rng), y = a(rng), c = q(rng);
    const double gp = secant_g_phi(x, y, c, p);
    CHECK(std::abs(gp * (x - y) - (coupling_g(x, c, p).value - coupling_g(y, c, p).value)) <= 1e-13);
    CHECK(std::abs(gp - secant_g_phi(y, x, c, p)) <= 1e-13);
    const double s = q(rng), t = q(rng), cp = a(rng);
    const double gq = secant_g_psi(cp, s, t, p);
    CHECK(std::abs(gq * (s - t) - (coupling_g(cp, s, p).value - coupling_g(cp, t, p).value)) <= 1e-13);
    CHECK(gq == doctest::Approx(-p.w * (1.0 - cp * cp)).epsilon(1e-14));
  }
}

TEST_CASE("secant quotient slot derivatives") {
  const ModelParams p = coupled();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> a(-1.15, 1.15), q(-0.15, 1.15);
  for (int k = 0; k < 300; ++k) {
    const double x = a(rng), y = a(rng), c = q(rng);
    if (std::abs(x - y) < 1e-3) continue;
    const double fdphi = fd([&](double t) { return secant_g_phi(t, y, c, p); }, x);
    CHECK(std::abs(fdphi - secant_g_phi_da(x, y, c, p)) <= 1e-6);
    const double s = q(rng), t = q(rng), cp = a(rng);
    if (std::abs(s - t) < 1e-3) continue;
    const double fdpsi = fd([&](double v) { return secant_g_psi(cp, v, t, p); }, s);
    CHECK(std::abs(fdpsi - secant_g_psi_da(cp, s, t, p)) <= 1e-6);
  }
}

TEST_CASE("energies") {
  auto g = Grid2D::create(32, 32, 1.0, 1.0);
  ModelParams p;
  const ScalarField phi0(g, 0.0), psi_half(g, 0.5);
  CHECK(std::abs(free_energy(phi0, psi_half, p)) <= 1e-15);
  p.w = 1.0;
  CHECK(free_energy(phi0, psi_half, p) == doctest::Approx(-0.5).epsilon(1e-14));

  p = coupled();
  p.sigma2 = 0.7;
  const ScalarField phi = ScalarField::from_function(g, [](double x, double) { return 0.1 + 0.2 * std::cos(pi * x); });
  const ScalarField psi = ScalarField::from_function(g, [](double, double y) { return 0.5 + 0.1 * std::cos(pi * y); });
  // term-by-term oracle: exact gradient integrals of single modes plus midpoint sums
  double pot = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k)
    pot += f_phi(phi[k], p).value + f_psi(psi[k], p).value + coupling_g(phi[k], psi[k], p).value;
  pot *= g->cell_area();
  const double grad = 0.5 * (0.04 * pi * pi * 0.5) + 0.5 * p.beta * (0.01 * pi * pi * 0.5);
  const double nonlocal = 0.5 * p.sigma2 * 0.04 * 0.5 / (pi * pi);
  CHECK(free_energy(phi, psi, p) == doctest::Approx(pot + grad + nonlocal).epsilon(1e-10));

  p.w = 0.0;
  const ScalarField flipped = map(psi, [](double s) { return 1.0 - s; });
  CHECK(std::abs(free_energy(phi, psi, p) - free_energy(phi, flipped, p)) <= 1e-12);
}

TEST_CASE("total energy") {
  auto g = Grid2D::create(16, 16, 1.0, 1.0);
  ModelParams p;
  p.w = 0.5;
  State s(g);
  s.phi = ScalarField(g, 0.2);
  CHECK(total_energy(s, p) == free_energy(s.phi, s.psi, p));
  s.u.x = ScalarField(g, 1.0);
  CHECK(total_energy(s, p) == free_energy(s.phi, s.psi, p));
  p.alpha = 2.0;
  CHECK(total_energy(s, p) == doctest::Approx(free_energy(s.phi, s.psi, p) + 1.0).epsilon(1e-14));
}

TEST_CASE("coefficient fields stay in range") {
  auto g = Grid2D::create(8, 8, 1.0, 1.0);
  ModelParams p;
  p.nu_const = 2.0;
  p.eta_const = 0.5;
  const ScalarField phi(g, 0.3), psi(g, 0.6);
  CHECK(darcy_nu(phi, psi, p).min() == 2.0);
  CHECK(forchheimer_eta(phi, psi, p).max() == 0.5);
  CHECK(mobility_phi(phi, p).min() > 0.0);
  CHECK(mobility_psi(psi, p).min() > 0.0);
  CHECK(reaction_sigma1(phi, p).min() >= 0.0);
}
