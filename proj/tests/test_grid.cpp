#include <cmath>
#include <numbers>
#include <random>

#include "chdf/errors.hpp"
#include "chdf/grid.hpp"
#include "doctest.h"

using namespace chdf;
using std::numbers::pi;

namespace {

// Smooth band-limited cosine field with a few seeded modes.
ScalarField random_cosine_field(const GridPtr& g, unsigned seed, int kmax = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralCoeffs a{Basis::CosCos, g->nx(), g->ny(), std::vector<double>(g->size(), 0.0)};
  for (int l = 0; l <= kmax; ++l)
    for (int k = 0; k <= kmax; ++k) a.at(k, l) = u(rng) / (1.0 + k * k + l * l);
  return inverse_transform(a, g);
}

VectorField random_vector_field(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralCoeffs ax{Basis::SinCos, g->nx(), g->ny(), std::vector<double>(g->size(), 0.0)};
  SpectralCoeffs ay{Basis::CosSin, g->nx(), g->ny(), std::vector<double>(g->size(), 0.0)};
  for (int l = 0; l < 6; ++l)
    for (int k = 0; k < 6; ++k) {
      ax.at(k, l) = u(rng) / (1.0 + k * k + l * l);
      ay.at(k, l) = u(rng) / (1.0 + k * k + l * l);
    }
  return VectorField(inverse_transform(ax, g), inverse_transform(ay, g));
}

double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid2D::create(12, 16, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(Grid2D::create(4, 4, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(Grid2D::create(16, 16, 0.0, 1.0), ValidationError);
  auto g = Grid2D::create(16, 32, 2.0, 1.0);
  CHECK(g->hx() == doctest::Approx(0.125));
  CHECK(g->x_center(0) == doctest::Approx(0.0625));
}

TEST_CASE("round trip in every basis") {
  auto g = Grid2D::create(32, 16, 1.3, 0.7);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  ScalarField f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = n(rng);
  for (Basis b : {Basis::CosCos, Basis::SinCos, Basis::CosSin}) {
    const ScalarField back = inverse_transform(transform(f, b), g);
    CHECK(max_diff(back, f) <= 1e-12 * f.max_abs());
  }
}

TEST_CASE("mean") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  CHECK(mean(ScalarField(g, 0.3)) == doctest::Approx(0.3).epsilon(1e-15));
  const auto c = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
  CHECK(std::abs(mean(c)) <= 1e-13);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(g);
  long double acc = 0.0L;
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = u(rng);
    acc += f[k];
  }
  CHECK(std::abs(mean(f) - static_cast<double>(acc / f.size())) <= 1e-13);
}

TEST_CASE("gradient") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  const VectorField z = gradient(ScalarField(g, 2.5));
  CHECK(z.max_abs() <= 1e-13);
  const auto c = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
  const VectorField d = gradient(c);
  const auto ex = ScalarField::from_function(g, [](double x, double) { return -pi * std::sin(pi * x); });
  CHECK(max_diff(d.x, ex) <= 1e-12);
  CHECK(d.y.max_abs() <= 1e-12);
}

TEST_CASE("gradient against refined finite differences") {
  // f = cos(πx)cos(2πy) + 0.3 cos(3πx); FD on a 4x refined grid.
  auto f = [](double x, double y) { return std::cos(pi * x) * std::cos(2 * pi * y) + 0.3 * std::cos(3 * pi * x); };
  auto g = Grid2D::create(16, 16, 1.0, 1.0);
  const VectorField d = gradient(ScalarField::from_function(g, f));
  const double hf = g->hx() / 4.0;
  double worst = 0.0;
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) {
      const double x = g->x_center(i), y = g->y_center(j);
      const double fd = (f(x + hf, y) - f(x - hf, y)) / (2 * hf);
      worst = std::max(worst, std::abs(fd - d.x(i, j)));
    }
  // centred difference error <= max|f_xxx| hf^2 / 6
  const double fxxx = pi * pi * pi * (1.0 + 0.3 * 27.0);
  CHECK(worst <= 1.01 * fxxx * hf * hf / 6.0);
}

TEST_CASE("divergence") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  VectorField v(g);
  v.x = ScalarField::from_function(g, [](double x, double) { return std::sin(pi * x); });
  const auto ex = ScalarField::from_function(g, [](double x, double) { return pi * std::cos(pi * x); });
  CHECK(max_diff(divergence(v), ex) <= 1e-12);
  CHECK(divergence(VectorField(g)).max_abs() == 0.0);

  // curl of the streamfunction s = sin(πx)sin(2πy)
  VectorField w(g);
  w.x = ScalarField::from_function(g, [](double x, double y) { return 2 * pi * std::sin(pi * x) * std::cos(2 * pi * y); });
  w.y = ScalarField::from_function(g, [](double x, double y) { return -pi * std::cos(pi * x) * std::sin(2 * pi * y); });
  CHECK(divergence(w).max_abs() <= 1e-11);
}

TEST_CASE("neumann laplacian and its inverse") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  CHECK(neumann_laplacian(ScalarField(g, 4.0)).max_abs() <= 1e-12);
  const auto c = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
  CHECK(max_diff(neumann_laplacian(c), pi * pi * c) <= 1e-11);
  CHECK(max_diff(inverse_neumann_laplacian(c), (1.0 / (pi * pi)) * c) <= 1e-13);
  CHECK(inverse_neumann_laplacian(ScalarField(g)).max_abs() == 0.0);

  const ScalarField f = random_cosine_field(g, 11);
  const ScalarField f0 = zero_mean(f);
  CHECK(max_diff(neumann_laplacian(inverse_neumann_laplacian(f0)), f0) <= 1e-11);
  const ScalarField q = zero_mean(random_cosine_field(g, 12));
  CHECK(max_diff(inverse_neumann_laplacian(neumann_laplacian(q)), q) <= 1e-11);
  CHECK(std::abs(mean(inverse_neumann_laplacian(f0))) <= 1e-15);

  CHECK_THROWS_AS(inverse_neumann_laplacian(ScalarField(g, 1.0)), Error);
  try {
    inverse_neumann_laplacian(ScalarField(g, 1.0));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeanNotZero);
  }
}

TEST_CASE("H^-1 norm") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  CHECK(hminus1_norm_sq(ScalarField(g)) == 0.0);
  const auto c = ScalarField::from_function(g, [](double x, double) { return std::cos(pi * x); });
  CHECK(hminus1_norm_sq(c) == doctest::Approx(0.5 / (pi * pi)).epsilon(1e-12));
  CHECK(std::abs(hminus1_norm_sq(c) - inner(c, inverse_neumann_laplacian(c))) <= 1e-11);
  const ScalarField f = zero_mean(random_cosine_field(g, 5));
  CHECK(std::abs(hminus1_norm_sq(f) - inner(f, inverse_neumann_laplacian(f))) <= 1e-11);
  CHECK(hminus1_norm_sq(2.0 * f) == doctest::Approx(4.0 * hminus1_norm_sq(f)).epsilon(1e-12));
  const VectorField gn = gradient(inverse_neumann_laplacian(f));
  CHECK(std::abs(hminus1_norm_sq(f) - inner(gn, gn)) <= 1e-11);
}

TEST_CASE("helmholtz projection") {
  auto g = Grid2D::create(64, 64, 1.0, 1.0);
  const ScalarField q = random_cosine_field(g, 21);
  const Projection pg = helmholtz_project(gradient(q));
  CHECK(pg.u.max_abs() <= 1e-10);
  CHECK(max_diff(pg.p, zero_mean(q)) <= 1e-10);

  VectorField w(g);
  w.x = ScalarField::from_function(g, [](double x, double y) { return 2 * pi * std::sin(pi * x) * std::cos(2 * pi * y); });
  w.y = ScalarField::from_function(g, [](double x, double y) { return -pi * std::cos(pi * x) * std::sin(2 * pi * y); });
  const Projection pw = helmholtz_project(w);
  CHECK(std::max(max_diff(pw.u.x, w.x), max_diff(pw.u.y, w.y)) <= 1e-11);
  CHECK(pw.p.max_abs() <= 1e-11);

  const VectorField v = random_vector_field(g, 4);
  const Projection once = helmholtz_project(v);
  const Projection twice = helmholtz_project(once.u);
  CHECK(std::max(max_diff(once.u.x, twice.u.x), max_diff(once.u.y, twice.u.y)) <= 1e-11);
  CHECK(divergence(once.u).max_abs() <= 1e-10 * norm_l2(v));
  CHECK(std::abs(mean(once.p)) <= 1e-15);
}

TEST_CASE("gradient and divergence are negative adjoints") {
  auto g = Grid2D::create(32, 32, 1.5, 1.0);
  const ScalarField f = random_cosine_field(g, 8, 20);
  const VectorField v = random_vector_field(g, 9);
  CHECK(std::abs(inner(gradient(f), v) + inner(f, divergence(v))) <= 1e-10);
}

TEST_CASE("two-thirds filter keeps low modes") {
  auto g = Grid2D::create(32, 32, 1.0, 1.0);
  const ScalarField f = random_cosine_field(g, 2, 6);
  CHECK(max_diff(two_thirds_filter(f), f) <= 1e-13);
  const auto hi = ScalarField::from_function(g, [](double x, double) { return std::cos(30 * pi * x); });
  CHECK(two_thirds_filter(hi).max_abs() <= 1e-12);
}
