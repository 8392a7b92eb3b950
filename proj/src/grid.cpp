#include "chdf/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include "chdf/errors.hpp"

namespace chdf {

namespace {

int g_thread_cap = 0;
std::mutex g_plan_mutex;  // FFTW planning is not thread safe

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    if (p) fftw_destroy_plan(p);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

int basis_slot(Basis b) { return static_cast<int>(b); }

bool x_is_sine(Basis b) { return b == Basis::SinCos; }
bool y_is_sine(Basis b) { return b == Basis::CosSin; }

// Forward scale of the unnormalised DCT-II / DST-II output onto unit-mode amplitudes.
double cos_forward_scale(int k, int n) { return k == 0 ? 0.5 / n : 1.0 / n; }
double sin_forward_scale(int idx, int n) { return idx == n - 1 ? 0.5 / n : 1.0 / n; }
// Input scale for DCT-III / DST-III so that the inverse reproduces the unit-mode sum.
double cos_inverse_scale(int k) { return k == 0 ? 1.0 : 0.5; }
double sin_inverse_scale(int idx, int n) { return idx == n - 1 ? 1.0 : 0.5; }

double forward_scale(Basis b, int ix, int iy, int nx, int ny) {
  const double sx = x_is_sine(b) ? sin_forward_scale(ix, nx) : cos_forward_scale(ix, nx);
  const double sy = y_is_sine(b) ? sin_forward_scale(iy, ny) : cos_forward_scale(iy, ny);
  return sx * sy;
}

double inverse_scale(Basis b, int ix, int iy, int nx, int ny) {
  const double sx = x_is_sine(b) ? sin_inverse_scale(ix, nx) : cos_inverse_scale(ix);
  const double sy = y_is_sine(b) ? sin_inverse_scale(iy, ny) : cos_inverse_scale(iy);
  return sx * sy;
}

double neumaier_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

void set_thread_cap(int threads) { g_thread_cap = std::max(0, threads); }
int thread_cap() { return g_thread_cap; }

struct Grid2D::Plans {
  PlanHandle forward[3];
  PlanHandle inverse[3];
  std::vector<double> forward_scale[3];
  std::vector<double> inverse_scale[3];
};

GridPtr Grid2D::create(int nx, int ny, double Lx, double Ly) {
  if (!is_power_of_two(nx) || !is_power_of_two(ny) || nx < 8 || ny < 8)
    throw ValidationError("nx", "grid sizes must be powers of two >= 8");
  if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly))
    throw ValidationError("Lx", "domain lengths must be finite and > 0");
  return GridPtr(new Grid2D(nx, ny, Lx, Ly));
}

Grid2D::Grid2D(int nx, int ny, double Lx, double Ly)
    : nx_(nx), ny_(ny), Lx_(Lx), Ly_(Ly), plans_(std::make_unique<Plans>()) {
  std::lock_guard lock(g_plan_mutex);
  static bool threads_ready = false;
  int threads = g_thread_cap == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : g_thread_cap;
  threads = std::max(1, threads);
  if (threads > 1 && !threads_ready) threads_ready = fftw_init_threads() != 0;
  if (threads_ready) fftw_plan_with_nthreads(threads);

  // in-place plans: callers transform a private copy
  std::vector<double> a(size());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const Basis bases[3] = {Basis::CosCos, Basis::SinCos, Basis::CosSin};
  for (Basis basis : bases) {
    const fftw_r2r_kind fx = x_is_sine(basis) ? FFTW_RODFT10 : FFTW_REDFT10;
    const fftw_r2r_kind fy = y_is_sine(basis) ? FFTW_RODFT10 : FFTW_REDFT10;
    const fftw_r2r_kind ix = x_is_sine(basis) ? FFTW_RODFT01 : FFTW_REDFT01;
    const fftw_r2r_kind iy = y_is_sine(basis) ? FFTW_RODFT01 : FFTW_REDFT01;
    const int slot = basis_slot(basis);
    plans_->forward[slot].reset(fftw_plan_r2r_2d(ny_, nx_, a.data(), a.data(), fy, fx, flags));
    plans_->inverse[slot].reset(fftw_plan_r2r_2d(ny_, nx_, a.data(), a.data(), iy, ix, flags));
    plans_->forward_scale[slot].resize(size());
    plans_->inverse_scale[slot].resize(size());
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nx_; ++ix) {
        plans_->forward_scale[slot][index(ix, iy)] = chdf::forward_scale(basis, ix, iy, nx_, ny_);
        plans_->inverse_scale[slot][index(ix, iy)] = chdf::inverse_scale(basis, ix, iy, nx_, ny_);
      }
  }
}

Grid2D::~Grid2D() {
  std::lock_guard lock(g_plan_mutex);
  plans_.reset();
}

double Grid2D::kx(int k) const { return k * std::numbers::pi / Lx_; }
double Grid2D::ky(int l) const { return l * std::numbers::pi / Ly_; }

void Grid2D::forward_in_place(Basis basis, double* data) const {
  fftw_execute_r2r(plans_->forward[basis_slot(basis)].get(), data, data);
}

void Grid2D::inverse_in_place(Basis basis, double* data) const {
  fftw_execute_r2r(plans_->inverse[basis_slot(basis)].get(), data, data);
}

const std::vector<double>& Grid2D::forward_scales(Basis basis) const { return plans_->forward_scale[basis_slot(basis)]; }
const std::vector<double>& Grid2D::inverse_scales(Basis basis) const { return plans_->inverse_scale[basis_slot(basis)]; }

// ---------------------------------------------------------------- fields

ScalarField::ScalarField(GridPtr grid, double value) : grid_(std::move(grid)), values_(grid_->size(), value) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw Error(ErrorKind::ValidationError, "field size does not match grid");
}

ScalarField ScalarField::from_function(GridPtr grid, const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid->ny(); ++j)
    for (int i = 0; i < grid->nx(); ++i) out(i, j) = f(grid->x_center(i), grid->y_center(j));
  return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

double VectorField::max_abs() const { return std::max(x.max_abs(), y.max_abs()); }

// ------------------------------------------------------------ transforms

SpectralCoeffs transform(const ScalarField& f, Basis basis) {
  const Grid2D& g = f.grid();
  SpectralCoeffs out{basis, g.nx(), g.ny(), f.data()};
  g.forward_in_place(basis, out.c.data());
  const std::vector<double>& scale = g.forward_scales(basis);
  for (std::size_t n = 0; n < out.c.size(); ++n) out.c[n] *= scale[n];
  return out;
}

ScalarField inverse_transform(const SpectralCoeffs& coeffs, const GridPtr& grid) {
  const std::vector<double>& scale = grid->inverse_scales(coeffs.basis);
  std::vector<double> values(coeffs.c.size());
  for (std::size_t n = 0; n < values.size(); ++n) values[n] = coeffs.c[n] * scale[n];
  grid->inverse_in_place(coeffs.basis, values.data());
  return ScalarField(grid, std::move(values));
}

// ----------------------------------------------------------- quadrature

double integrate(const ScalarField& f) { return f.grid().cell_area() * neumaier_sum(f.values()); }

double mean(const ScalarField& f) { return neumaier_sum(f.values()) / static_cast<double>(f.size()); }

double inner(const ScalarField& f, const ScalarField& g) {
  std::vector<double> prod(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) prod[n] = f[n] * g[n];
  return f.grid().cell_area() * neumaier_sum(prod);
}

double inner(const VectorField& u, const VectorField& v) { return inner(u.x, v.x) + inner(u.y, v.y); }
double norm_l2(const ScalarField& f) { return std::sqrt(inner(f, f)); }
double norm_l2(const VectorField& u) { return std::sqrt(inner(u, u)); }

ScalarField zero_mean(const ScalarField& f) {
  ScalarField out = f;
  out += -mean(f);
  return out;
}

// ------------------------------------------------------------ operators

VectorField gradient(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const SpectralCoeffs a = transform(f, Basis::CosCos);
  SpectralCoeffs bx{Basis::SinCos, g.nx(), g.ny(), std::vector<double>(g.size(), 0.0)};
  SpectralCoeffs by{Basis::CosSin, g.nx(), g.ny(), std::vector<double>(g.size(), 0.0)};
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 1; k < g.nx(); ++k) bx.at(k - 1, l) = -g.kx(k) * a.at(k, l);
  for (int l = 1; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k) by.at(k, l - 1) = -g.ky(l) * a.at(k, l);
  return VectorField(inverse_transform(bx, f.grid_ptr()), inverse_transform(by, f.grid_ptr()));
}

namespace {

// Divergence coefficients in cos x cos; the highest sine mode has no cosine image.
SpectralCoeffs divergence_coeffs(const VectorField& v) {
  const Grid2D& g = v.grid();
  const SpectralCoeffs bx = transform(v.x, Basis::SinCos);
  const SpectralCoeffs by = transform(v.y, Basis::CosSin);
  SpectralCoeffs d{Basis::CosCos, g.nx(), g.ny(), std::vector<double>(g.size(), 0.0)};
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 1; k < g.nx(); ++k) d.at(k, l) += g.kx(k) * bx.at(k - 1, l);
  for (int l = 1; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k) d.at(k, l) += g.ky(l) * by.at(k, l - 1);
  return d;
}

void check_mean_zero(const ScalarField& f) {
  const double m = mean(f);
  if (std::abs(m) > 1e-10 * (1.0 + f.max_abs()))
    throw Error(ErrorKind::MeanNotZero, "operand mean " + std::to_string(m) + " must vanish");
}

double mode_weight(const Grid2D& g, int k, int l) {
  return g.area() * (k > 0 ? 0.5 : 1.0) * (l > 0 ? 0.5 : 1.0);
}

}  // namespace

ScalarField divergence(const VectorField& v) { return inverse_transform(divergence_coeffs(v), v.grid_ptr()); }

ScalarField neumann_laplacian(const ScalarField& f) {
  const Grid2D& g = f.grid();
  SpectralCoeffs a = transform(f);
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k) a.at(k, l) *= g.eigenvalue(k, l);
  a.at(0, 0) = 0.0;
  return inverse_transform(a, f.grid_ptr());
}

ScalarField inverse_neumann_laplacian(const ScalarField& f) {
  check_mean_zero(f);
  const Grid2D& g = f.grid();
  SpectralCoeffs a = transform(f);
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k)
      a.at(k, l) = (k == 0 && l == 0) ? 0.0 : a.at(k, l) / g.eigenvalue(k, l);
  return inverse_transform(a, f.grid_ptr());
}

double hminus1_norm_sq(const ScalarField& f) {
  check_mean_zero(f);
  const Grid2D& g = f.grid();
  const SpectralCoeffs a = transform(f);
  double sum = 0.0;
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k) {
      if (k == 0 && l == 0) continue;
      sum += a.at(k, l) * a.at(k, l) * mode_weight(g, k, l) / g.eigenvalue(k, l);
    }
  return sum;
}

Projection helmholtz_project(const VectorField& v) {
  const Grid2D& g = v.grid();
  SpectralCoeffs p = divergence_coeffs(v);
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k)
      p.at(k, l) = (k == 0 && l == 0) ? 0.0 : -p.at(k, l) / g.eigenvalue(k, l);
  ScalarField pressure = inverse_transform(p, v.grid_ptr());
  VectorField grad_p = gradient(pressure);
  VectorField u = v;
  u.x -= grad_p.x;
  u.y -= grad_p.y;
  return {std::move(u), std::move(pressure)};
}

ScalarField cosine_multiply(const ScalarField& f, const std::vector<double>& symbol) {
  SpectralCoeffs a = transform(f);
  for (std::size_t n = 0; n < a.c.size(); ++n) a.c[n] *= symbol[n];
  return inverse_transform(a, f.grid_ptr());
}

ScalarField two_thirds_filter(const ScalarField& f) {
  const Grid2D& g = f.grid();
  SpectralCoeffs a = transform(f);
  const int kmax = (2 * g.nx()) / 3;
  const int lmax = (2 * g.ny()) / 3;
  for (int l = 0; l < g.ny(); ++l)
    for (int k = 0; k < g.nx(); ++k)
      if (k > kmax || l > lmax) a.at(k, l) = 0.0;
  return inverse_transform(a, f.grid_ptr());
}

}  // namespace chdf
