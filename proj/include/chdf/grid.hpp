#pragma once

// Uniform cell-centred rectangle with exact spectral operators.
//
// Scalars live in the cos x cos basis (homogeneous Neumann data). The two
// velocity components live in sin x cos and cos x sin, so u.n = 0 on the
// boundary by construction. All transforms are FFTW r2r (DCT-II/DST-II and
// their inverses); quadratures are midpoint sums.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace chdf {

enum class Basis { CosCos, SinCos, CosSin };

class Grid2D;
using GridPtr = std::shared_ptr<const Grid2D>;

/// Caps the number of threads used inside transforms (0 = hardware count).
/// Must be called before the first grid is created to take effect.
void set_thread_cap(int threads);
int thread_cap();

class Grid2D {
 public:
  /// nx, ny must be powers of two >= 8; Lx, Ly > 0.
  static GridPtr create(int nx, int ny, double Lx, double Ly);

  ~Grid2D();
  Grid2D(const Grid2D&) = delete;
  Grid2D& operator=(const Grid2D&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  double hx() const { return Lx_ / nx_; }
  double hy() const { return Ly_ / ny_; }
  double area() const { return Lx_ * Ly_; }
  double cell_area() const { return hx() * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  double x_center(int i) const { return (i + 0.5) * hx(); }
  double y_center(int j) const { return (j + 0.5) * hy(); }

  /// Wavenumbers kπ/L for the cosine mode k (k = 0..n-1).
  double kx(int k) const;
  double ky(int l) const;
  /// Eigenvalue of A_N on cos(kπx/Lx)cos(lπy/Ly).
  double eigenvalue(int k, int l) const { return kx(k) * kx(k) + ky(l) * ky(l); }

  // Unnormalised in-place r2r transforms and the factors mapping them onto
  // the SpectralCoeffs normalisation.
  void forward_in_place(Basis basis, double* data) const;
  void inverse_in_place(Basis basis, double* data) const;
  const std::vector<double>& forward_scales(Basis basis) const;
  const std::vector<double>& inverse_scales(Basis basis) const;

 private:
  Grid2D(int nx, int ny, double Lx, double Ly);

  struct Plans;
  int nx_, ny_;
  double Lx_, Ly_;
  std::unique_ptr<Plans> plans_;
};

class ScalarField {
 public:
  explicit ScalarField(GridPtr grid, double value = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  static ScalarField from_function(GridPtr grid, const std::function<double(double, double)>& f);

  const Grid2D& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }
  double& operator()(int i, int j) { return values_[grid_->index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_->index(i, j)]; }

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double s);

  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Velocity-like field collocated at cell centres.
struct VectorField {
  explicit VectorField(GridPtr grid) : x(grid), y(std::move(grid)) {}
  VectorField(ScalarField x_component, ScalarField y_component)
      : x(std::move(x_component)), y(std::move(y_component)) {}

  const Grid2D& grid() const { return x.grid(); }
  const GridPtr& grid_ptr() const { return x.grid_ptr(); }
  double max_abs() const;

  ScalarField x;
  ScalarField y;
};

/// Normalised expansion coefficients: the field equals
/// sum_{kx,ky} c(kx,ky) * bx_kx(x) * by_ky(y) with unit-amplitude modes.
/// Cosine axes store wavenumber k at index k (0..n-1); sine axes store
/// wavenumber m at index m-1 (1..n).
struct SpectralCoeffs {
  Basis basis = Basis::CosCos;
  int nx = 0;
  int ny = 0;
  std::vector<double> c;

  double& at(int ix, int iy) { return c[static_cast<std::size_t>(iy) * nx + ix]; }
  double at(int ix, int iy) const { return c[static_cast<std::size_t>(iy) * nx + ix]; }
};

SpectralCoeffs transform(const ScalarField& f, Basis basis = Basis::CosCos);
ScalarField inverse_transform(const SpectralCoeffs& coeffs, const GridPtr& grid);

double integrate(const ScalarField& f);
double mean(const ScalarField& f);
double inner(const ScalarField& f, const ScalarField& g);
double inner(const VectorField& u, const VectorField& v);
double norm_l2(const ScalarField& f);
double norm_l2(const VectorField& u);

/// f - mean(f).
ScalarField zero_mean(const ScalarField& f);

VectorField gradient(const ScalarField& f);
/// Expects v.x in sin x cos and v.y in cos x sin; the result is cos x cos.
ScalarField divergence(const VectorField& v);
/// Returns A_N f = -Δf.
ScalarField neumann_laplacian(const ScalarField& f);
/// Returns the zero-mean g with A_N g = f; throws MeanNotZero unless
/// |mean(f)| <= 1e-10 (1 + max|f|).
ScalarField inverse_neumann_laplacian(const ScalarField& f);
/// ||∇𝒩f||^2 = <f, 𝒩f>; same precondition as inverse_neumann_laplacian.
double hminus1_norm_sq(const ScalarField& f);

struct Projection {
  VectorField u;
  ScalarField p;
};
/// Helmholtz decomposition v = u + ∇p, div u = 0, u.n = 0, mean(p) = 0.
Projection helmholtz_project(const VectorField& v);

/// Multiplies each cos x cos coefficient c(k,l) by symbol[l*nx + k].
ScalarField cosine_multiply(const ScalarField& f, const std::vector<double>& symbol);

/// Zeroes cosine modes above two thirds of the resolved range.
ScalarField two_thirds_filter(const ScalarField& f);

/// Applies x -> op(x) pointwise.
template <class Op>
ScalarField map(const ScalarField& f, Op op) {
  ScalarField out(f.grid_ptr());
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = op(f[n]);
  return out;
}

}  // namespace chdf
