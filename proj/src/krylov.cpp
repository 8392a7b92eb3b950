#include "chdf/krylov.hpp"

#include <cmath>

namespace chdf::krylov {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Result pcg(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double rtol, int max_iter) {
  const std::size_t n = b.size();
  Result res;
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  Vec r(n), z(n), p(n), Ap(n);
  A(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  res.relative_residual = norm(r) / bnorm;
  if (res.relative_residual <= rtol) {
    res.converged = true;
    return res;
  }
  M_inv(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;  // lost positive definiteness
    const double step = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * Ap[i];
    }
    res.iterations = it;
    res.relative_residual = norm(r) / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    M_inv(r, z);
    const double rz_next = dot(r, z);
    const double ratio = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + ratio * p[i];
  }
  return res;
}

Result gmres(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double rtol, int restart,
             int max_iter) {
  const std::size_t n = b.size();
  Result res;
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  Vec r(n), w(n), z(n);
  std::vector<Vec> V, Z;
  int total = 0;
  while (total < max_iter) {
    A(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = norm(r);
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    const int m = restart;
    V.assign(1, Vec(n));
    Z.clear();
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::vector<std::vector<double>> H(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < m && total < max_iter; ++k, ++total) {
      M_inv(V[k], z);
      Z.push_back(z);
      A(z, w);
      for (int j = 0; j <= k; ++j) {
        H[j][k] = dot(w, V[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= H[j][k] * V[j][i];
      }
      H[k + 1][k] = norm(w);
      V.emplace_back(n);
      if (H[k + 1][k] > 0.0)
        for (std::size_t i = 0; i < n; ++i) V[k + 1][i] = w[i] / H[k + 1][k];
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * H[j][k] + sn[j] * H[j + 1][k];
        H[j + 1][k] = -sn[j] * H[j][k] + cs[j] * H[j + 1][k];
        H[j][k] = t;
      }
      const double denom = std::hypot(H[k][k], H[k + 1][k]);
      cs[k] = denom > 0.0 ? H[k][k] / denom : 1.0;
      sn[k] = denom > 0.0 ? H[k + 1][k] / denom : 0.0;
      H[k][k] = denom;
      H[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.iterations = total + 1;
      res.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (res.relative_residual <= rtol) {
        ++k;
        ++total;
        break;
      }
    }
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H[i][j] * y[j];
      y[i] = s / H[i][i];
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) x[i] += y[j] * Z[j][i];
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace chdf::krylov
