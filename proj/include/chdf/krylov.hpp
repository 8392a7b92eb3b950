#pragma once

// Matrix-free Krylov solvers used by the Newton iterations.

#include <functional>
#include <vector>

namespace chdf::krylov {

using Vec = std::vector<double>;
using LinearOp = std::function<void(const Vec& in, Vec& out)>;

struct Result {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);

/// Preconditioned conjugate gradients for symmetric positive definite A.
/// x holds the initial guess on entry and the solution on exit.
Result pcg(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double rtol, int max_iter);

/// Right-preconditioned restarted GMRES for general (possibly indefinite) A.
Result gmres(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double rtol, int restart,
             int max_iter);

}  // namespace chdf::krylov
