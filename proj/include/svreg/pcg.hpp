#pragma once

#include <functional>

#include "svreg/field.hpp"

namespace svreg {

using LinearOperator = std::function<void(const VectorField&, VectorField&)>;

struct PcgResult {
  VectorField solution;
  int iterations = 0;
  /// sqrt(r.Pr / r0.Pr0) at exit.
  double relative_residual = 0;
  bool converged = false;
  bool negative_curvature = false;
};

/// Preconditioned conjugate gradients for matvec(x) = rhs from x = 0.
/// Stops once the preconditioned residual norm has dropped by `tol`. An empty
/// `precond` means the identity. On <p, Hp> <= 0 the current iterate is
/// returned with `negative_curvature` set.
PcgResult pcg_solve(const LinearOperator& matvec, const VectorField& rhs,
                    const LinearOperator& precond, double tol, int max_iters);

/// Superlinear forcing min(0.5, sqrt(relative gradient norm)).
double forcing_term(double relative_gradient);

}  // namespace svreg
