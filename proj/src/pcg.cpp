#include "svreg/pcg.hpp"

#include <algorithm>
#include <cmath>

namespace svreg {

double forcing_term(double relative_gradient) {
  return std::min(0.5, std::sqrt(std::max(0.0, relative_gradient)));
}

PcgResult pcg_solve(const LinearOperator& matvec, const VectorField& rhs,
                    const LinearOperator& precond, double tol, int max_iters) {
  const Grid& g = rhs.grid();
  PcgResult res{VectorField(g)};

  VectorField r = rhs;
  VectorField z(g);
  auto apply_precond = [&](const VectorField& in, VectorField& out) {
    if (precond) precond(in, out);
    else out = in;
  };
  apply_precond(r, z);
  double rz = dot(r, z);
  if (rz <= 0 || !std::isfinite(rz)) {
    // rhs = 0, or a preconditioner that is not positive definite on it
    res.converged = rz == 0;
    return res;
  }
  const double rz0 = rz;
  VectorField p = z;
  VectorField hp(g);
  for (int k = 0; k < max_iters; ++k) {
    matvec(p, hp);
    const double php = dot(p, hp);
    if (!(php > 0)) {
      res.negative_curvature = true;
      break;
    }
    const double alpha = rz / php;
    axpy(static_cast<real>(alpha), p, res.solution);
    axpy(static_cast<real>(-alpha), hp, r);
    res.iterations = k + 1;
    apply_precond(r, z);
    const double rz_new = dot(r, z);
    res.relative_residual = std::sqrt(std::max(0.0, rz_new) / rz0);
    if (res.relative_residual <= tol) {
      res.converged = true;
      break;
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    // p = z + beta p
    p *= static_cast<real>(beta);
    p += z;
  }
  return res;
}

}  // namespace svreg
