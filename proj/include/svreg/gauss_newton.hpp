#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "svreg/objective.hpp"

namespace svreg {

enum class Termination {
  converged,
  zero_gradient,
  max_iterations,
  stagnation,
  line_search_failure,
};

std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double objective = 0;
  double relative_gradient = 0;
  /// PCG iterations and step length of the step that produced this iterate.
  int pcg_iterations = 0;
  double step_length = 0;
  double cfl = 0;
};

struct SolverDiagnostics {
  std::vector<IterationRecord> iterations;
  double relative_residual = 0;
  double j_min = 1;
  double j_max = 1;
  bool converged = false;
  Termination reason = Termination::max_iterations;
  int gn_iterations = 0;
  int pcg_iterations = 0;
  int hessian_matvecs = 0;
  double seconds = 0;
};

struct RegistrationResult {
  VectorField velocity;
  ScalarField deformed;
  ScalarField jacobian;
  SolverDiagnostics diagnostics;
};

/// Gauss-Newton-Krylov solve from `initial` (zero when null). The relative
/// gradient is measured against the reduced gradient at v = 0 for the
/// configured betas. A warm start always takes at least one Newton step unless
/// the gradient vanishes exactly. Progress lines go to `log` when given.
RegistrationResult gauss_newton_register(const ScalarField& m0, const ScalarField& m1,
                                         const RegistrationConfig& cfg,
                                         const VectorField* initial = nullptr,
                                         std::ostream* log = nullptr);

}  // namespace svreg
