#include "svreg/gauss_newton.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "svreg/pcg.hpp"

namespace svreg {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::zero_gradient: return "zero-gradient";
    case Termination::max_iterations: return "max-iterations";
    case Termination::stagnation: return "stagnation";
    case Termination::line_search_failure: return "line-search-failure";
  }
  return "?";
}

RegistrationResult gauss_newton_register(const ScalarField& m0, const ScalarField& m1,
                                         const RegistrationConfig& cfg,
                                         const VectorField* initial, std::ostream* log) {
  const auto t_start = std::chrono::steady_clock::now();
  ObjectiveState state(m0, m1, cfg);
  const double g_ref = norm2(state.reduced_gradient());
  if (initial) state.set_velocity(*initial);

  SolverDiagnostics diag;
  std::vector<double> history;
  int last_pcg = 0;
  double last_step = 0;

  for (int k = 0;; ++k) {
    const double g_norm = norm2(state.reduced_gradient());
    const double rel = g_ref > 0 ? g_norm / g_ref : 0.0;
    diag.iterations.push_back({k, state.objective(), rel, last_pcg, last_step, state.cfl()});
    history.push_back(state.objective());
    diag.gn_iterations = k;
    if (log) {
      *log << "  gn " << k << "  J " << state.objective() << "  |g|rel " << rel << "  pcg "
           << last_pcg << "  step " << last_step << '\n';
    }

    if (g_ref == 0 || g_norm == 0) {
      diag.reason = Termination::zero_gradient;
      diag.converged = true;
      break;
    }
    // A warm start from a neighbouring beta often already meets the tolerance
    // (it is relative to v = 0); take one step so the result belongs to these betas.
    if (rel <= cfg.gtol && !(initial && k == 0)) {
      diag.reason = Termination::converged;
      diag.converged = true;
      break;
    }
    if (history.size() >= 3) {
      const double j2 = history[history.size() - 3];
      const double drop = (j2 - history.back()) / std::max(std::abs(j2), 1e-300);
      if (drop < 1e-6) {
        diag.reason = Termination::stagnation;
        break;
      }
    }
    if (k >= cfg.max_gn_iters) {
      diag.reason = Termination::max_iterations;
      break;
    }

    const VectorField g = state.gradient();
    VectorField rhs = real(-1) * g;
    PcgResult pcg = pcg_solve(
        [&](const VectorField& x, VectorField& y) {
          ++diag.hessian_matvecs;
          state.gn_hessian_matvec(x, y);
        },
        rhs, [&](const VectorField& x, VectorField& y) { state.precondition(x, y); },
        forcing_term(rel), cfg.pcg_max_iters);
    diag.pcg_iterations += pcg.iterations;
    last_pcg = pcg.iterations;

    VectorField dir = std::move(pcg.solution);
    double slope = l2_inner(g, dir);
    if (!(slope < 0)) {
      // Fall back to the preconditioned steepest-descent direction.
      state.precondition(g, dir);
      dir *= real(-1);
      slope = l2_inner(g, dir);
    }

    const VectorField v_old = state.velocity();
    const double j_old = state.objective();
    double alpha = 1;
    bool accepted = false;
    for (int trial = 0; trial < cfg.armijo_max_trials; ++trial) {
      VectorField v_new = v_old;
      axpy(static_cast<real>(alpha), dir, v_new);
      try {
        state.set_velocity(v_new);
        if (state.objective() <= j_old + cfg.armijo_c1 * alpha * slope &&
            state.objective() < j_old) {
          accepted = true;
          break;
        }
      } catch (const TransportError&) {
      } catch (const ObjectiveError&) {
      }
      alpha *= cfg.armijo_backtrack;
    }
    if (!accepted) {
      state.set_velocity(v_old);
      diag.reason = Termination::line_search_failure;
      break;
    }
    last_step = alpha;
    const double step_norm = alpha * norm2(dir);
    if (step_norm < 1e-10 * std::max(1.0, norm2(v_old))) {
      const double g_new = norm2(state.reduced_gradient());
      diag.gn_iterations = k + 1;
      diag.iterations.push_back({k + 1, state.objective(), g_new / g_ref, last_pcg, last_step,
                                 state.cfl()});
      diag.reason = Termination::stagnation;
      break;
    }
  }

  RegistrationResult res{state.velocity(), state.deformed_template(), state.jacobian(), diag};
  res.diagnostics.relative_residual = relative_residual(m0, m1, res.deformed);
  res.diagnostics.j_min = min_value(res.jacobian);
  res.diagnostics.j_max = max_value(res.jacobian);
  res.diagnostics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (log) {
    *log << "  done: " << to_string(res.diagnostics.reason) << "  r "
         << res.diagnostics.relative_residual << "  J [" << res.diagnostics.j_min << ", "
         << res.diagnostics.j_max << "]\n";
  }
  return res;
}

}  // namespace svreg
