#include "svreg/transport.hpp"

#include "svreg/diffops.hpp"

namespace svreg {

void TransportConfig::validate() const {
  if (n_t < 1) throw ValidationError("n_t must be at least 1");
}

InterpOrder parse_interp_order(const std::string& s) {
  if (s == "linear") return InterpOrder::linear;
  if (s == "cubic") return InterpOrder::cubic;
  throw ValidationError("unknown interpolation order '" + s + "' (expected linear or cubic)");
}

std::string to_string(InterpOrder order) {
  return order == InterpOrder::linear ? "linear" : "cubic";
}

TransportPlan::TransportPlan(const Grid& grid, const TransportConfig& config)
    : cfg(config),
      departure(grid),
      arrival(grid),
      divergence(grid),
      divergence_at_departure(grid),
      divergence_at_arrival(grid),
      predictor(grid) {}

TransportPlan make_transport_plan(const VectorField& v_in, const TransportConfig& cfg,
                                  bool with_divergence, bool with_linearization) {
  cfg.validate();
  if (!all_finite(v_in)) throw TransportError("velocity field has non-finite entries");

  const real s = cfg.direction == Direction::backward ? real(-1) : real(1);
  const VectorField* v = &v_in;
  VectorField flipped(v_in.grid());
  if (s < 0) {
    flipped = real(-1) * v_in;
    v = &flipped;
  }

  TransportPlan plan(v_in.grid(), cfg);
  const real dt = cfg.dt();
  plan.departure = trace_characteristics(*v, dt, cfg.interp, 1,
                                         with_linearization ? &plan.predictor : nullptr);
  plan.cfl = cfl_number(*v, dt);
  if (with_linearization) {
    plan.velocity = *v;
    const Grid& g = v->grid();
    plan.velocity_gradient_at_predictor.assign(9, ScalarField(g));
    ScalarField value(g);
    VectorField grad(g);
    for (int a = 0; a < 3; ++a) {
      interpolate_with_gradient((*v)[a], plan.predictor, cfg.interp, value, grad);
      for (int c = 0; c < 3; ++c) plan.velocity_gradient_at_predictor[3 * a + c] = grad[c];
    }
    plan.has_linearization = true;
  }
  if (with_divergence) {
    plan.arrival = trace_characteristics(*v, dt, cfg.interp, -1);
    fd8_divergence(*v, plan.divergence);
    interpolate(plan.divergence, plan.departure, cfg.interp, plan.divergence_at_departure);
    interpolate(plan.divergence, plan.arrival, cfg.interp, plan.divergence_at_arrival);
    plan.has_divergence = true;
  }
  return plan;
}

namespace {

void require_divergence(const TransportPlan& plan, const char* what) {
  if (!plan.has_divergence) {
    throw ValidationError(std::string(what) + ": transport plan lacks divergence data");
  }
}

// q <- q(X) * [1 + dt/2 (d_X + d_x) + dt^2/2 d_X d_x]: one Heun step of
// dq/dt = q d along a characteristic ending at x and starting at X.
void heun_multiply(const ScalarField& q, const Characteristics& points, InterpOrder order,
                   const ScalarField& d_x, const ScalarField& d_X, real dt, ScalarField& out) {
  interpolate(q, points, order, out);
  const real h = dt / 2;
  const real h2 = dt * dt / 2;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const real a = d_X[i], b = d_x[i];
    out[i] *= 1 + h * (a + b) + h2 * a * b;
  }
}

void check_finite(const ScalarField& f, const char* what) {
  if (!all_finite(f)) throw TransportError(std::string(what) + " produced non-finite values");
}

}  // namespace

std::vector<ScalarField> solve_state_series(const ScalarField& m0, const TransportPlan& plan) {
  require_same_grid(m0.grid(), plan.departure.grid(), "solve_state");
  std::vector<ScalarField> series;
  series.reserve(plan.cfg.n_t + 1);
  series.push_back(m0);
  for (int j = 0; j < plan.cfg.n_t; ++j) {
    series.push_back(interpolate(series.back(), plan.departure, plan.cfg.interp));
  }
  check_finite(series.back(), "state solve");
  return series;
}

ScalarField solve_state(const ScalarField& m0, const TransportPlan& plan) {
  require_same_grid(m0.grid(), plan.departure.grid(), "solve_state");
  ScalarField cur = m0;
  ScalarField next(m0.grid());
  for (int j = 0; j < plan.cfg.n_t; ++j) {
    interpolate(cur, plan.departure, plan.cfg.interp, next);
    std::swap(cur, next);
  }
  check_finite(cur, "state solve");
  return cur;
}

ScalarField solve_state(const ScalarField& m0, const VectorField& v, const TransportConfig& cfg) {
  require_same_grid(m0.grid(), v.grid(), "solve_state");
  return solve_state(m0, make_transport_plan(v, cfg, false));
}

std::vector<ScalarField> solve_adjoint(const ScalarField& final_lambda, const TransportPlan& plan) {
  require_divergence(plan, "solve_adjoint");
  require_same_grid(final_lambda.grid(), plan.departure.grid(), "solve_adjoint");
  const int nt = plan.cfg.n_t;
  std::vector<ScalarField> series(nt + 1, ScalarField(final_lambda.grid()));
  series[nt] = final_lambda;
  for (int j = nt - 1; j >= 0; --j) {
    heun_multiply(series[j + 1], plan.arrival, plan.cfg.interp, plan.divergence,
                  plan.divergence_at_arrival, plan.cfg.dt(), series[j]);
  }
  check_finite(series[0], "adjoint solve");
  return series;
}

std::vector<ScalarField> solve_adjoint(const ScalarField& final_lambda, const VectorField& v,
                                       const TransportConfig& cfg) {
  require_same_grid(final_lambda.grid(), v.grid(), "solve_adjoint");
  return solve_adjoint(final_lambda, make_transport_plan(v, cfg, true));
}

void accumulate_adjoint_source(const ScalarField& final_lambda, const TransportPlan& plan,
                               const std::vector<VectorField>& grad_m, VectorField& out) {
  require_divergence(plan, "accumulate_adjoint_source");
  const int nt = plan.cfg.n_t;
  if (static_cast<int>(grad_m.size()) != nt + 1) {
    throw ValidationError("accumulate_adjoint_source: need n_t + 1 gradient snapshots");
  }
  const real dt = plan.cfg.dt();
  out.fill(0);
  ScalarField lambda = final_lambda;
  ScalarField next(final_lambda.grid());
  for (int j = nt;; --j) {
    const real w = (j == 0 || j == nt) ? dt / 2 : dt;
    for (int d = 0; d < 3; ++d) {
      real* o = out[d].data();
      const real* gm = grad_m[j][d].data();
      for (std::size_t i = 0; i < lambda.size(); ++i) o[i] += w * lambda[i] * gm[i];
    }
    if (j == 0) break;
    heun_multiply(lambda, plan.arrival, plan.cfg.interp, plan.divergence,
                  plan.divergence_at_arrival, dt, next);
    std::swap(lambda, next);
  }
  if (!all_finite(out)) throw TransportError("adjoint solve produced non-finite values");
}

ScalarField solve_incremental_state(const std::vector<VectorField>& grad_m,
                                    const VectorField& v_tilde, const TransportPlan& plan) {
  const int nt = plan.cfg.n_t;
  if (static_cast<int>(grad_m.size()) != nt + 1) {
    throw ValidationError("solve_incremental_state: need n_t + 1 gradient snapshots");
  }
  require_same_grid(v_tilde.grid(), plan.departure.grid(), "solve_incremental_state");
  const Grid& g = v_tilde.grid();
  const real h = plan.cfg.dt() / 2;

  // s^j = -v~ . grad m^j
  auto source = [&](int j, ScalarField& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = -(v_tilde[0][i] * grad_m[j][0][i] + v_tilde[1][i] * grad_m[j][1][i] +
               v_tilde[2][i] * grad_m[j][2][i]);
    }
  };

  ScalarField mt(g), work(g), src(g);
  // m~^{j+1} = I[m~^j + dt/2 s^j](X) + dt/2 s^{j+1}, m~^0 = 0
  for (int j = 0; j < nt; ++j) {
    source(j, src);
    work = mt;
    axpy(h, src, work);
    interpolate(work, plan.departure, plan.cfg.interp, mt);
    source(j + 1, src);
    axpy(h, src, mt);
  }
  check_finite(mt, "incremental state solve");
  return mt;
}

ScalarField solve_incremental_state(const std::vector<ScalarField>& m_series, const VectorField& v,
                                    const VectorField& v_tilde, const TransportConfig& cfg) {
  const TransportPlan plan = make_transport_plan(v, cfg, false);
  if (static_cast<int>(m_series.size()) != cfg.n_t + 1) {
    throw ValidationError("solve_incremental_state: need n_t + 1 state snapshots");
  }
  std::vector<VectorField> grad_m;
  grad_m.reserve(m_series.size());
  for (const auto& m : m_series) grad_m.push_back(fd8_gradient(m));
  return solve_incremental_state(grad_m, v_tilde, plan);
}

ScalarField jacobian_determinant(const TransportPlan& plan) {
  require_divergence(plan, "jacobian_determinant");
  const Grid& g = plan.departure.grid();
  ScalarField cur(g, 1), next(g);
  for (int j = 0; j < plan.cfg.n_t; ++j) {
    heun_multiply(cur, plan.departure, plan.cfg.interp, plan.divergence,
                  plan.divergence_at_departure, plan.cfg.dt(), next);
    std::swap(cur, next);
  }
  check_finite(cur, "Jacobian solve");
  return cur;
}

ScalarField jacobian_determinant(const VectorField& v, const TransportConfig& cfg) {
  return jacobian_determinant(make_transport_plan(v, cfg, true));
}

LabelMap transport_labels(const LabelMap& labels, const TransportPlan& plan) {
  require_same_grid(labels.grid(), plan.departure.grid(), "transport_labels");
  LabelMap out(labels.grid(), 0);
  std::vector<real> best(labels.size(), real(0.5));
  for (std::int32_t id : labels.distinct()) {
    if (id == 0) continue;
    const ScalarField moved = solve_state(labels.indicator(id), plan);
    // ids ascend, so >= hands ties to the larger id
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (moved[i] >= best[i]) {
        best[i] = moved[i];
        out[i] = id;
      }
    }
  }
  return out;
}

LabelMap transport_labels(const LabelMap& labels, const VectorField& v, const TransportConfig& cfg) {
  require_same_grid(labels.grid(), v.grid(), "transport_labels");
  return transport_labels(labels, make_transport_plan(v, cfg, false));
}

// ---------------------------------------------------------------------------
// Discrete linearization

namespace {

void require_linearization(const TransportPlan& plan, const char* what) {
  if (!plan.has_linearization) {
    throw ValidationError(std::string(what) + ": transport plan lacks linearization data");
  }
}

}  // namespace

void solve_state_linearized(const ScalarField& m0, const TransportPlan& plan,
                            std::vector<ScalarField>& series, std::vector<VectorField>& grads) {
  require_same_grid(m0.grid(), plan.departure.grid(), "solve_state_linearized");
  const int nt = plan.cfg.n_t;
  series.assign(nt + 1, ScalarField(m0.grid()));
  grads.assign(nt, VectorField(m0.grid()));
  series[0] = m0;
  for (int j = 0; j < nt; ++j) {
    interpolate_with_gradient(series[j], plan.departure, plan.cfg.interp, series[j + 1], grads[j]);
  }
  check_finite(series.back(), "state solve");
}

void departure_perturbation(const VectorField& dv, const TransportPlan& plan, VectorField& dx) {
  require_linearization(plan, "departure_perturbation");
  // X = x - dt/2 (v(x) + v(x*)), x* = x - dt v(x)
  //   dX_a = -dt/2 (dv_a + I(x*) dv_a - dt sum_c d_c v_a(x*) dv_c)
  const real dt = plan.cfg.dt();
  const auto& dvp = plan.velocity_gradient_at_predictor;
  ScalarField at_pred(dv.grid());
  for (int a = 0; a < 3; ++a) {
    interpolate(dv[a], plan.predictor, plan.cfg.interp, at_pred);
    real* out = dx[a].data();
    for (std::size_t i = 0; i < dv.size(); ++i) {
      const real chain = dvp[3 * a][i] * dv[0][i] + dvp[3 * a + 1][i] * dv[1][i] +
                         dvp[3 * a + 2][i] * dv[2][i];
      out[i] = -dt / 2 * (dv[a][i] + at_pred[i] - dt * chain);
    }
  }
}

ScalarField solve_linearized_state(const std::vector<VectorField>& grads, const VectorField& dv,
                                   const TransportPlan& plan) {
  require_linearization(plan, "solve_linearized_state");
  const int nt = plan.cfg.n_t;
  if (static_cast<int>(grads.size()) != nt) {
    throw ValidationError("solve_linearized_state: need n_t interpolant gradients");
  }
  const Grid& g = dv.grid();
  VectorField dx(g);
  departure_perturbation(dv, plan, dx);
  ScalarField dm(g), next(g);
  // dm^{j+1} = I(X) dm^j + G^j . dX
  for (int j = 0; j < nt; ++j) {
    if (j == 0) next.fill(0);
    else interpolate(dm, plan.departure, plan.cfg.interp, next);
    for (std::size_t i = 0; i < g.size(); ++i) {
      next[i] += grads[j][0][i] * dx[0][i] + grads[j][1][i] * dx[1][i] + grads[j][2][i] * dx[2][i];
    }
    std::swap(dm, next);
  }
  check_finite(dm, "linearized state solve");
  return dm;
}

void discrete_adjoint_source(const ScalarField& final_lambda, const TransportPlan& plan,
                             const std::vector<VectorField>& grads, VectorField& out) {
  require_linearization(plan, "discrete_adjoint_source");
  const int nt = plan.cfg.n_t;
  if (static_cast<int>(grads.size()) != nt) {
    throw ValidationError("discrete_adjoint_source: need n_t interpolant gradients");
  }
  const Grid& g = final_lambda.grid();
  // mu = sum_j lambda^{j+1} G^j with lambda^j = I(X)^T lambda^{j+1}
  VectorField mu(g);
  ScalarField lambda = final_lambda, prev(g);
  for (int j = nt - 1; j >= 0; --j) {
    for (int a = 0; a < 3; ++a) {
      real* m = mu[a].data();
      const real* gj = grads[j][a].data();
      for (std::size_t i = 0; i < g.size(); ++i) m[i] += lambda[i] * gj[i];
    }
    if (j > 0) {
      interpolate_transpose(lambda, plan.departure, plan.cfg.interp, prev);
      std::swap(lambda, prev);
    }
  }
  // Pull mu back through dX/dv (see departure_perturbation), with the
  // overall minus sign of <lambda, dm> folded in.
  const real dt = plan.cfg.dt();
  const auto& dvp = plan.velocity_gradient_at_predictor;
  ScalarField scattered(g);
  for (int c = 0; c < 3; ++c) {
    interpolate_transpose(mu[c], plan.predictor, plan.cfg.interp, scattered);
    real* o = out[c].data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const real chain = mu[0][i] * dvp[c][i] + mu[1][i] * dvp[3 + c][i] + mu[2][i] * dvp[6 + c][i];
      o[i] = dt / 2 * (mu[c][i] + scattered[i] - dt * chain);
    }
  }
  if (!all_finite(out)) throw TransportError("adjoint solve produced non-finite values");
}

}  // namespace svreg
