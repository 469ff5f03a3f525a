#include "svreg/objective.hpp"

#include <cmath>

namespace svreg {

void RegistrationConfig::validate() const {
  if (!(beta_v > 0)) throw ValidationError("beta_v must be positive");
  if (!(beta_w >= 0)) throw ValidationError("beta_w must be non-negative");
  if (n_t < 1) throw ValidationError("n_t must be at least 1");
  if (!(gtol > 0 && gtol < 1)) throw ValidationError("gtol must lie in (0, 1)");
  if (max_gn_iters < 1 || pcg_max_iters < 1 || armijo_max_trials < 1) {
    throw ValidationError("iteration caps must be positive");
  }
  if (!(armijo_c1 > 0 && armijo_c1 < 1) || !(armijo_backtrack > 0 && armijo_backtrack < 1)) {
    throw ValidationError("Armijo constants must lie in (0, 1)");
  }
}

GradientScheme parse_gradient_scheme(const std::string& s) {
  if (s == "discrete") return GradientScheme::discrete;
  if (s == "continuous") return GradientScheme::continuous;
  throw ValidationError("unknown gradient scheme '" + s + "' (expected discrete or continuous)");
}

std::string to_string(GradientScheme g) {
  return g == GradientScheme::discrete ? "discrete" : "continuous";
}

TransportConfig RegistrationConfig::transport() const {
  TransportConfig t;
  t.n_t = n_t;
  t.interp = interp;
  return t;
}

namespace {

double mean_squared_gradient(const ScalarField& m) {
  const VectorField g = fd8_gradient(m);
  return norm2(g) * norm2(g) / static_cast<double>(m.size());
}

}  // namespace

ObjectiveState::ObjectiveState(const ScalarField& m0, const ScalarField& m1,
                               const RegistrationConfig& cfg)
    : cfg_(cfg), m0_(m0), m1_(m1), v_(m0.grid()), ops_(m0.grid(), cfg.beta_v, cfg.beta_w) {
  cfg_.validate();
  require_same_grid(m0.grid(), m1.grid(), "objective");
  if (!all_finite(m0) || !all_finite(m1)) throw ObjectiveError("input images are not finite");
  // Scale of the data Hessian, so the preconditioner follows intensity scaling.
  shift_ = static_cast<real>(0.5 * (mean_squared_gradient(m0) + mean_squared_gradient(m1)));
  if (!(shift_ > 0)) shift_ = 1;
  set_velocity(v_);
}

void ObjectiveState::set_velocity(const VectorField& v) {
  require_same_grid(v.grid(), m0_.grid(), "objective velocity");
  v_ = v;
  const bool discrete = cfg_.gradient == GradientScheme::discrete;
  plan_ = std::make_unique<TransportPlan>(
      make_transport_plan(v_, cfg_.transport(), !discrete, discrete));
  if (discrete) {
    solve_state_linearized(m0_, *plan_, m_series_, grad_m_);
  } else {
    m_series_ = solve_state_series(m0_, *plan_);
    grad_m_.clear();
    grad_m_.reserve(m_series_.size());
    for (const auto& m : m_series_) grad_m_.push_back(fd8_gradient(m));
  }

  const ScalarField diff = m_series_.back() - m1_;
  data_term_ = 0.5 * l2_inner(diff, diff);
  update_regularization_terms();
  adjoint_source_.reset();
  gradient_.reset();
}

void ObjectiveState::set_betas(real beta_v, real beta_w) {
  ops_.set_betas(beta_v, beta_w);
  cfg_.beta_v = beta_v;
  cfg_.beta_w = beta_w;
  update_regularization_terms();
  gradient_.reset();
}

void ObjectiveState::update_regularization_terms() {
  reg_v_term_ = 0.5 * cfg_.beta_v * ops_.seminorm_A(v_);
  reg_w_term_ = cfg_.beta_w > 0 ? 0.5 * cfg_.beta_w * ops_.divergence_h1_norm_sq(v_) : 0.0;
  if (!std::isfinite(objective())) throw ObjectiveError("objective is not finite");
}

const VectorField& ObjectiveState::adjoint_source() {
  if (!adjoint_source_) {
    ScalarField lambda1 = m1_ - m_series_.back();
    VectorField b(v_.grid());
    if (cfg_.gradient == GradientScheme::discrete) {
      discrete_adjoint_source(lambda1, *plan_, grad_m_, b);
    } else {
      accumulate_adjoint_source(lambda1, *plan_, grad_m_, b);
    }
    adjoint_source_ = std::move(b);
  }
  return *adjoint_source_;
}

const VectorField& ObjectiveState::gradient() {
  if (!gradient_) {
    VectorField g(v_.grid());
    ops_.apply_A(v_, g);
    g *= cfg_.beta_v;
    if (cfg_.beta_w > 0) {
      VectorField bv(v_.grid());
      ops_.apply_divergence_penalty(v_, bv);
      axpy(cfg_.beta_w, bv, g);
    }
    g += adjoint_source();
    if (!all_finite(g)) throw ObjectiveError("gradient is not finite");
    gradient_ = std::move(g);
  }
  return *gradient_;
}

VectorField ObjectiveState::reduced_gradient() {
  VectorField kb(v_.grid());
  ops_.apply_K(adjoint_source(), kb);
  VectorField av(v_.grid());
  ops_.apply_A(v_, av);
  axpy(cfg_.beta_v, av, kb);
  if (!all_finite(kb)) throw ObjectiveError("gradient is not finite");
  return kb;
}

void ObjectiveState::data_hessian_matvec(const VectorField& v_tilde, VectorField& out) {
  if (cfg_.gradient == GradientScheme::discrete) {
    ScalarField dm = solve_linearized_state(grad_m_, v_tilde, *plan_);
    dm *= real(-1);
    discrete_adjoint_source(dm, *plan_, grad_m_, out);
  } else {
    ScalarField mt = solve_incremental_state(grad_m_, v_tilde, *plan_);
    mt *= real(-1);
    accumulate_adjoint_source(mt, *plan_, grad_m_, out);
  }
}

void ObjectiveState::gn_hessian_matvec(const VectorField& v_tilde, VectorField& out) {
  data_hessian_matvec(v_tilde, out);
  VectorField tmp(v_.grid());
  ops_.apply_A(v_tilde, tmp);
  axpy(cfg_.beta_v, tmp, out);
  if (cfg_.beta_w > 0) {
    ops_.apply_divergence_penalty(v_tilde, tmp);
    axpy(cfg_.beta_w, tmp, out);
  }
}

void ObjectiveState::hessian_matvec(const VectorField& v_tilde, VectorField& out) {
  VectorField hd(v_.grid());
  data_hessian_matvec(v_tilde, hd);
  ops_.apply_K(hd, out);
  VectorField tmp(v_.grid());
  ops_.apply_A(v_tilde, tmp);
  axpy(cfg_.beta_v, tmp, out);
}

void ObjectiveState::precondition(const VectorField& r, VectorField& out) {
  ops_.apply_inv_regularization(r, shift_, out);
}

ScalarField ObjectiveState::jacobian() const {
  if (plan_->has_divergence) return jacobian_determinant(*plan_);
  return jacobian_determinant(v_, cfg_.transport());
}

double evaluate_objective(const ScalarField& m0, const ScalarField& m1, const VectorField& v,
                          const RegistrationConfig& cfg) {
  ObjectiveState state(m0, m1, cfg);
  state.set_velocity(v);
  return state.objective();
}

VectorField reduced_gradient(const ScalarField& m0, const ScalarField& m1, const VectorField& v,
                             const RegistrationConfig& cfg) {
  ObjectiveState state(m0, m1, cfg);
  state.set_velocity(v);
  return state.reduced_gradient();
}

VectorField hessian_matvec(const VectorField& v_tilde, ObjectiveState& state) {
  VectorField out(v_tilde.grid());
  state.hessian_matvec(v_tilde, out);
  return out;
}

double relative_residual(const ScalarField& m0, const ScalarField& m1, const ScalarField& m_final) {
  require_same_grid(m0.grid(), m1.grid(), "relative_residual");
  require_same_grid(m0.grid(), m_final.grid(), "relative_residual");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < m0.size(); ++i) {
    const double a = double(m_final[i]) - m1[i];
    const double b = double(m0[i]) - m1[i];
    num += a * a;
    den += b * b;
  }
  if (den == 0) return 0;
  return num / den;
}

}  // namespace svreg
