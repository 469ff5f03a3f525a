#pragma once

// Registration objective
//
//   J(v) = 1/2 ||m(1) - m1||^2 + beta_v/2 <A v, v> + beta_w/2 ||div v||_{H1}^2
//
// with m(1) the template transported by v. All integrals are voxel sums
// weighted by h1 h2 h3.
//
// Two gradients are exposed. The L2 gradient of J is
//   g = beta_v A v + beta_w B v + b,   b = int_0^1 lambda grad m dt,
// and the reduced gradient is beta_v A v + K b = K g. The Gauss-Newton
// solver iterates with g and the symmetric Hessian
//   H = beta_v A + beta_w B + H_data,  H_data v~ = int_0^1 lambda~ grad m dt,
// whose step solves the reduced system K H v~ = -K g as well.
//
// b and H_data come in two flavours. `discrete` differentiates the
// discretized transport exactly: the adjoint is the transpose of the
// semi-Lagrangian interpolation (a mass-conserving scheme for the continuity
// equation) and image gradients are interpolant gradients. `continuous`
// solves the adjoint continuity equation semi-Lagrangian style and uses FD-8
// image gradients, which matches the discrete objective only up to
// discretization error.

#include <memory>
#include <optional>

#include "svreg/diffops.hpp"
#include "svreg/transport.hpp"

namespace svreg {

enum class GradientScheme { discrete, continuous };

GradientScheme parse_gradient_scheme(const std::string& s);
std::string to_string(GradientScheme g);

struct RegistrationConfig {
  real beta_v = real(1e-2);
  real beta_w = 0;
  int n_t = 4;
  InterpOrder interp = InterpOrder::cubic;
  double gtol = 5e-2;
  int max_gn_iters = 50;
  int pcg_max_iters = 50;
  double armijo_c1 = 1e-4;
  double armijo_backtrack = 0.5;
  int armijo_max_trials = 20;
  GradientScheme gradient = GradientScheme::discrete;

  void validate() const;
  TransportConfig transport() const;
};

class ObjectiveState {
 public:
  ObjectiveState(const ScalarField& m0, const ScalarField& m1, const RegistrationConfig& cfg);

  /// Recomputes characteristics and the state series; invalidates the gradient.
  void set_velocity(const VectorField& v);
  void set_betas(real beta_v, real beta_w);

  const VectorField& velocity() const { return v_; }
  const RegistrationConfig& config() const { return cfg_; }
  const ScalarField& template_image() const { return m0_; }
  const ScalarField& reference_image() const { return m1_; }

  double objective() const { return data_term_ + reg_v_term_ + reg_w_term_; }
  double data_term() const { return data_term_; }
  double regularization_term() const { return reg_v_term_ + reg_w_term_; }

  /// L2 gradient of J.
  const VectorField& gradient();
  /// beta_v A v + K b.
  VectorField reduced_gradient();
  /// Data part b of the gradient.
  const VectorField& adjoint_source();

  /// Symmetric Gauss-Newton Hessian H v~.
  void gn_hessian_matvec(const VectorField& v_tilde, VectorField& out);
  /// beta_v A v~ + K H_data v~.
  void hessian_matvec(const VectorField& v_tilde, VectorField& out);
  void data_hessian_matvec(const VectorField& v_tilde, VectorField& out);
  /// (beta_v A + beta_w B + shift I)^{-1} r.
  void precondition(const VectorField& r, VectorField& out);
  real preconditioner_shift() const { return shift_; }

  const ScalarField& deformed_template() const { return m_series_.back(); }
  const std::vector<ScalarField>& state_series() const { return m_series_; }
  ScalarField jacobian() const;
  double cfl() const { return plan_->cfl; }
  RegOperators& operators() { return ops_; }

 private:
  void update_regularization_terms();

  RegistrationConfig cfg_;
  ScalarField m0_;
  ScalarField m1_;
  VectorField v_;
  RegOperators ops_;
  real shift_ = 1;
  std::unique_ptr<TransportPlan> plan_;
  std::vector<ScalarField> m_series_;
  std::vector<VectorField> grad_m_;
  double data_term_ = 0;
  double reg_v_term_ = 0;
  double reg_w_term_ = 0;
  std::optional<VectorField> adjoint_source_;
  std::optional<VectorField> gradient_;
};

double evaluate_objective(const ScalarField& m0, const ScalarField& m1, const VectorField& v,
                          const RegistrationConfig& cfg);
VectorField reduced_gradient(const ScalarField& m0, const ScalarField& m1, const VectorField& v,
                             const RegistrationConfig& cfg);
VectorField hessian_matvec(const VectorField& v_tilde, ObjectiveState& state);

/// ||m_final - m1||^2 / ||m0 - m1||^2, with 0/0 taken as 0.
double relative_residual(const ScalarField& m0, const ScalarField& m1, const ScalarField& m_final);

}  // namespace svreg
