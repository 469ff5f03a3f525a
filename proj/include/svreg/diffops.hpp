#pragma once

// First-order derivatives by 8th-order centered finite differences and the
// spectral regularization operators used by the registration objective.
//
// Regularization model
//   velocity:   (beta_v / 2) <A v, v>,  A = -Laplacian per component (symbol |k|^2)
//   divergence: (beta_w / 2) ||w||_{H1}^2 with w = D v, D the FD-8 divergence,
//               ||w||_{H1}^2 = <(1 - Laplacian) w, w>
//
// K is the per-mode operator
//   K g = g - c(k) kappa (kappa . g) / |kappa|^2,
//   c(k) = beta_w b(k) |kappa|^2 / (beta_v a(k) + beta_w b(k) |kappa|^2),
// with a = |k|^2, b = 1 + |k|^2 and kappa the symbol of the FD-8 first
// derivative (i kappa), which vanishes at Nyquist. This is
// K = beta_v A (beta_v A + beta_w B)^{-1}, so K maps the L2 gradient of the
// full objective onto the reduced gradient beta_v A v + K b.
// beta_w = 0 gives K = I; beta_w / beta_v -> inf gives the Leray projection.

#include "svreg/field.hpp"
#include "svreg/spectral.hpp"

namespace svreg {

/// Minimum dimension for the periodic 8th-order stencil.
inline constexpr int kFd8MinDim = 9;

void fd8_derivative(const ScalarField& f, int axis, ScalarField& out);
VectorField fd8_gradient(const ScalarField& f);
void fd8_gradient(const ScalarField& f, VectorField& out);
ScalarField fd8_divergence(const VectorField& v);
void fd8_divergence(const VectorField& v, ScalarField& out);

class RegOperators {
 public:
  /// beta_v > 0, beta_w >= 0.
  RegOperators(const Grid& grid, real beta_v, real beta_w);

  real beta_v() const { return beta_v_; }
  real beta_w() const { return beta_w_; }
  void set_betas(real beta_v, real beta_w);

  const Grid& grid() const { return workspace_.grid(); }
  SpectralWorkspace& workspace() { return workspace_; }

  void apply_A(const VectorField& v, VectorField& out);
  /// (beta_v A + shift I)^{-1}, shift > 0.
  void apply_inv_shifted_A(const VectorField& v, real shift, VectorField& out);
  void apply_K(const VectorField& g, VectorField& out);
  /// B v = D^T (1 - Laplacian) D v = -grad_fd8((1 - Laplacian) div_fd8 v).
  void apply_divergence_penalty(const VectorField& v, VectorField& out);
  /// (beta_v A + beta_w B_s + shift I)^{-1} with B_s the spectral analogue of B;
  /// reduces to apply_inv_shifted_A when beta_w = 0.
  void apply_inv_regularization(const VectorField& v, real shift, VectorField& out);
  void apply_helmholtz(const ScalarField& w, ScalarField& out);

  /// <A v, v> with quadrature weights.
  double seminorm_A(const VectorField& v);
  /// ||div_fd8 v||_{H1}^2 with quadrature weights.
  double divergence_h1_norm_sq(const VectorField& v);

 private:
  template <class Fn>
  void multiply_scalar_symbol(const ScalarField& in, ScalarField& out, Fn&& symbol);

  real beta_v_;
  real beta_w_;
  SpectralWorkspace workspace_;
};

VectorField apply_A(const VectorField& v, RegOperators& ops);
VectorField apply_inv_shifted_A(const VectorField& v, RegOperators& ops, real shift);
VectorField apply_K(const VectorField& g, RegOperators& ops);

}  // namespace svreg
