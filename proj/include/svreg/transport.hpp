#pragma once

// Semi-Lagrangian transport on the periodic box.
//
// Every solver works on a TransportPlan: the RK2 departure points of one
// stationary velocity, computed once and reused by all PDE solves for that
// velocity. Time runs over [0, 1] in n_t steps of dt = 1/n_t; series are
// indexed by time step j (t_j = j * dt), j = 0..n_t.
//
//   state              dm/dt + v.grad m = 0                  forward from m(0)
//   Jacobian           dJ/dt + v.grad J = J div v            forward from J(0) = 1
//   incremental state  dm~/dt + v.grad m~ = -v~.grad m       forward from 0
//   adjoint            -dl/dt - div(l v) = 0                 backward from l(1)
//
// Sources are integrated with the trapezoidal rule (Heun for the
// multiplicative div v term) along the characteristics.

#include <optional>
#include <string>
#include <vector>

#include "svreg/field.hpp"

namespace svreg {

enum class InterpOrder { linear, cubic };
enum class Direction { forward, backward };

struct TransportConfig {
  int n_t = 4;
  InterpOrder interp = InterpOrder::cubic;
  /// backward transports with -v.
  Direction direction = Direction::forward;

  void validate() const;
  real dt() const { return static_cast<real>(1.0 / n_t); }
};

InterpOrder parse_interp_order(const std::string& s);
std::string to_string(InterpOrder order);

/// Query points for interpolation, one per voxel. Coordinates are radians
/// wrapped into [0, 2*pi); the lattice cell and in-cell offset are cached.
class Characteristics {
 public:
  explicit Characteristics(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return base_[0].size(); }

  /// Sets point i from coordinates in radians (wrapped here).
  void set(std::size_t i, double x1, double x2, double x3);
  /// Departure coordinate along `axis`, radians in [0, 2*pi).
  real coordinate(int axis, std::size_t i) const;
  int cell(int axis, std::size_t i) const { return base_[axis][i]; }
  real offset(int axis, std::size_t i) const { return frac_[axis][i]; }

  real dt = 0;

 private:
  Grid grid_;
  std::array<std::vector<int>, 3> base_;
  std::array<std::vector<real>, 3> frac_;
};

/// RK2 (Heun) backward trace of `sign * v` over one step dt:
///   x* = x - s dt v(x),  X = x - (s dt / 2) (v(x) + v(x*)).
Characteristics trace_characteristics(const VectorField& v, real dt,
                                      InterpOrder order = InterpOrder::cubic, real sign = 1,
                                      Characteristics* predictor = nullptr);

/// Periodic trilinear or tricubic (4-point Lagrange per axis) interpolation.
ScalarField interpolate(const ScalarField& f, const Characteristics& points, InterpOrder order);
void interpolate(const ScalarField& f, const Characteristics& points, InterpOrder order,
                 ScalarField& out);
/// Lattice points (in radians) interpolate exactly; used by scattered-point tests.
real interpolate_at(const ScalarField& f, double x1, double x2, double x3, InterpOrder order);

/// Pointwise max |v| * dt / min h.
double cfl_number(const VectorField& v, real dt);

/// Precomputed characteristics and divergence samples for one velocity.
struct TransportPlan {
  TransportPlan(const Grid& grid, const TransportConfig& config);

  TransportConfig cfg;
  /// Departure points of the forward-time equations (trace along +v).
  Characteristics departure;
  /// Departure points of the adjoint sweep (trace along -v).
  Characteristics arrival;
  /// div v on the lattice, at `departure`, and at `arrival`.
  ScalarField divergence;
  ScalarField divergence_at_departure;
  ScalarField divergence_at_arrival;
  double cfl = 0;
  bool has_divergence = false;

  /// Filled only with `with_linearization`: the RK2 predictor points x*, the
  /// transported velocity and d_c v_a at x* (index 3 * a + c).
  Characteristics predictor;
  std::optional<VectorField> velocity;
  std::vector<ScalarField> velocity_gradient_at_predictor;
  bool has_linearization = false;
};

/// Throws TransportError if v has non-finite entries. Without divergence
/// data the plan supports only the state and incremental-state solvers.
TransportPlan make_transport_plan(const VectorField& v, const TransportConfig& cfg,
                                  bool with_divergence = true, bool with_linearization = false);

ScalarField solve_state(const ScalarField& m0, const VectorField& v, const TransportConfig& cfg);
ScalarField solve_state(const ScalarField& m0, const TransportPlan& plan);
/// m at all n_t + 1 time points.
std::vector<ScalarField> solve_state_series(const ScalarField& m0, const TransportPlan& plan);

/// lambda at all n_t + 1 time points, index j at t_j, final condition at n_t.
std::vector<ScalarField> solve_adjoint(const ScalarField& final_lambda, const VectorField& v,
                                       const TransportConfig& cfg);
std::vector<ScalarField> solve_adjoint(const ScalarField& final_lambda, const TransportPlan& plan);

/// Integral over [0, 1] of lambda(t) * grad m(t) (trapezoidal rule) with
/// lambda from the adjoint solve; lambda is not stored.
void accumulate_adjoint_source(const ScalarField& final_lambda, const TransportPlan& plan,
                               const std::vector<VectorField>& grad_m, VectorField& out);

/// m~(1) from the incremental state equation; grad_m holds fd8 gradients of
/// the state snapshots.
ScalarField solve_incremental_state(const std::vector<ScalarField>& m_series, const VectorField& v,
                                    const VectorField& v_tilde, const TransportConfig& cfg);
ScalarField solve_incremental_state(const std::vector<VectorField>& grad_m,
                                    const VectorField& v_tilde, const TransportPlan& plan);

/// J(1) of the forward map; J <= 0 is returned as is for the caller to report.
ScalarField jacobian_determinant(const VectorField& v, const TransportConfig& cfg);
ScalarField jacobian_determinant(const TransportPlan& plan);

/// Transports every non-zero label's indicator and assigns each voxel the
/// label with the largest value >= 0.5 (ties to the larger id); 0 otherwise.
LabelMap transport_labels(const LabelMap& labels, const VectorField& v, const TransportConfig& cfg);
LabelMap transport_labels(const LabelMap& labels, const TransportPlan& plan);

}  // namespace svreg

namespace svreg {

// ---------------------------------------------------------------------------
// Exact linearization of the discrete state solve.
//
// With m^{j+1} = I(X) m^j and X = X(v) the RK2 departure points, the
// derivative of m^{n_t} with respect to v needs the interpolant gradients
// G^j = grad(I m^j)(X), the transpose of I(X) and the derivative of X with
// respect to v. Requires a plan built with `with_linearization`; perturbations
// are of the transported velocity (-v for Direction::backward).

/// Interpolated values and their spatial gradient (radians) at the points.
/// Where a point sits exactly on a lattice plane, the derivative along that
/// axis is the average of the two one-sided interpolant derivatives.
void interpolate_with_gradient(const ScalarField& f, const Characteristics& points,
                               InterpOrder order, ScalarField& value, VectorField& gradient);
/// out = I^T w, i.e. each point scatters w with its interpolation weights.
void interpolate_transpose(const ScalarField& w, const Characteristics& points, InterpOrder order,
                           ScalarField& out);

/// Builds the state series and G^j for j = 0..n_t-1.
void solve_state_linearized(const ScalarField& m0, const TransportPlan& plan,
                            std::vector<ScalarField>& series, std::vector<VectorField>& grads);
/// Perturbation of the departure points caused by a velocity perturbation dv.
void departure_perturbation(const VectorField& dv, const TransportPlan& plan, VectorField& dx);
/// d m^{n_t} for velocity perturbation dv.
ScalarField solve_linearized_state(const std::vector<VectorField>& grads, const VectorField& dv,
                                   const TransportPlan& plan);
/// The field b with <b, dv> = -<final_lambda, d m^{n_t}[dv]> for every dv.
void discrete_adjoint_source(const ScalarField& final_lambda, const TransportPlan& plan,
                             const std::vector<VectorField>& grads, VectorField& out);

}  // namespace svreg
