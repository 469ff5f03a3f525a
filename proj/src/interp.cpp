#include <algorithm>
#include <cmath>

#include "svreg/transport.hpp"

namespace svreg {
namespace {

inline int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Lagrange weights for nodes -1, 0, 1, 2 at offset t in [0, 1).
inline void cubic_weights(real t, real w[4]) {
  const real tm1 = t - 1, tm2 = t - 2, tp1 = t + 1;
  w[0] = -t * tm1 * tm2 / 6;
  w[1] = tp1 * tm1 * tm2 / 2;
  w[2] = -tp1 * t * tm2 / 2;
  w[3] = tp1 * t * tm1 / 6;
}

inline real interp_linear(const real* f, const Grid::Dims& n, const int c[3], const real t[3]) {
  const int a0 = c[0], a1 = a0 + 1 == n[0] ? 0 : a0 + 1;
  const int b0 = c[1], b1 = b0 + 1 == n[1] ? 0 : b0 + 1;
  const int c0 = c[2], c1 = c0 + 1 == n[2] ? 0 : c0 + 1;
  auto at = [&](int i, int j, int k) {
    return f[(static_cast<std::size_t>(i) * n[1] + j) * n[2] + k];
  };
  const real s0 = 1 - t[0], s1 = 1 - t[1], s2 = 1 - t[2];
  return s0 * (s1 * (s2 * at(a0, b0, c0) + t[2] * at(a0, b0, c1)) +
               t[1] * (s2 * at(a0, b1, c0) + t[2] * at(a0, b1, c1))) +
         t[0] * (s1 * (s2 * at(a1, b0, c0) + t[2] * at(a1, b0, c1)) +
                 t[1] * (s2 * at(a1, b1, c0) + t[2] * at(a1, b1, c1)));
}

inline real interp_cubic(const real* f, const Grid::Dims& n, const int c[3], const real t[3]) {
  real wa[4], wb[4], wc[4];
  cubic_weights(t[0], wa);
  cubic_weights(t[1], wb);
  cubic_weights(t[2], wc);
  int ia[4], ib[4], ic[4];
  for (int s = 0; s < 4; ++s) {
    ia[s] = wrap_index(c[0] + s - 1, n[0]);
    ib[s] = wrap_index(c[1] + s - 1, n[1]);
    ic[s] = wrap_index(c[2] + s - 1, n[2]);
  }
  real acc = 0;
  for (int a = 0; a < 4; ++a) {
    real acc_b = 0;
    for (int b = 0; b < 4; ++b) {
      const real* row = f + (static_cast<std::size_t>(ia[a]) * n[1] + ib[b]) * n[2];
      acc_b += wb[b] * (wc[0] * row[ic[0]] + wc[1] * row[ic[1]] + wc[2] * row[ic[2]] +
                        wc[3] * row[ic[3]]);
    }
    acc += wa[a] * acc_b;
  }
  return acc;
}

inline void locate(double x, int axis, const Grid& g, int& cell, real& frac) {
  double u = x / static_cast<double>(g.spacing(axis));
  const int n = g.dim(axis);
  // Lattice coordinates computed as i * h can land a few ulps off i.
  const double nearest = std::nearbyint(u);
  if (std::abs(u - nearest) < 1e-12 * std::max(1.0, std::abs(u))) u = nearest;
  double fl = std::floor(u);
  double t = u - fl;
  long long i = static_cast<long long>(fl) % n;
  if (i < 0) i += n;
  cell = static_cast<int>(i);
  frac = static_cast<real>(t);
  if (frac >= 1) {  // rounding just below an integer
    frac = 0;
    cell = cell + 1 == n ? 0 : cell + 1;
  }
}

}  // namespace

Characteristics::Characteristics(const Grid& grid) : grid_(grid) {
  for (int d = 0; d < 3; ++d) {
    base_[d].assign(grid.size(), 0);
    frac_[d].assign(grid.size(), 0);
  }
}

void Characteristics::set(std::size_t i, double x1, double x2, double x3) {
  locate(x1, 0, grid_, base_[0][i], frac_[0][i]);
  locate(x2, 1, grid_, base_[1][i], frac_[1][i]);
  locate(x3, 2, grid_, base_[2][i], frac_[2][i]);
}

real Characteristics::coordinate(int axis, std::size_t i) const {
  return (static_cast<real>(base_[axis][i]) + frac_[axis][i]) * grid_.spacing(axis);
}

void interpolate(const ScalarField& f, const Characteristics& points, InterpOrder order,
                 ScalarField& out) {
  require_same_grid(f.grid(), points.grid(), "interpolate");
  require_same_grid(f.grid(), out.grid(), "interpolate");
  const auto& n = f.grid().dims();
  const real* src = f.data();
  real* dst = out.data();
  const std::size_t total = points.size();
  int c[3];
  real t[3];
  if (order == InterpOrder::linear) {
    for (std::size_t i = 0; i < total; ++i) {
      for (int d = 0; d < 3; ++d) {
        c[d] = points.cell(d, i);
        t[d] = points.offset(d, i);
      }
      dst[i] = interp_linear(src, n, c, t);
    }
  } else {
    for (std::size_t i = 0; i < total; ++i) {
      for (int d = 0; d < 3; ++d) {
        c[d] = points.cell(d, i);
        t[d] = points.offset(d, i);
      }
      dst[i] = interp_cubic(src, n, c, t);
    }
  }
}

ScalarField interpolate(const ScalarField& f, const Characteristics& points, InterpOrder order) {
  ScalarField out(f.grid());
  interpolate(f, points, order, out);
  return out;
}

real interpolate_at(const ScalarField& f, double x1, double x2, double x3, InterpOrder order) {
  int c[3];
  real t[3];
  locate(x1, 0, f.grid(), c[0], t[0]);
  locate(x2, 1, f.grid(), c[1], t[1]);
  locate(x3, 2, f.grid(), c[2], t[2]);
  return order == InterpOrder::linear ? interp_linear(f.data(), f.grid().dims(), c, t)
                                      : interp_cubic(f.data(), f.grid().dims(), c, t);
}

Characteristics trace_characteristics(const VectorField& v, real dt, InterpOrder order,
                                      real sign, Characteristics* predictor) {
  if (!(dt > 0)) throw ValidationError("trace_characteristics: dt must be positive");
  const Grid& g = v.grid();
  const auto& n = g.dims();
  const double step = static_cast<double>(sign) * dt;

  // Predictor x* = x - s dt v(x).
  Characteristics pred(g);
  std::size_t idx = 0;
  for (int i = 0; i < n[0]; ++i) {
    const double x1 = g.coordinate(0, i);
    for (int j = 0; j < n[1]; ++j) {
      const double x2 = g.coordinate(1, j);
      for (int k = 0; k < n[2]; ++k, ++idx) {
        pred.set(idx, x1 - step * v[0][idx], x2 - step * v[1][idx],
                 g.coordinate(2, k) - step * v[2][idx]);
      }
    }
  }
  std::array<ScalarField, 3> vstar = {interpolate(v[0], pred, order), interpolate(v[1], pred, order),
                                      interpolate(v[2], pred, order)};
  if (predictor) *predictor = pred;

  Characteristics out(g);
  out.dt = dt;
  const double half = 0.5 * step;
  idx = 0;
  for (int i = 0; i < n[0]; ++i) {
    const double x1 = g.coordinate(0, i);
    for (int j = 0; j < n[1]; ++j) {
      const double x2 = g.coordinate(1, j);
      for (int k = 0; k < n[2]; ++k, ++idx) {
        out.set(idx, x1 - half * (double(v[0][idx]) + vstar[0][idx]),
                x2 - half * (double(v[1][idx]) + vstar[1][idx]),
                g.coordinate(2, k) - half * (double(v[2][idx]) + vstar[2][idx]));
      }
    }
  }
  return out;
}

namespace {

// Nodes and weights of one axis. Derivative weights are per radian.
struct AxisStencil {
  int n = 0;
  int idx[5];
  real w[5];
  real dw[5];
};

void axis_stencil(int cell, real t, int len, real h, InterpOrder order, AxisStencil& s) {
  const real inv_h = 1 / h;
  if (order == InterpOrder::linear) {
    if (t == 0) {
      s.n = 3;
      const real w[3] = {0, 1, 0}, dw[3] = {-0.5, 0, 0.5};
      for (int q = 0; q < 3; ++q) {
        s.idx[q] = wrap_index(cell + q - 1, len);
        s.w[q] = w[q];
        s.dw[q] = dw[q] * inv_h;
      }
    } else {
      s.n = 2;
      s.idx[0] = cell;
      s.idx[1] = cell + 1 == len ? 0 : cell + 1;
      s.w[0] = 1 - t;
      s.w[1] = t;
      s.dw[0] = -inv_h;
      s.dw[1] = inv_h;
    }
    return;
  }
  if (t == 0) {
    // Mean of the derivatives of the two cubics meeting at the node.
    s.n = 5;
    const real w[5] = {0, 0, 1, 0, 0};
    const real dw[5] = {real(1) / 12, real(-2) / 3, 0, real(2) / 3, real(-1) / 12};
    for (int q = 0; q < 5; ++q) {
      s.idx[q] = wrap_index(cell + q - 2, len);
      s.w[q] = w[q];
      s.dw[q] = dw[q] * inv_h;
    }
    return;
  }
  s.n = 4;
  cubic_weights(t, s.w);
  const real t2 = t * t;
  s.dw[0] = -(3 * t2 - 6 * t + 2) / 6 * inv_h;
  s.dw[1] = (3 * t2 - 4 * t - 1) / 2 * inv_h;
  s.dw[2] = -(3 * t2 - 2 * t - 2) / 2 * inv_h;
  s.dw[3] = (3 * t2 - 1) / 6 * inv_h;
  for (int q = 0; q < 4; ++q) s.idx[q] = wrap_index(cell + q - 1, len);
}

void point_stencils(const Characteristics& pts, std::size_t i, InterpOrder order, AxisStencil s[3]) {
  const Grid& g = pts.grid();
  for (int d = 0; d < 3; ++d) {
    axis_stencil(pts.cell(d, i), pts.offset(d, i), g.dim(d), g.spacing(d), order, s[d]);
  }
}

}  // namespace

void interpolate_with_gradient(const ScalarField& f, const Characteristics& points,
                               InterpOrder order, ScalarField& value, VectorField& gradient) {
  require_same_grid(f.grid(), points.grid(), "interpolate_with_gradient");
  const auto& n = f.grid().dims();
  const real* src = f.data();
  AxisStencil s[3];
  for (std::size_t i = 0; i < points.size(); ++i) {
    point_stencils(points, i, order, s);
    real val = 0, g0 = 0, g1 = 0, g2 = 0;
    for (int a = 0; a < s[0].n; ++a) {
      real v_b = 0, d1_b = 0, d2_b = 0;
      for (int b = 0; b < s[1].n; ++b) {
        const real* row = src + (static_cast<std::size_t>(s[0].idx[a]) * n[1] + s[1].idx[b]) * n[2];
        real v_c = 0, d_c = 0;
        for (int c = 0; c < s[2].n; ++c) {
          const real fv = row[s[2].idx[c]];
          v_c += s[2].w[c] * fv;
          d_c += s[2].dw[c] * fv;
        }
        v_b += s[1].w[b] * v_c;
        d1_b += s[1].dw[b] * v_c;
        d2_b += s[1].w[b] * d_c;
      }
      val += s[0].w[a] * v_b;
      g0 += s[0].dw[a] * v_b;
      g1 += s[0].w[a] * d1_b;
      g2 += s[0].w[a] * d2_b;
    }
    value[i] = val;
    gradient[0][i] = g0;
    gradient[1][i] = g1;
    gradient[2][i] = g2;
  }
}

void interpolate_transpose(const ScalarField& w, const Characteristics& points, InterpOrder order,
                           ScalarField& out) {
  require_same_grid(w.grid(), points.grid(), "interpolate_transpose");
  const auto& n = w.grid().dims();
  out.fill(0);
  real* dst = out.data();
  AxisStencil s[3];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const real wi = w[i];
    if (wi == 0) continue;
    point_stencils(points, i, order, s);
    for (int a = 0; a < s[0].n; ++a) {
      const real wa = s[0].w[a] * wi;
      if (wa == 0) continue;
      for (int b = 0; b < s[1].n; ++b) {
        const real wab = wa * s[1].w[b];
        if (wab == 0) continue;
        real* row = dst + (static_cast<std::size_t>(s[0].idx[a]) * n[1] + s[1].idx[b]) * n[2];
        for (int c = 0; c < s[2].n; ++c) row[s[2].idx[c]] += wab * s[2].w[c];
      }
    }
  }
}

double cfl_number(const VectorField& v, real dt) {
  double vmax = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = v[0][i], b = v[1][i], c = v[2][i];
    vmax = std::max(vmax, a * a + b * b + c * c);
  }
  return std::sqrt(vmax) * dt / v.grid().min_spacing();
}

}  // namespace svreg
