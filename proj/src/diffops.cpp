#include "svreg/diffops.hpp"

#include <array>
#include <sstream>

namespace svreg {
namespace {

constexpr std::array<double, 4> kFd8 = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};

void check_fd8_grid(const Grid& g) {
  for (int d = 0; d < 3; ++d) {
    if (g.dim(d) < kFd8MinDim) {
      std::ostringstream msg;
      msg << "FD-8 stencil needs at least " << kFd8MinDim << " points per axis, got "
          << g.dim(d);
      throw ValidationError(msg.str());
    }
  }
}

}  // namespace

void fd8_derivative(const ScalarField& f, int axis, ScalarField& out) {
  const Grid& g = f.grid();
  check_fd8_grid(g);
  require_same_grid(g, out.grid(), "fd8_derivative");
  const auto& n = g.dims();
  const real inv_h = static_cast<real>(1.0 / g.spacing(axis));
  const std::array<real, 4> c = {static_cast<real>(kFd8[0] * inv_h), static_cast<real>(kFd8[1] * inv_h),
                                 static_cast<real>(kFd8[2] * inv_h), static_cast<real>(kFd8[3] * inv_h)};
  const real* in = f.data();
  real* o = out.data();

  // Stride of the differentiated axis in the flat layout.
  const std::size_t stride = axis == 0 ? std::size_t(n[1]) * n[2] : (axis == 1 ? n[2] : 1);
  const int len = n[axis];

  std::array<int, 3> i{};
  for (i[0] = 0; i[0] < n[0]; ++i[0]) {
    for (i[1] = 0; i[1] < n[1]; ++i[1]) {
      for (i[2] = 0; i[2] < n[2]; ++i[2]) {
        const std::size_t idx = g.index(i[0], i[1], i[2]);
        const int p = i[axis];
        const std::size_t base = idx - static_cast<std::size_t>(p) * stride;
        real acc = 0;
        for (int s = 1; s <= 4; ++s) {
          int ip = p + s;
          if (ip >= len) ip -= len;
          int im = p - s;
          if (im < 0) im += len;
          acc += c[s - 1] * (in[base + ip * stride] - in[base + im * stride]);
        }
        o[idx] = acc;
      }
    }
  }
}

void fd8_gradient(const ScalarField& f, VectorField& out) {
  for (int d = 0; d < 3; ++d) fd8_derivative(f, d, out[d]);
}

VectorField fd8_gradient(const ScalarField& f) {
  VectorField out(f.grid());
  fd8_gradient(f, out);
  return out;
}

void fd8_divergence(const VectorField& v, ScalarField& out) {
  ScalarField tmp(v.grid());
  fd8_derivative(v[0], 0, out);
  fd8_derivative(v[1], 1, tmp);
  out += tmp;
  fd8_derivative(v[2], 2, tmp);
  out += tmp;
}

ScalarField fd8_divergence(const VectorField& v) {
  ScalarField out(v.grid());
  fd8_divergence(v, out);
  return out;
}

// ---------------------------------------------------------------------------
// RegOperators

RegOperators::RegOperators(const Grid& grid, real beta_v, real beta_w)
    : beta_v_(beta_v), beta_w_(beta_w), workspace_(grid) {
  set_betas(beta_v, beta_w);
}

void RegOperators::set_betas(real beta_v, real beta_w) {
  if (!(beta_v > 0)) throw ValidationError("beta_v must be positive");
  if (!(beta_w >= 0)) throw ValidationError("beta_w must be non-negative");
  beta_v_ = beta_v;
  beta_w_ = beta_w;
}

template <class Fn>
void RegOperators::multiply_scalar_symbol(const ScalarField& in, ScalarField& out, Fn&& symbol) {
  auto& ws = workspace_;
  ws.forward(in, 0);
  auto s = ws.spectrum(0);
  const auto& n = ws.grid().dims();
  const int h = ws.half_dim();
  std::size_t idx = 0;
  for (int i1 = 0; i1 < n[0]; ++i1) {
    const double k1 = ws.wavenumber(0, i1);
    for (int i2 = 0; i2 < n[1]; ++i2) {
      const double k2 = ws.wavenumber(1, i2);
      for (int i3 = 0; i3 < h; ++i3, ++idx) {
        const double k3 = ws.wavenumber(2, i3);
        s[idx] *= static_cast<real>(symbol(k1 * k1 + k2 * k2 + k3 * k3));
      }
    }
  }
  ws.inverse(0, out);
}

void RegOperators::apply_A(const VectorField& v, VectorField& out) {
  for (int d = 0; d < 3; ++d) {
    multiply_scalar_symbol(v[d], out[d], [](double k2) { return k2; });
  }
}

void RegOperators::apply_inv_shifted_A(const VectorField& v, real shift, VectorField& out) {
  if (!(shift > 0)) throw ValidationError("apply_inv_shifted_A: shift must be positive");
  const double bv = beta_v_;
  const double sh = shift;
  for (int d = 0; d < 3; ++d) {
    multiply_scalar_symbol(v[d], out[d], [&](double k2) { return 1.0 / (bv * k2 + sh); });
  }
}

void RegOperators::apply_helmholtz(const ScalarField& w, ScalarField& out) {
  multiply_scalar_symbol(w, out, [](double k2) { return 1.0 + k2; });
}

namespace {

// Per mode: out = scale * (g - longitudinal * kappa (kappa . g) / |kappa|^2),
// with {scale, longitudinal} = coeffs(|k|^2, |kappa|^2).
template <class Coeffs>
void apply_vector_symbol(SpectralWorkspace& ws, const VectorField& g, VectorField& out,
                         Coeffs&& coeffs) {
  using complex = SpectralWorkspace::complex;
  for (int d = 0; d < 3; ++d) ws.forward(g[d], d);
  std::array<std::span<complex>, 3> s = {ws.spectrum(0), ws.spectrum(1), ws.spectrum(2)};
  const auto& n = ws.grid().dims();
  const int h = ws.half_dim();
  std::size_t idx = 0;
  for (int i1 = 0; i1 < n[0]; ++i1) {
    const double k1 = ws.wavenumber(0, i1);
    const double q1 = ws.fd8_wavenumber(0, i1);
    for (int i2 = 0; i2 < n[1]; ++i2) {
      const double k2 = ws.wavenumber(1, i2);
      const double q2 = ws.fd8_wavenumber(1, i2);
      for (int i3 = 0; i3 < h; ++i3, ++idx) {
        const double k3 = ws.wavenumber(2, i3);
        const double q3 = ws.fd8_wavenumber(2, i3);
        const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
        const double qsq = q1 * q1 + q2 * q2 + q3 * q3;
        const auto [scale, longitudinal] = coeffs(ksq, qsq);
        if (qsq == 0 || longitudinal == 0) {
          if (scale != 1) {
            for (int d = 0; d < 3; ++d) s[d][idx] *= static_cast<real>(scale);
          }
          continue;
        }
        const std::complex<double> g1 = s[0][idx], g2 = s[1][idx], g3 = s[2][idx];
        const std::complex<double> proj = (q1 * g1 + q2 * g2 + q3 * g3) * (longitudinal / qsq);
        s[0][idx] = complex((g1 - q1 * proj) * scale);
        s[1][idx] = complex((g2 - q2 * proj) * scale);
        s[2][idx] = complex((g3 - q3 * proj) * scale);
      }
    }
  }
  for (int d = 0; d < 3; ++d) ws.inverse(d, out[d]);
}

}  // namespace

void RegOperators::apply_K(const VectorField& g, VectorField& out) {
  const double bv = beta_v_;
  const double bw = beta_w_;
  apply_vector_symbol(workspace_, g, out, [&](double ksq, double qsq) {
    const double wb = bw * (1.0 + ksq) * qsq;
    const double c = wb == 0 ? 0.0 : wb / (bv * ksq + wb);
    return std::pair<double, double>{1.0, c};
  });
}

void RegOperators::apply_inv_regularization(const VectorField& v, real shift, VectorField& out) {
  if (!(shift > 0)) throw ValidationError("apply_inv_regularization: shift must be positive");
  const double bv = beta_v_;
  const double bw = beta_w_;
  const double sh = shift;
  apply_vector_symbol(workspace_, v, out, [&](double ksq, double qsq) {
    const double alpha = bv * ksq + sh;
    const double gamma = bw * (1.0 + ksq);
    // (alpha I + gamma q q^T)^{-1} = (I - gamma q q^T / (alpha + gamma |q|^2)) / alpha
    const double c = gamma * qsq / (alpha + gamma * qsq);
    return std::pair<double, double>{1.0 / alpha, c};
  });
}

void RegOperators::apply_divergence_penalty(const VectorField& v, VectorField& out) {
  ScalarField w = fd8_divergence(v);
  ScalarField hw(w.grid());
  apply_helmholtz(w, hw);
  fd8_gradient(hw, out);
  out *= real(-1);
}

double RegOperators::seminorm_A(const VectorField& v) {
  VectorField av(v.grid());
  apply_A(v, av);
  return l2_inner(av, v);
}

double RegOperators::divergence_h1_norm_sq(const VectorField& v) {
  ScalarField w = fd8_divergence(v);
  ScalarField hw(w.grid());
  apply_helmholtz(w, hw);
  return l2_inner(hw, w);
}

VectorField apply_A(const VectorField& v, RegOperators& ops) {
  VectorField out(v.grid());
  ops.apply_A(v, out);
  return out;
}

VectorField apply_inv_shifted_A(const VectorField& v, RegOperators& ops, real shift) {
  VectorField out(v.grid());
  ops.apply_inv_shifted_A(v, shift, out);
  return out;
}

VectorField apply_K(const VectorField& g, RegOperators& ops) {
  VectorField out(g.grid());
  ops.apply_K(g, out);
  return out;
}

}  // namespace svreg
