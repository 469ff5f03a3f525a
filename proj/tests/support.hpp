#pragma once

// Shared fixtures: seeded smooth random fields, an FD-8 curl, error norms.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "svreg/diffops.hpp"
#include "svreg/field.hpp"

namespace svreg::test {

// Sum of a few low-frequency Fourier modes with normal coefficients.
inline ScalarField smooth_scalar(const Grid& g, std::uint64_t seed, int kmax = 2,
                                 double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> phase(0, kTwoPi);
  struct Mode {
    int k1, k2, k3;
    double a, p;
  };
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int k3 = -kmax; k3 <= kmax; ++k3) {
        const double decay = 1.0 / (1 + k1 * k1 + k2 * k2 + k3 * k3);
        modes.push_back({k1, k2, k3, n01(rng) * decay, phase(rng)});
      }
  return ScalarField::from_function(g, [&](double x1, double x2, double x3) {
    double s = 0;
    for (const auto& m : modes) s += m.a * std::cos(m.k1 * x1 + m.k2 * x2 + m.k3 * x3 + m.p);
    return scale * s;
  });
}

inline VectorField smooth_vector(const Grid& g, std::uint64_t seed, int kmax = 2,
                                 double scale = 1.0) {
  return VectorField(smooth_scalar(g, seed, kmax, scale), smooth_scalar(g, seed + 101, kmax, scale),
                     smooth_scalar(g, seed + 202, kmax, scale));
}

// curl with FD-8 derivatives; its FD-8 divergence vanishes to rounding.
inline VectorField fd8_curl(const VectorField& psi) {
  const Grid& g = psi.grid();
  auto d = [&](int comp, int axis) {
    ScalarField out(g);
    fd8_derivative(psi[comp], axis, out);
    return out;
  };
  return VectorField(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
}

inline double rel_l2(const ScalarField& a, const ScalarField& b) {
  return norm2(a - b) / norm2(b);
}
inline double rel_l2(const VectorField& a, const VectorField& b) {
  return norm2(a - b) / norm2(b);
}
inline double linf(const ScalarField& a, const ScalarField& b) { return max_abs(a - b); }
inline double linf(const VectorField& a, const VectorField& b) { return max_abs(a - b); }

// Smooth periodic bump centred at c (radians).
inline ScalarField blob(const Grid& g, std::array<double, 3> c, double width = 0.6) {
  return ScalarField::from_function(g, [&](double x1, double x2, double x3) {
    const double r = (1 - std::cos(x1 - c[0])) + (1 - std::cos(x2 - c[1])) + (1 - std::cos(x3 - c[2]));
    return std::exp(-r / (width * width));
  });
}

}  // namespace svreg::test
