#include "svreg/resample.hpp"

#include <sstream>

#include "svreg/spectral.hpp"

namespace svreg {
namespace {

Grid coarse_grid(const Grid& fine, int factor) {
  if (factor < 1) throw ResampleError("restrict: factor must be positive");
  Grid::Dims dims{};
  for (int d = 0; d < 3; ++d) {
    if (fine.dim(d) % factor != 0) {
      std::ostringstream msg;
      msg << "restrict: factor " << factor << " does not divide dimension " << fine.dim(d);
      throw ResampleError(msg.str());
    }
    dims[d] = fine.dim(d) / factor;
  }
  try {
    return Grid(dims);
  } catch (const InvalidGridError& e) {
    throw ResampleError(std::string("restrict: coarse grid is invalid: ") + e.what());
  }
}

template <class Out, class In>
void pick_samples(const In& in, Out& out, int factor) {
  const auto& n = out.grid().dims();
  std::size_t idx = 0;
  for (int i = 0; i < n[0]; ++i) {
    for (int j = 0; j < n[1]; ++j) {
      for (int k = 0; k < n[2]; ++k) {
        out[idx++] = in[in.grid().index(factor * i, factor * j, factor * k)];
      }
    }
  }
}

// Target spectral indices (and weights) receiving source index i on one axis.
struct AxisTargets {
  int count = 1;
  int index[2] = {0, 0};
  real weight = 1;
};

AxisTargets full_axis_targets(int k, int n_src, int n_dst) {
  AxisTargets t;
  if (2 * k == -n_src && n_dst > n_src) {
    t.count = 2;
    t.index[0] = n_src / 2;
    t.index[1] = n_dst - n_src / 2;
    t.weight = real(0.5);
  } else {
    t.index[0] = k >= 0 ? k : n_dst + k;
  }
  return t;
}

}  // namespace

ScalarField restrict_nearest(const ScalarField& field, int factor) {
  ScalarField out(coarse_grid(field.grid(), factor));
  pick_samples(field, out, factor);
  return out;
}

LabelMap restrict_nearest(const LabelMap& labels, int factor) {
  LabelMap out(coarse_grid(labels.grid(), factor));
  pick_samples(labels, out, factor);
  return out;
}

namespace {

void prolong_into(const ScalarField& field, SpectralWorkspace& src, SpectralWorkspace& dst,
                  ScalarField& out) {
  const Grid& g = field.grid();
  const Grid& t = out.grid();
  src.forward(field, 0);
  auto in = src.spectrum(0);
  auto res = dst.spectrum(0);
  std::fill(res.begin(), res.end(), SpectralWorkspace::complex(0));

  const int h_src = src.half_dim();
  const int h_dst = dst.half_dim();
  const real scale = static_cast<real>(static_cast<double>(t.size()) / static_cast<double>(g.size()));

  for (int i1 = 0; i1 < g.dim(0); ++i1) {
    const AxisTargets a1 = full_axis_targets(src.wavenumber(0, i1), g.dim(0), t.dim(0));
    for (int i2 = 0; i2 < g.dim(1); ++i2) {
      const AxisTargets a2 = full_axis_targets(src.wavenumber(1, i2), g.dim(1), t.dim(1));
      for (int i3 = 0; i3 < h_src; ++i3) {
        // Only k3 >= 0 is stored; the -N3/2 partner is implied by Hermitian symmetry.
        const bool split3 = (2 * i3 == g.dim(2)) && t.dim(2) > g.dim(2);
        const real w3 = split3 ? real(0.5) : real(1);
        const auto c = in[(static_cast<std::size_t>(i1) * g.dim(1) + i2) * h_src + i3] * scale * w3;
        for (int p = 0; p < a1.count; ++p) {
          for (int q = 0; q < a2.count; ++q) {
            const std::size_t o =
                (static_cast<std::size_t>(a1.index[p]) * t.dim(1) + a2.index[q]) * h_dst + i3;
            res[o] += c * a1.weight * a2.weight;
          }
        }
      }
    }
  }
  dst.inverse(0, out);
}

void check_target(const Grid& src, const Grid& target) {
  for (int d = 0; d < 3; ++d) {
    if (target.dim(d) < src.dim(d)) {
      throw ResampleError("prolong: target grid is smaller than the source grid");
    }
  }
}

}  // namespace

ScalarField prolong_spectral(const ScalarField& field, const Grid& target) {
  check_target(field.grid(), target);
  SpectralWorkspace src(field.grid());
  SpectralWorkspace dst(target);
  ScalarField out(target);
  prolong_into(field, src, dst, out);
  return out;
}

VectorField prolong_spectral(const VectorField& field, const Grid& target) {
  check_target(field.grid(), target);
  SpectralWorkspace src(field.grid());
  SpectralWorkspace dst(target);
  VectorField out(target);
  for (int d = 0; d < 3; ++d) prolong_into(field[d], src, dst, out[d]);
  return out;
}

}  // namespace svreg
