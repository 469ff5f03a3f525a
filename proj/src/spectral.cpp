#include "svreg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace svreg {

#ifdef SVREG_SINGLE_PRECISION
#define SVREG_FFTW(name) fftwf_##name
using fftw_complex_t = fftwf_complex;
using fftw_plan_t = fftwf_plan;
#else
#define SVREG_FFTW(name) fftw_##name
using fftw_complex_t = fftw_complex;
using fftw_plan_t = fftw_plan;
#endif

struct SpectralWorkspace::Plans {
  real* real_buffer = nullptr;
  std::array<fftw_complex_t*, kSlots> slots{};
  fftw_plan_t r2c = nullptr;
  fftw_plan_t c2r = nullptr;

  ~Plans() {
    if (r2c) SVREG_FFTW(destroy_plan)(r2c);
    if (c2r) SVREG_FFTW(destroy_plan)(c2r);
    for (auto* s : slots) SVREG_FFTW(free)(s);
    SVREG_FFTW(free)(real_buffer);
  }
};

SpectralWorkspace::SpectralWorkspace(const Grid& grid)
    : grid_(grid), plans_(std::make_unique<Plans>()) {
  const auto& n = grid.dims();
  spectrum_size_ = static_cast<std::size_t>(n[0]) * n[1] * (n[2] / 2 + 1);

  plans_->real_buffer = static_cast<real*>(SVREG_FFTW(malloc)(sizeof(real) * grid.size()));
  for (auto& s : plans_->slots) {
    s = static_cast<fftw_complex_t*>(SVREG_FFTW(malloc)(sizeof(fftw_complex_t) * spectrum_size_));
  }
  // FFTW_ESTIMATE keeps plans (and therefore rounding) identical run to run.
  plans_->r2c = SVREG_FFTW(plan_dft_r2c_3d)(n[0], n[1], n[2], plans_->real_buffer,
                                            plans_->slots[0], FFTW_ESTIMATE);
  plans_->c2r = SVREG_FFTW(plan_dft_c2r_3d)(n[0], n[1], n[2], plans_->slots[0],
                                            plans_->real_buffer, FFTW_ESTIMATE);
  if (!plans_->r2c || !plans_->c2r) throw Error("FFT plan creation failed");

  for (int axis = 0; axis < 3; ++axis) {
    const int len = axis == 2 ? n[2] / 2 + 1 : n[axis];
    wavenumbers_[axis].resize(len);
    derivative_wavenumbers_[axis].resize(len);
    fd8_wavenumbers_[axis].resize(len);
    const double h = kTwoPi / n[axis];
    for (int i = 0; i < len; ++i) {
      const int k = i < n[axis] / 2 ? i : i - n[axis];
      wavenumbers_[axis][i] = k;
      derivative_wavenumbers_[axis][i] = (2 * std::abs(k) == n[axis]) ? 0 : static_cast<real>(k);
      const double kh = k * h;
      double mk = (8.0 / 5.0) * std::sin(kh) - (2.0 / 5.0) * std::sin(2 * kh) +
                  (8.0 / 105.0) * std::sin(3 * kh) - (1.0 / 140.0) * std::sin(4 * kh);
      if (2 * std::abs(k) == n[axis]) mk = 0;
      fd8_wavenumbers_[axis][i] = static_cast<real>(mk / h);
    }
  }
}

SpectralWorkspace::~SpectralWorkspace() = default;
SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&&) noexcept = default;
SpectralWorkspace& SpectralWorkspace::operator=(SpectralWorkspace&&) noexcept = default;

void SpectralWorkspace::forward(const ScalarField& field, int slot) {
  require_same_grid(grid_, field.grid(), "FFT forward");
  std::memcpy(plans_->real_buffer, field.data(), sizeof(real) * field.size());
  SVREG_FFTW(execute_dft_r2c)(plans_->r2c, plans_->real_buffer, plans_->slots[slot]);
}

void SpectralWorkspace::inverse(int slot, ScalarField& field) {
  require_same_grid(grid_, field.grid(), "FFT inverse");
  SVREG_FFTW(execute_dft_c2r)(plans_->c2r, plans_->slots[slot], plans_->real_buffer);
  const real scale = static_cast<real>(1.0 / static_cast<double>(grid_.size()));
  real* out = field.data();
  const real* in = plans_->real_buffer;
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = in[i] * scale;
}

std::span<SpectralWorkspace::complex> SpectralWorkspace::spectrum(int slot) {
  // fftw_complex is layout-compatible with std::complex.
  return {reinterpret_cast<complex*>(plans_->slots[slot]), spectrum_size_};
}

}  // namespace svreg
