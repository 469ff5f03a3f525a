#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "svreg/field.hpp"

namespace svreg {

/// FFT plans, scratch buffers and wavenumber tables for one grid.
///
/// Uses real-to-complex transforms, so a spectrum holds N1 x N2 x (N3/2 + 1)
/// coefficients. Three spectrum slots are kept so vector-valued operators can
/// couple components mode by mode.
///
/// Not safe for concurrent use: each worker needs its own workspace.
class SpectralWorkspace {
 public:
  using complex = std::complex<real>;
  static constexpr int kSlots = 3;

  explicit SpectralWorkspace(const Grid& grid);
  ~SpectralWorkspace();
  SpectralWorkspace(SpectralWorkspace&&) noexcept;
  SpectralWorkspace& operator=(SpectralWorkspace&&) noexcept;
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const Grid& grid() const { return grid_; }
  /// Number of complex coefficients in one slot.
  std::size_t spectrum_size() const { return spectrum_size_; }
  /// Length of the last (halved) spectral axis, N3/2 + 1.
  int half_dim() const { return grid_.dim(2) / 2 + 1; }

  /// Unnormalized forward transform of `field` into `slot`.
  void forward(const ScalarField& field, int slot);
  /// Inverse transform of `slot` into `field`, divided by N. Destroys the slot.
  void inverse(int slot, ScalarField& field);

  std::span<complex> spectrum(int slot);

  /// Signed integer wavenumber in [-N/2, N/2) for spectral index i on `axis`.
  int wavenumber(int axis, int i) const { return wavenumbers_[axis][i]; }
  /// Wavenumber with the Nyquist entry zeroed, used by first-derivative factors.
  real first_derivative_wavenumber(int axis, int i) const {
    return derivative_wavenumbers_[axis][i];
  }
  /// Symbol of the FD-8 first derivative divided by i (zero at Nyquist).
  real fd8_wavenumber(int axis, int i) const { return fd8_wavenumbers_[axis][i]; }

 private:
  struct Plans;

  Grid grid_;
  std::size_t spectrum_size_ = 0;
  std::unique_ptr<Plans> plans_;
  std::array<std::vector<int>, 3> wavenumbers_;
  std::array<std::vector<real>, 3> derivative_wavenumbers_;
  std::array<std::vector<real>, 3> fd8_wavenumbers_;
};

}  // namespace svreg
