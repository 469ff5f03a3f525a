#pragma once

// Periodic grids over [0, 2*pi)^3 and the scalar, vector and label fields that
// live on them. Storage is row-major with x1 the outermost (slowest) axis:
//
//   index(i1, i2, i3) = (i1 * N2 + i2) * N3 + i3
//
// Grid points sit at x_d = i_d * h_d with h_d = 2*pi / N_d.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "svreg/common.hpp"

namespace svreg {

class Grid {
 public:
  using Dims = std::array<int, 3>;

  /// Throws InvalidGridError unless every N_d is even and >= 4.
  explicit Grid(Dims dims);

  const Dims& dims() const { return dims_; }
  int dim(int axis) const { return dims_[axis]; }
  real spacing(int axis) const { return spacing_[axis]; }
  const std::array<real, 3>& spacing() const { return spacing_; }
  real min_spacing() const;
  /// h1 * h2 * h3, the quadrature weight of one voxel.
  real cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  std::size_t index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i1) * dims_[1] + i2) * dims_[2] + i3;
  }
  /// Coordinate of lattice index i along an axis, in radians.
  real coordinate(int axis, int i) const { return static_cast<real>(i) * spacing_[axis]; }

  bool operator==(const Grid& other) const { return dims_ == other.dims_; }
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  Dims dims_;
  std::array<real, 3> spacing_;
};

Grid make_grid(Grid::Dims dims);

class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, real value = 0);
  ScalarField(const Grid& grid, std::vector<real> values);

  /// Samples fn(x1, x2, x3) at every lattice point.
  template <class Fn>
  static ScalarField from_function(const Grid& grid, Fn&& fn) {
    ScalarField f(grid);
    const auto& n = grid.dims();
    std::size_t idx = 0;
    for (int i = 0; i < n[0]; ++i) {
      const real x1 = grid.coordinate(0, i);
      for (int j = 0; j < n[1]; ++j) {
        const real x2 = grid.coordinate(1, j);
        for (int k = 0; k < n[2]; ++k) {
          f.values_[idx++] = static_cast<real>(fn(x1, x2, grid.coordinate(2, k)));
        }
      }
    }
    return f;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  real* data() { return values_.data(); }
  const real* data() const { return values_.data(); }
  std::span<real> values() { return values_; }
  std::span<const real> values() const { return values_; }

  real& operator[](std::size_t i) { return values_[i]; }
  real operator[](std::size_t i) const { return values_[i]; }
  real& at(int i1, int i2, int i3) { return values_[grid_.index(i1, i2, i3)]; }
  real at(int i1, int i2, int i3) const { return values_[grid_.index(i1, i2, i3)]; }

  void fill(real value);

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(real s);

 private:
  Grid grid_;
  std::vector<real> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(real s, ScalarField a);

class VectorField {
 public:
  explicit VectorField(const Grid& grid, real value = 0);
  VectorField(ScalarField c1, ScalarField c2, ScalarField c3);

  template <class Fn>
  static VectorField from_function(const Grid& grid, Fn&& fn) {
    VectorField v(grid);
    const auto& n = grid.dims();
    std::size_t idx = 0;
    for (int i = 0; i < n[0]; ++i) {
      for (int j = 0; j < n[1]; ++j) {
        for (int k = 0; k < n[2]; ++k, ++idx) {
          const auto val = fn(grid.coordinate(0, i), grid.coordinate(1, j),
                              grid.coordinate(2, k));
          for (int d = 0; d < 3; ++d) v.c_[d][idx] = static_cast<real>(val[d]);
        }
      }
    }
    return v;
  }

  const Grid& grid() const { return c_[0].grid(); }
  std::size_t size() const { return c_[0].size(); }

  ScalarField& operator[](int d) { return c_[d]; }
  const ScalarField& operator[](int d) const { return c_[d]; }

  void fill(real value);

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(real s);

 private:
  std::array<ScalarField, 3> c_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(real s, VectorField a);

/// Integer segmentation aligned with a grid. Label 0 is background.
class LabelMap {
 public:
  explicit LabelMap(const Grid& grid, std::int32_t value = 0);
  LabelMap(const Grid& grid, std::vector<std::int32_t> labels);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return labels_.size(); }
  std::span<std::int32_t> labels() { return labels_; }
  std::span<const std::int32_t> labels() const { return labels_; }
  std::int32_t& operator[](std::size_t i) { return labels_[i]; }
  std::int32_t operator[](std::size_t i) const { return labels_[i]; }

  /// Sorted distinct ids, including 0 when present.
  std::vector<std::int32_t> distinct() const;
  std::int64_t count(std::int32_t label) const;
  /// 1 where the label matches, 0 elsewhere.
  ScalarField indicator(std::int32_t label) const;

 private:
  Grid grid_;
  std::vector<std::int32_t> labels_;
};

// Reductions. Sums accumulate in double regardless of the storage type.
double dot(const ScalarField& a, const ScalarField& b);
double dot(const VectorField& a, const VectorField& b);
double norm2(const ScalarField& a);
double norm2(const VectorField& a);
/// Quadrature inner product: dot weighted by the voxel volume.
double l2_inner(const ScalarField& a, const ScalarField& b);
double l2_inner(const VectorField& a, const VectorField& b);
double max_abs(const ScalarField& a);
double max_abs(const VectorField& a);
double min_value(const ScalarField& a);
double max_value(const ScalarField& a);
double sum(const ScalarField& a);

bool all_finite(const ScalarField& a);
bool all_finite(const VectorField& a);

/// y += alpha * x
void axpy(real alpha, const ScalarField& x, ScalarField& y);
void axpy(real alpha, const VectorField& x, VectorField& y);

/// Throws ValidationError when the grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace svreg
