#include "svreg/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace svreg {

Grid::Grid(Dims dims) : dims_(dims) {
  for (int d = 0; d < 3; ++d) {
    if (dims[d] < 4 || dims[d] % 2 != 0) {
      std::ostringstream msg;
      msg << "invalid grid: dimension " << d + 1 << " is " << dims[d]
          << " (must be even and >= 4)";
      throw InvalidGridError(msg.str());
    }
    spacing_[d] = static_cast<real>(kTwoPi / dims[d]);
  }
}

real Grid::min_spacing() const {
  return std::min({spacing_[0], spacing_[1], spacing_[2]});
}

Grid make_grid(Grid::Dims dims) { return Grid(dims); }

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": grid mismatch (" << a.dim(0) << "x" << a.dim(1) << "x" << a.dim(2)
        << " vs " << b.dim(0) << "x" << b.dim(1) << "x" << b.dim(2) << ")";
    throw ValidationError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(const Grid& grid, real value)
    : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const Grid& grid, std::vector<real> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ValidationError("scalar field: value count does not match grid size");
  }
}

void ScalarField::fill(real value) { std::fill(values_.begin(), values_.end(), value); }

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "scalar field +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_, "scalar field -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(real s) {
  for (auto& x : values_) x *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(real s, ScalarField a) { return a *= s; }

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(const Grid& grid, real value)
    : c_{ScalarField(grid, value), ScalarField(grid, value), ScalarField(grid, value)} {}

VectorField::VectorField(ScalarField c1, ScalarField c2, ScalarField c3)
    : c_{std::move(c1), std::move(c2), std::move(c3)} {
  require_same_grid(c_[0].grid(), c_[1].grid(), "vector field");
  require_same_grid(c_[0].grid(), c_[2].grid(), "vector field");
}

void VectorField::fill(real value) {
  for (auto& c : c_) c.fill(value);
}

VectorField& VectorField::operator+=(const VectorField& other) {
  for (int d = 0; d < 3; ++d) c_[d] += other.c_[d];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  for (int d = 0; d < 3; ++d) c_[d] -= other.c_[d];
  return *this;
}

VectorField& VectorField::operator*=(real s) {
  for (auto& c : c_) c *= s;
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(real s, VectorField a) { return a *= s; }

// ---------------------------------------------------------------------------
// LabelMap

LabelMap::LabelMap(const Grid& grid, std::int32_t value)
    : grid_(grid), labels_(grid.size(), value) {
  if (value < 0) throw ValidationError("label map: labels must be non-negative");
}

LabelMap::LabelMap(const Grid& grid, std::vector<std::int32_t> labels)
    : grid_(grid), labels_(std::move(labels)) {
  if (labels_.size() != grid_.size()) {
    throw ValidationError("label map: label count does not match grid size");
  }
  if (std::any_of(labels_.begin(), labels_.end(), [](std::int32_t l) { return l < 0; })) {
    throw ValidationError("label map: labels must be non-negative");
  }
}

std::vector<std::int32_t> LabelMap::distinct() const {
  std::set<std::int32_t> ids(labels_.begin(), labels_.end());
  return {ids.begin(), ids.end()};
}

std::int64_t LabelMap::count(std::int32_t label) const {
  return std::count(labels_.begin(), labels_.end(), label);
}

ScalarField LabelMap::indicator(std::int32_t label) const {
  ScalarField f(grid_);
  for (std::size_t i = 0; i < labels_.size(); ++i) f[i] = labels_[i] == label ? 1 : 0;
  return f;
}

// ---------------------------------------------------------------------------
// Reductions

double dot(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "dot");
  double s = 0;
  const real* pa = a.data();
  const real* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(pa[i]) * pb[i];
  return s;
}

double dot(const VectorField& a, const VectorField& b) {
  return dot(a[0], b[0]) + dot(a[1], b[1]) + dot(a[2], b[2]);
}

double norm2(const ScalarField& a) { return std::sqrt(dot(a, a)); }
double norm2(const VectorField& a) { return std::sqrt(dot(a, a)); }

double l2_inner(const ScalarField& a, const ScalarField& b) {
  return dot(a, b) * a.grid().cell_volume();
}

double l2_inner(const VectorField& a, const VectorField& b) {
  return dot(a, b) * a.grid().cell_volume();
}

double max_abs(const ScalarField& a) {
  double m = 0;
  for (real x : a.values()) m = std::max(m, std::abs(static_cast<double>(x)));
  return m;
}

double max_abs(const VectorField& a) {
  return std::max({max_abs(a[0]), max_abs(a[1]), max_abs(a[2])});
}

double min_value(const ScalarField& a) {
  return *std::min_element(a.values().begin(), a.values().end());
}

double max_value(const ScalarField& a) {
  return *std::max_element(a.values().begin(), a.values().end());
}

double sum(const ScalarField& a) {
  double s = 0;
  for (real x : a.values()) s += x;
  return s;
}

bool all_finite(const ScalarField& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](real x) { return std::isfinite(x); });
}

bool all_finite(const VectorField& a) {
  return all_finite(a[0]) && all_finite(a[1]) && all_finite(a[2]);
}

void axpy(real alpha, const ScalarField& x, ScalarField& y) {
  require_same_grid(x.grid(), y.grid(), "axpy");
  const real* px = x.data();
  real* py = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) py[i] += alpha * px[i];
}

void axpy(real alpha, const VectorField& x, VectorField& y) {
  for (int d = 0; d < 3; ++d) axpy(alpha, x[d], y[d]);
}

}  // namespace svreg
