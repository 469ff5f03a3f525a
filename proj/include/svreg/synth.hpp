#pragma once

// Synthetic benchmark: template images made of spherical-harmonic shapes with
// ten discrete labels, a multi-frequency analytic velocity, and references
// obtained by transporting the template.
//
// Image coordinates are centred, x_c = i * h - pi, so the box is [-pi, pi).

#include <cstdint>
#include <filesystem>
#include <optional>

#include "svreg/transport.hpp"

namespace svreg {

/// Associated Legendre function with the Condon-Shortley phase.
/// Throws ValidationError unless 0 <= m <= l and |x| <= 1.
double assoc_legendre(int l, int m, double x);

/// |Y_l^m(theta, phi)| = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) |P_l^m(cos phi)|;
/// theta (azimuth) only enters through a unit-modulus phase.
double spherical_harmonic_magnitude(int l, int m, double theta, double phi);

struct SynthSpec {
  Grid grid{{64, 64, 64}};
  int num_shapes = 10;
  int degree = 8;  // l
  int order = 6;   // m
  int frequency = 4;  // K of the velocity
  /// Multiplies the velocity; 1 is the stated field.
  double amplitude = 1;
  std::uint64_t seed = 0;
  /// Replaces the harmonic by a ball of this radius (test hook).
  std::optional<double> constant_radius;

  void validate() const;
};

struct Shape {
  std::array<double, 3> center{};  // centred coordinates
  double theta_offset = 0;
  double phi_offset = 0;
};

/// Shape parameters from a seeded mt19937_64; identical across platforms.
std::vector<Shape> draw_shapes(const SynthSpec& spec);

struct SynthTemplate {
  ScalarField image;
  LabelMap labels;
};

/// Shape i (1-based) covers voxels within |Y_l^m| of its centre, with angles
/// measured about the centre and shifted by the shape's offsets. Overlaps go
/// to the largest index; intensity equals the label id.
SynthTemplate make_template(const SynthSpec& spec);

/// v_1 = sum_k k^-1/2 cos(k x2) cos(k x1)
/// v_2 = sum_k k^-1/2 sin(k x3) sin(k x2)
/// v_3 = sum_k k^-1/2 cos(k x1) cos(k x3),  k = 1..K, centred coordinates.
VectorField make_velocity(int frequency, const Grid& grid, double amplitude = 1);
std::array<double, 3> syn_velocity_at(int frequency, double x1, double x2, double x3);

struct SynthReference {
  ScalarField image;
  LabelMap labels;
};

SynthReference make_reference(const ScalarField& m0, const LabelMap& labels, const VectorField& v,
                              const TransportConfig& cfg);

void write_manifest(const std::filesystem::path& path, const SynthSpec& spec,
                    const TransportConfig& cfg);

/// Affine map of both images onto [0, 1] using their joint range. A constant
/// pair is left unchanged.
void normalize_jointly(ScalarField& a, ScalarField& b);

}  // namespace svreg
