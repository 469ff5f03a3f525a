#include "svreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace svreg {

double assoc_legendre(int l, int m, double x) {
  if (m < 0 || l < m) throw ValidationError("assoc_legendre: need 0 <= m <= l");
  if (!(std::abs(x) <= 1)) throw ValidationError("assoc_legendre: |x| > 1");
  // P_m^m = (-1)^m (2m-1)!! (1-x^2)^(m/2)
  double pmm = 1;
  const double s = std::sqrt((1 - x) * (1 + x));
  for (int i = 1; i <= m; ++i) pmm *= -(2 * i - 1) * s;
  if (l == m) return pmm;
  double pm1 = x * (2 * m + 1) * pmm;
  if (l == m + 1) return pm1;
  double p = 0;
  for (int ll = m + 2; ll <= l; ++ll) {
    p = ((2 * ll - 1) * x * pm1 - (ll + m - 1) * pmm) / (ll - m);
    pmm = pm1;
    pm1 = p;
  }
  return p;
}

double spherical_harmonic_magnitude(int l, int m, double /*theta*/, double phi) {
  // (l-m)!/(l+m)! as a product to stay exact for moderate l
  double ratio = 1;
  for (int i = l - m + 1; i <= l + m; ++i) ratio /= i;
  const double norm = std::sqrt((2 * l + 1) / (4 * kPi) * ratio);
  double c = std::cos(phi);
  c = std::clamp(c, -1.0, 1.0);
  return norm * std::abs(assoc_legendre(l, m, c));
}

void SynthSpec::validate() const {
  if (num_shapes < 1) throw ValidationError("num_shapes must be positive");
  if (order < 0 || degree < order) throw ValidationError("need 0 <= m <= l");
  if (frequency < 1) throw ValidationError("velocity frequency K must be at least 1");
  if (!std::isfinite(amplitude)) throw ValidationError("velocity amplitude must be finite");
  if (constant_radius && !(*constant_radius > 0)) {
    throw ValidationError("constant radius must be positive");
  }
}

std::vector<Shape> draw_shapes(const SynthSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  // 53-bit uniform in [0, 1); std::uniform_real_distribution is not portable.
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Shape> shapes(spec.num_shapes);
  for (auto& s : shapes) {
    for (auto& c : s.center) c = -0.4 * kPi + 0.8 * kPi * uniform();
    s.theta_offset = static_cast<double>(rng() >> 62) * (kPi / 2);
    s.phi_offset = static_cast<double>(rng() >> 62) * (kPi / 2);
  }
  return shapes;
}

SynthTemplate make_template(const SynthSpec& spec) {
  spec.validate();
  const Grid& g = spec.grid;
  const auto shapes = draw_shapes(spec);
  // |Y| is bounded by its normalization times max |P|; a generous box suffices.
  double r_max = 0;
  if (spec.constant_radius) {
    r_max = *spec.constant_radius;
  } else {
    for (int q = 0; q <= 2000; ++q) {
      r_max = std::max(r_max, spherical_harmonic_magnitude(spec.degree, spec.order, 0,
                                                           kPi * q / 2000.0));
    }
    r_max *= 1.05;
  }

  LabelMap labels(g, 0);
  for (int s = 0; s < spec.num_shapes; ++s) {
    const Shape& sh = shapes[s];
    const std::int32_t id = s + 1;
    std::array<int, 3> lo{}, hi{};
    for (int d = 0; d < 3; ++d) {
      const double h = g.spacing(d);
      lo[d] = static_cast<int>(std::floor((sh.center[d] - r_max + kPi) / h)) - 1;
      hi[d] = static_cast<int>(std::ceil((sh.center[d] + r_max + kPi) / h)) + 1;
    }
    for (int i = lo[0]; i <= hi[0]; ++i) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int k = lo[2]; k <= hi[2]; ++k) {
          // Unwrapped offsets; the periodic image of the voxel is stored.
          const double d1 = i * g.spacing(0) - kPi - sh.center[0];
          const double d2 = j * g.spacing(1) - kPi - sh.center[1];
          const double d3 = k * g.spacing(2) - kPi - sh.center[2];
          const double r = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3);
          double radius;
          if (spec.constant_radius) {
            radius = *spec.constant_radius;
          } else {
            const double phi = r > 0 ? std::acos(std::clamp(d3 / r, -1.0, 1.0)) : 0.0;
            const double theta = std::atan2(d2, d1);
            radius = spherical_harmonic_magnitude(spec.degree, spec.order,
                                                  theta + sh.theta_offset, phi + sh.phi_offset);
          }
          if (r <= radius) {
            const auto wrap = [](int a, int n) { return ((a % n) + n) % n; };
            const std::size_t idx =
                g.index(wrap(i, g.dim(0)), wrap(j, g.dim(1)), wrap(k, g.dim(2)));
            labels[idx] = std::max(labels[idx], id);
          }
        }
      }
    }
  }
  ScalarField image(g);
  for (std::size_t i = 0; i < g.size(); ++i) image[i] = static_cast<real>(labels[i]);
  return {std::move(image), std::move(labels)};
}

std::array<double, 3> syn_velocity_at(int frequency, double x1, double x2, double x3) {
  std::array<double, 3> v{0, 0, 0};
  for (int k = 1; k <= frequency; ++k) {
    const double a = 1 / std::sqrt(static_cast<double>(k));
    v[0] += a * std::cos(k * x2) * std::cos(k * x1);
    v[1] += a * std::sin(k * x3) * std::sin(k * x2);
    v[2] += a * std::cos(k * x1) * std::cos(k * x3);
  }
  return v;
}

VectorField make_velocity(int frequency, const Grid& grid, double amplitude) {
  if (frequency < 1) throw ValidationError("velocity frequency K must be at least 1");
  if (!std::isfinite(amplitude)) throw ValidationError("velocity amplitude must be finite");
  return VectorField::from_function(grid, [&](double x1, double x2, double x3) {
    auto v = syn_velocity_at(frequency, x1 - kPi, x2 - kPi, x3 - kPi);
    for (double& c : v) c *= amplitude;
    return v;
  });
}

SynthReference make_reference(const ScalarField& m0, const LabelMap& labels, const VectorField& v,
                              const TransportConfig& cfg) {
  require_same_grid(m0.grid(), labels.grid(), "make_reference");
  require_same_grid(m0.grid(), v.grid(), "make_reference");
  const TransportPlan plan = make_transport_plan(v, cfg, false);
  return {solve_state(m0, plan), transport_labels(labels, plan)};
}

void write_manifest(const std::filesystem::path& path, const SynthSpec& spec,
                    const TransportConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto& d = spec.grid.dims();
  out << "dims\t" << d[0] << ' ' << d[1] << ' ' << d[2] << '\n'
      << "seed\t" << spec.seed << '\n'
      << "K\t" << spec.frequency << '\n'
      << "amplitude\t" << spec.amplitude << '\n'
      << "shapes\t" << spec.num_shapes << '\n'
      << "harmonic_l\t" << spec.degree << '\n'
      << "harmonic_m\t" << spec.order << '\n'
      << "rng\tmt19937_64\n"
      << "n_t\t" << cfg.n_t << '\n'
      << "interp\t" << to_string(cfg.interp) << '\n';
}

void normalize_jointly(ScalarField& a, ScalarField& b) {
  const double lo = std::min(min_value(a), min_value(b));
  const double hi = std::max(max_value(a), max_value(b));
  if (!(hi > lo)) return;
  const double s = 1 / (hi - lo);
  for (auto* f : {&a, &b}) {
    for (auto& x : f->values()) x = static_cast<real>((x - lo) * s);
  }
}

}  // namespace svreg
