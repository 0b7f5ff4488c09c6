#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "ns2d/core.hpp"
#include "ns2d/fft.hpp"
#include "ns2d/rng.hpp"

namespace ns2d {

enum class ForcingKind { Zero, IndicatorStress, HoelderRandomStress, LqStress, SmoothStress };

enum class TimeDependence { Static, Modulated };

/// Description of a synthetic stress tensor with a prescribed regularity
/// class. Everything is deterministic in (spec, grid, t).
struct ForcingSpec {
  ForcingKind kind = ForcingKind::Zero;
  double gamma = 0.0;            // regularity parameter in [0,1)
  double amplitude = 1.0;        // stress scale
  std::uint64_t seed = 0;
  Vec2 disk_center{std::numbers::pi, std::numbers::pi};
  double disk_radius = 1.0;      // IndicatorStress support / LqStress origin
  int cutoff = 8;                // SmoothStress band limit (integer modes)
  double q = 8.0;                // LqStress integrability exponent
  TimeDependence time_dependence = TimeDependence::Static;
  double frequency = 1.0;        // Modulated only

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("ForcingSpec: gamma must lie in [0,1)");
    if (amplitude < 0.0) throw std::invalid_argument("ForcingSpec: amplitude must be >= 0");
    if (kind == ForcingKind::LqStress && !(q > 4.0))
      throw std::invalid_argument("ForcingSpec: LqStress requires q > 4");
    if (kind == ForcingKind::SmoothStress && cutoff < 1)
      throw std::invalid_argument("ForcingSpec: SmoothStress cutoff must be >= 1");
  }

  bool is_static() const { return time_dependence == TimeDependence::Static; }
};

namespace detail {

// Unit shear pattern: off-diagonal ones. Not a gradient, so its divergence
// survives Leray projection and actually drives a flow.
inline Mat2 unit_shear() { return {0.0, 1.0, 1.0, 0.0}; }

/// Random real field from hashed per-mode phases with radial amplitude law
/// amp(|m|), modes 0 < |m| <= maxmode. Phases depend only on (seed, comp,
/// mode), so a finer grid reproduces the same low modes.
template <class AmpFn>
ScalarField synthesize_random(const Grid& g, std::uint64_t seed, std::uint64_t comp, int maxmode,
                              AmpFn amp) {
  SpectralScalar s(g);
  const int n = g.n;
  const double half = 0.5 * n * n;  // coefficient for unit cosine amplitude
  const int top = std::min(maxmode, n / 2 - 1);
  for (int m2 = 1; m2 <= top; ++m2) {
    for (int m1 = -top; m1 <= top; ++m1) {
      const double mm = std::hypot(static_cast<double>(m1), static_cast<double>(m2));
      if (mm > maxmode || mm == 0.0) continue;
      const double a = amp(mm);
      const double ph = mode_phase(seed, comp, m1, m2);
      const int i1 = m1 >= 0 ? m1 : m1 + n;
      s.at(i1, m2) = std::polar(half * a, ph);
    }
  }
  // m2 = 0 row: fill conjugate pairs explicitly to keep the field real
  for (int m1 = 1; m1 <= top; ++m1) {
    const double a = amp(static_cast<double>(m1));
    const double ph = mode_phase(seed, comp, m1, 0);
    s.at(m1, 0) = std::polar(half * a, ph);
    s.at(n - m1, 0) = std::conj(s.at(m1, 0));
  }
  return inverse_fft(s);
}

}  // namespace detail

/// Generate the stress tensor F(., t) for a spec on a grid. Deterministic.
inline TensorField generate_forcing(const ForcingSpec& spec, const Grid& grid, double t) {
  spec.validate();
  TensorField F(grid);
  const int n = grid.n;
  const double L = grid.length;

  switch (spec.kind) {
    case ForcingKind::Zero:
      break;

    case ForcingKind::IndicatorStress: {
      const Mat2 A = detail::unit_shear();
      for (int i1 = 0; i1 < n; ++i1) {
        const double d1 = periodic_delta(grid.coord(i1), spec.disk_center.x, L);
        for (int i2 = 0; i2 < n; ++i2) {
          const double d2 = periodic_delta(grid.coord(i2), spec.disk_center.y, L);
          if (d1 * d1 + d2 * d2 < spec.disk_radius * spec.disk_radius)
            F.set(i1, i2, A * spec.amplitude);
        }
      }
      break;
    }

    case ForcingKind::HoelderRandomStress: {
      const double expo = 1.0 + spec.gamma;
      for (int c = 0; c < 4; ++c) {
        F.comp[c] = detail::synthesize_random(grid, spec.seed, static_cast<std::uint64_t>(c),
                                              n / 3, [expo](double m) { return std::pow(m, -expo); });
        for (double& v : F.comp[c].values) v *= spec.amplitude;
      }
      break;
    }

    case ForcingKind::LqStress: {
      // Radial power-law singularity with exponent 2/q: the borderline
      // L^q profile, truncated at one grid cell.
      const double alpha = 2.0 / spec.q;
      const double rmin = grid.spacing();
      const Mat2 A = detail::unit_shear();
      for (int i1 = 0; i1 < n; ++i1) {
        const double d1 = periodic_delta(grid.coord(i1), spec.disk_center.x, L);
        for (int i2 = 0; i2 < n; ++i2) {
          const double d2 = periodic_delta(grid.coord(i2), spec.disk_center.y, L);
          const double r = std::max(std::sqrt(d1 * d1 + d2 * d2), rmin);
          F.set(i1, i2, A * (spec.amplitude * std::pow(r, -alpha)));
        }
      }
      break;
    }

    case ForcingKind::SmoothStress: {
      for (int c = 0; c < 4; ++c) {
        F.comp[c] = detail::synthesize_random(grid, spec.seed, 100 + static_cast<std::uint64_t>(c),
                                              spec.cutoff, [](double m) { return 1.0 / (m * m); });
        for (double& v : F.comp[c].values) v *= spec.amplitude;
      }
      break;
    }
  }

  if (spec.time_dependence == TimeDependence::Modulated) {
    const double env = std::cos(spec.frequency * t);
    for (auto& c : F.comp)
      for (double& v : c.values) v *= env;
  }
  return F;
}

}  // namespace ns2d
