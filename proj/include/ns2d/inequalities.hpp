#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ns2d/campanato.hpp"
#include "ns2d/forcing.hpp"
#include "ns2d/solver.hpp"
#include "ns2d/spectral.hpp"

namespace ns2d {

// ---------------------------------------------------------------------------
// Test-function library
// ---------------------------------------------------------------------------

enum class TestFunctionKind {
  Gaussian,
  Bump,
  BandLimitedRandom,
  HarmonicPoly,
  CaloricPoly,
  LacunarySeries
};

struct TestFunctionSpec {
  TestFunctionKind kind = TestFunctionKind::Gaussian;
  Grid grid{256, 8.0 * std::numbers::pi};
  double width = 1.0;           // Gaussian
  double support_radius = 3.0;  // Bump (plateau with smooth shoulder)
  std::uint64_t seed = 0;       // BandLimitedRandom / LacunarySeries
  int cutoff = 16;              // BandLimitedRandom band limit
  int degree = 1;               // HarmonicPoly: Re (x1 + i x2)^degree
  int caloric_id = 0;           // CaloricPoly library entry
  double gamma = 0.5;           // LacunarySeries Hoelder exponent
  int terms = 8;                // LacunarySeries terms
};

/// Lacunary Weierstrass-type series in x1 with Hoelder exponent gamma:
/// sum_j 2^{-gamma j} cos(2^j x1 + phase_j).
inline ScalarField lacunary_series(const Grid& g, double gamma, int terms, std::uint64_t seed) {
  ScalarField f(g);
  HashRng rng{seed, 1};
  std::vector<double> phase(terms);
  for (int j = 0; j < terms; ++j) phase[j] = rng.next_angle();
  for (int i1 = 0; i1 < g.n; ++i1) {
    double acc = 0.0;
    const double x = g.coord(i1);
    for (int j = 1; j <= terms; ++j)
      acc += std::pow(2.0, -gamma * j) * std::cos(std::pow(2.0, j) * x + phase[j - 1]);
    for (int i2 = 0; i2 < g.n; ++i2) f.at(i1, i2) = acc;
  }
  return f;
}

inline ScalarField realize_test_function(const TestFunctionSpec& spec) {
  const Grid& g = spec.grid;
  ScalarField f(g);
  const double cx = 0.5 * g.length, cy = 0.5 * g.length;
  switch (spec.kind) {
    case TestFunctionKind::Gaussian: {
      const double inv2w2 = 1.0 / (2.0 * spec.width * spec.width);
      for (int i1 = 0; i1 < g.n; ++i1) {
        const double dx = g.coord(i1) - cx;
        for (int i2 = 0; i2 < g.n; ++i2) {
          const double dy = g.coord(i2) - cy;
          f.at(i1, i2) = std::exp(-(dx * dx + dy * dy) * inv2w2);
        }
      }
      break;
    }
    case TestFunctionKind::Bump: {
      // plateau of height 1 with a C^inf shoulder on [0.6 a, a]
      const double a = spec.support_radius;
      auto edge = [](double s) {  // smooth step, 1 at s<=0, 0 at s>=1
        if (s <= 0.0) return 1.0;
        if (s >= 1.0) return 0.0;
        const double fa = std::exp(-1.0 / (1.0 - s));
        const double fb = std::exp(-1.0 / s);
        return fa / (fa + fb);
      };
      for (int i1 = 0; i1 < g.n; ++i1) {
        const double dx = g.coord(i1) - cx;
        for (int i2 = 0; i2 < g.n; ++i2) {
          const double dy = g.coord(i2) - cy;
          const double r = std::sqrt(dx * dx + dy * dy);
          f.at(i1, i2) = edge((r - 0.6 * a) / (0.4 * a));
        }
      }
      break;
    }
    case TestFunctionKind::BandLimitedRandom:
      f = detail::synthesize_random(g, spec.seed, 300, spec.cutoff,
                                    [](double m) { return 1.0 / m; });
      break;
    case TestFunctionKind::HarmonicPoly: {
      for (int i1 = 0; i1 < g.n; ++i1) {
        const double dx = g.coord(i1) - cx;
        for (int i2 = 0; i2 < g.n; ++i2) {
          const double dy = g.coord(i2) - cy;
          f.at(i1, i2) = std::pow(std::complex<double>(dx, dy), spec.degree).real();
        }
      }
      break;
    }
    case TestFunctionKind::CaloricPoly:
      throw std::invalid_argument("caloric entries are space-time; use caloric_library()");
    case TestFunctionKind::LacunarySeries:
      f = lacunary_series(g, spec.gamma, spec.terms, spec.seed);
      break;
  }
  return f;
}

/// Fraction of the squared mass (field plus gradient) in the outer 1/16
/// band of the fundamental cell. Compact-support inequalities require this
/// to be <= 1e-10.
inline double boundary_tail_mass(const ScalarField& f) {
  const Grid& g = f.grid;
  VectorField grad = gradient(f);
  const double band = g.length / 16.0;
  double tail = 0.0, total = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1) {
    const double x = g.coord(i1);
    for (int i2 = 0; i2 < g.n; ++i2) {
      const double y = g.coord(i2);
      const double v = f.at(i1, i2);
      const double gsq = grad.at(i1, i2).norm_sq();
      const double m = v * v + gsq;
      total += m;
      const bool outer = x < band || x > g.length - band || y < band || y > g.length - band;
      if (outer) tail += m;
    }
  }
  return total > 0.0 ? tail / total : 0.0;
}

// ---------------------------------------------------------------------------
// Inequality records
// ---------------------------------------------------------------------------

struct InequalityRecord {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs; 0 when rhs = 0 and lhs = 0
  double parameter = 0.0;
  bool pass = true;

  static InequalityRecord make(std::string id, double lhs, double rhs, double parameter) {
    InequalityRecord rec;
    rec.id = std::move(id);
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.parameter = parameter;
    rec.ratio = rhs > 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rec.pass = rec.ratio <= 1.0 + 1e-8;
    return rec;
  }
};

constexpr double kTailGuard = 1e-10;

namespace detail {

inline void require_tail(const ScalarField& f, const char* what) {
  const double tail = boundary_tail_mass(f);
  if (tail > kTailGuard)
    throw std::invalid_argument(std::string(what) +
                                ": field is not effectively compactly supported (tail mass " +
                                std::to_string(tail) + ")");
}

inline double grad_l2(const ScalarField& f) {
  SpectralScalar s = forward_fft(f);
  double acc = 0.0;
  const Grid& g = f.grid;
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 <= g.n / 2; ++i2)
      acc += s.weight(i2) * mode_ksq(g, i1, i2) * std::norm(s.at(i1, i2));
  const double n = g.n;
  return std::sqrt(acc * g.length * g.length / (n * n * n * n));
}

}  // namespace detail

/// ||u||_{2r}^2 <= (r/sqrt(2)) ||u||_r ||grad u||_2 for r >= 2.
inline InequalityRecord verify_ladyzhenskaya(const ScalarField& u, double r,
                                             bool check_tail = true, std::string id = "ladyzhenskaya") {
  if (!(r >= 2.0)) throw std::invalid_argument("verify_ladyzhenskaya: r must be >= 2");
  if (check_tail) detail::require_tail(u, "verify_ladyzhenskaya");
  const double lhs = std::pow(lp_norm_p(u, 2.0 * r), 1.0 / r);
  const double rhs =
      (r / std::sqrt(2.0)) * std::pow(lp_norm_p(u, r), 1.0 / r) * detail::grad_l2(u);
  return InequalityRecord::make(std::move(id), lhs, rhs, r);
}

/// The r=4 case ||u||_8^2 <= 2 sqrt(2) ||u||_4 ||grad u||_2, on vector fields.
inline InequalityRecord verify_ladyzhenskaya_8_4(const VectorField& u, std::string id = "l8_4") {
  const double lhs = std::pow(lp_norm_p(u, 8.0), 2.0 / 8.0);
  double grad_sq = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double gc = detail::grad_l2(u.comp[c]);
    grad_sq += gc * gc;
  }
  const double rhs =
      2.0 * std::sqrt(2.0) * std::pow(lp_norm_p(u, 4.0), 0.25) * std::sqrt(grad_sq);
  return InequalityRecord::make(std::move(id), lhs, rhs, 4.0);
}

/// int |u|^{2(r-1)} <= (int |u|^{2r})^{(r-2)/r} (int |u|^r)^{2/r}.
inline InequalityRecord verify_interpolation(const ScalarField& u, double r,
                                             std::string id = "interpolation") {
  if (!(r >= 2.0)) throw std::invalid_argument("verify_interpolation: r must be >= 2");
  const double lhs = lp_norm_p(u, 2.0 * (r - 1.0));
  const double rhs = std::pow(lp_norm_p(u, 2.0 * r), (r - 2.0) / r) *
                     std::pow(lp_norm_p(u, r), 2.0 / r);
  return InequalityRecord::make(std::move(id), lhs, rhs, r);
}

// ---------------------------------------------------------------------------
// Caloric and harmonic decay
// ---------------------------------------------------------------------------

struct CaloricEntry {
  std::string name;
  std::function<double(double, double, double)> fn;  // (x1, x2, t), centered coords
};

/// Closed-form solutions of the heat equation, in coordinates centered at
/// the cylinder. The translated kernel keeps its singularity at parabolic
/// distance >= 2R below the cylinder window.
inline std::vector<CaloricEntry> caloric_library(double r_top) {
  std::vector<CaloricEntry> lib;
  lib.push_back({"linear", [](double x, double, double) { return x; }});
  lib.push_back({"bilinear", [](double x, double y, double) { return x * y; }});
  lib.push_back({"saddle", [](double x, double y, double) { return x * x - y * y; }});
  lib.push_back({"parabolic", [](double x, double, double t) { return x * x + 2.0 * t; }});
  const double t_src = -(r_top * r_top) - 4.0 * r_top * r_top;  // below the window by (2R)^2
  lib.push_back({"heat_kernel", [t_src](double x, double y, double t) {
                   const double s = t - t_src;
                   return std::exp(-(x * x + y * y) / (4.0 * s)) / (4.0 * std::numbers::pi * s);
                 }});
  return lib;
}

/// Phi decay of an exactly caloric field over a dyadic cylinder ladder.
/// Success criterion for the suite: slope >= 4 - 0.1.
template <class Fn>
DecayFit verify_caloric_decay(Fn&& v, const Grid& g, std::span<const double> ladder,
                              std::size_t levels_at_min) {
  const double r_min = *std::min_element(ladder.begin(), ladder.end());
  const double r_max = *std::max_element(ladder.begin(), ladder.end());
  const double dt = r_min * r_min / static_cast<double>(levels_at_min);
  const std::size_t count = static_cast<std::size_t>(std::round(r_max * r_max / dt)) + 1;
  const double cx = 0.5 * g.length, cy = 0.5 * g.length;
  auto series = make_analytic_series<double>(
      g, uniform_times(0.0, dt, count),
      [&](double x1, double x2, double t) { return v(x1 - cx, x2 - cy, t); });

  std::vector<std::pair<double, double>> pts;
  for (double r : ladder) {
    CylinderQuadrature q = make_quadrature(g, series.times(), {{cx, cy}, 0.0, r});
    pts.emplace_back(r, phi<double>(series, q));
  }
  return fit_decay_exponent(pts);
}

/// Spatial L2 oscillation of a static field over a ball.
inline double ball_oscillation_sq(const ScalarField& f, Vec2 center, double radius) {
  const auto nodes = ball_node_indices(f.grid, center, radius);
  if (nodes.size() < CylinderQuadrature::kMinNodes)
    throw ResolutionGuardError("ball has fewer than 32 nodes");
  double mean = 0.0;
  for (std::size_t i : nodes) mean += f.values[i];
  mean /= static_cast<double>(nodes.size());
  double acc = 0.0;
  for (std::size_t i : nodes) {
    const double d = f.values[i] - mean;
    acc += d * d;
  }
  return acc * f.grid.cell_volume();
}

/// Decay of int_{B_rho} |h - [h]_rho|^2 dx for a harmonic polynomial.
/// Success criterion for the suite: slope >= 4 - 0.1.
inline DecayFit verify_harmonic_decay(const ScalarField& h, std::span<const double> ladder) {
  const double c = 0.5 * h.grid.length;
  std::vector<std::pair<double, double>> pts;
  for (double r : ladder) pts.emplace_back(r, ball_oscillation_sq(h, {c, c}, r));
  return fit_decay_exponent(pts);
}

// ---------------------------------------------------------------------------
// Heat-energy estimate (torus variant of the boundary-value lemma)
// ---------------------------------------------------------------------------

struct HeatEnergyRecord {
  InequalityRecord record;        // lhs = sup_t ||w||^2 + int ||grad w||^2, rhs = 2 ||G||^2_{Q_T}
  double sup_w_sq = 0.0;
  double grad_integral = 0.0;
  bool vacuous = false;           // w stays identically zero
};

/// Closed-form heat response to static forcing -div G with w(0) = 0 on the
/// torus: per mode w_hat(t) = f_hat (1 - e^{-|k|^2 t}) / |k|^2. Both sides
/// of the energy estimate are evaluated analytically in time.
inline HeatEnergyRecord verify_heat_energy(const TensorField& G, double t_final,
                                           std::string id = "heat_energy") {
  const Grid& g = G.grid;
  std::array<SpectralScalar, 4> gs;
  for (int c = 0; c < 4; ++c) gs[c] = dealias(forward_fft(G.comp[c]));
  // forcing f = -div G per velocity component
  std::array<SpectralScalar, 2> f{SpectralScalar(g), SpectralScalar(g)};
  {
    SpectralScalar a = derivative(gs[0], 0), b = derivative(gs[1], 1);
    SpectralScalar c = derivative(gs[2], 0), d = derivative(gs[3], 1);
    for (std::size_t i = 0; i < a.coeff.size(); ++i) {
      f[0].coeff[i] = -(a.coeff[i] + b.coeff[i]);
      f[1].coeff[i] = -(c.coeff[i] + d.coeff[i]);
    }
  }

  const double nn = static_cast<double>(g.n);
  const double scale = g.length * g.length / (nn * nn * nn * nn);
  double w_sq = 0.0;
  double grad_int = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 <= g.n / 2; ++i2) {
      const double kk = detail::mode_ksq(g, i1, i2);
      if (kk == 0.0) continue;
      const double w = f[0].weight(i2);
      const double fsq = std::norm(f[0].at(i1, i2)) + std::norm(f[1].at(i1, i2));
      if (fsq == 0.0) continue;
      const double decay = std::exp(-kk * t_final);
      // ||w(T)||^2 contribution (monotone in t for static G, sup at T)
      w_sq += w * fsq * (1.0 - decay) * (1.0 - decay) / (kk * kk);
      // int_0^T (1 - e^{-kk t})^2 dt, exact
      const double integral = t_final - 2.0 * (1.0 - decay) / kk +
                              (1.0 - decay * decay) / (2.0 * kk);
      grad_int += w * fsq * integral / kk;
    }
  w_sq *= scale;
  grad_int *= scale;

  HeatEnergyRecord out;
  out.sup_w_sq = w_sq;
  out.grad_integral = grad_int;
  out.vacuous = (w_sq == 0.0 && grad_int == 0.0);
  const double rhs = 2.0 * t_final * l2_norm_sq(G);
  out.record = InequalityRecord::make(std::move(id), w_sq + grad_int, rhs, t_final);
  if (out.vacuous) out.record.pass = true;
  return out;
}

// ---------------------------------------------------------------------------
// L4 monitor
// ---------------------------------------------------------------------------

struct L4MonitorReport {
  std::vector<double> times;
  std::vector<double> u4;        // ||u(t)||_4^4
  std::vector<double> grad_sq;   // ||grad u(t)||_2^2
  std::vector<double> f4;        // ||F(t)||_4^4
  std::vector<double> c_hat;     // empirical constants (0 where skipped)
  std::vector<double> envelope;  // discrete Gronwall bound from time s
  double c_max = 0.0;
  double sup_l4 = 0.0;           // sup_{t>s} ||u(t)||_4
  std::size_t skipped = 0;       // samples with denominator below the guard
  bool below_envelope = true;
  std::size_t envelope_start = 0;
};

/// Track ||u||_4^4 along a trajectory, extract the smallest constant making
/// d/dt ||u||_4^4 <= c(||u||_4^4 ||grad u||_2^2 + ||F||_4^4 + ||u||_4^4)
/// hold sample-wise, and check the trajectory against its own discrete
/// Gronwall envelope started at time s.
inline L4MonitorReport l4_monitor(const Trajectory& traj, double s) {
  if (traj.snapshots.size() < 3)
    throw std::invalid_argument("l4_monitor: need at least 3 snapshots");
  const double t_end = traj.snapshots.back().t;
  if (!(s >= 0.0 && s < t_end))
    throw std::invalid_argument("l4_monitor: s must lie inside the trajectory span");

  NavierStokesStepper stepper(traj.config);
  L4MonitorReport rep;
  for (const auto& snap : traj.snapshots) {
    rep.times.push_back(snap.t);
    rep.u4.push_back(lp_norm_p(snap.u, 4.0));
    double gsq = 0.0;
    for (int c = 0; c < 2; ++c) {
      const double gc = detail::grad_l2(snap.u.comp[c]);
      gsq += gc * gc;
    }
    rep.grad_sq.push_back(gsq);
    rep.f4.push_back(lp_norm_p(stepper.forcing_at(snap.t), 4.0));
  }

  const std::size_t m = rep.times.size();
  rep.c_hat.assign(m, 0.0);
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const double dydt = (rep.u4[j + 1] - rep.u4[j - 1]) / (rep.times[j + 1] - rep.times[j - 1]);
    const double denom = rep.u4[j] * rep.grad_sq[j] + rep.f4[j] + rep.u4[j];
    if (denom < 1e-14) {
      ++rep.skipped;
      continue;
    }
    rep.c_hat[j] = std::max(0.0, dydt) / denom;
    if (rep.times[j] > s) rep.c_max = std::max(rep.c_max, rep.c_hat[j]);
  }

  // discrete one-sided Gronwall envelope from the first snapshot at t >= s
  std::size_t j0 = 0;
  while (j0 + 1 < m && rep.times[j0] < s) ++j0;
  rep.envelope_start = j0;
  rep.envelope.assign(m, 0.0);
  rep.envelope[j0] = rep.u4[j0];
  for (std::size_t j = j0; j + 1 < m; ++j) {
    const double dt = rep.times[j + 1] - rep.times[j];
    const double gmax = std::max(rep.grad_sq[j], rep.grad_sq[j + 1]);
    const double fmax = std::max(rep.f4[j], rep.f4[j + 1]);
    rep.envelope[j + 1] =
        (rep.envelope[j] + rep.c_max * fmax * dt) * std::exp(rep.c_max * (gmax + 1.0) * dt);
  }
  for (std::size_t j = j0; j < m; ++j) {
    rep.sup_l4 = std::max(rep.sup_l4, std::pow(rep.u4[j], 0.25));
    if (rep.u4[j] > rep.envelope[j] * (1.0 + 1e-8)) rep.below_envelope = false;
  }
  return rep;
}

}  // namespace ns2d
