#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ns2d/cylinder.hpp"
#include "ns2d/threads.hpp"

namespace ns2d {

// ---------------------------------------------------------------------------
// Batched functional evaluation. All evaluators sweep snapshot levels in the
// outer loop and quadratures inside, so a disk-backed sampler is read
// sequentially once per pass. Samplers that declare `thread_safe = true`
// are evaluated cylinder-parallel; accumulator slots are per-quadrature, so
// the result does not depend on the worker count.
// ---------------------------------------------------------------------------

namespace detail {

template <class Sampler>
constexpr bool sampler_thread_safe() {
  if constexpr (requires { Sampler::thread_safe; })
    return Sampler::thread_safe;
  else
    return false;
}

template <class Sampler, class Fn>
void level_major_sweep(const Sampler& s, std::span<const CylinderQuadrature> quads, Fn&& fn) {
  (void)s;
  auto sweep_range = [&](std::size_t q_lo, std::size_t q_hi) {
    std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
    for (std::size_t qi = q_lo; qi < q_hi; ++qi) {
      lo = std::min(lo, quads[qi].level_first);
      hi = std::max(hi, quads[qi].level_first + quads[qi].level_count());
    }
    if (lo >= hi) return;
    for (std::size_t j = lo; j < hi; ++j) {
      for (std::size_t qi = q_lo; qi < q_hi; ++qi) {
        const auto& q = quads[qi];
        if (j < q.level_first || j >= q.level_first + q.level_count()) continue;
        fn(qi, q, j, q.level_weight[j - q.level_first]);
      }
    }
  };
  if constexpr (sampler_thread_safe<Sampler>()) {
    parallel_chunks(quads.size(), sweep_range);
  } else {
    sweep_range(0, quads.size());
  }
}

}  // namespace detail

/// Space-time means (f)_{z0,R} for a batch of cylinders.
template <class T, class Sampler>
std::vector<T> mean_space_time_batch(const Sampler& s, std::span<const CylinderQuadrature> quads) {
  std::vector<T> sums(quads.size(), zero_value<T>::get());
  std::vector<double> wsums(quads.size(), 0.0);
  detail::level_major_sweep(s, quads, [&](std::size_t qi, const CylinderQuadrature& q,
                                          std::size_t j, double w) {
    T acc = zero_value<T>::get();
    for (std::size_t node : q.nodes) acc = acc + s.value(j, node);
    sums[qi] = sums[qi] + acc * w;
    wsums[qi] += w * static_cast<double>(q.nodes.size());
  });
  for (std::size_t qi = 0; qi < quads.size(); ++qi) sums[qi] = sums[qi] * (1.0 / wsums[qi]);
  return sums;
}

template <class T, class Sampler>
T mean_space_time(const Sampler& s, const CylinderQuadrature& q) {
  return mean_space_time_batch<T>(s, std::span<const CylinderQuadrature>(&q, 1))[0];
}

/// Spatial mean over the ball at one time level, [f]_{x0,R}(t_j).
template <class Sampler>
double mean_space(const Sampler& s, const CylinderQuadrature& q, std::size_t level) {
  double acc = 0.0;
  for (std::size_t node : q.nodes) acc += s.value(level, node);
  return acc / static_cast<double>(q.nodes.size());
}

/// Phi = ( int_Q |v - (v)_{z0,R}|^4 dz )^{1/2}; not volume-normalized.
template <class T, class Sampler>
std::vector<double> phi_batch(const Sampler& s, std::span<const CylinderQuadrature> quads) {
  std::vector<T> means = mean_space_time_batch<T>(s, quads);
  std::vector<double> acc(quads.size(), 0.0);
  detail::level_major_sweep(s, quads, [&](std::size_t qi, const CylinderQuadrature& q,
                                          std::size_t j, double w) {
    double a = 0.0;
    for (std::size_t node : q.nodes) {
      const double o = osc_norm_sq(s.value(j, node) - means[qi]);
      a += o * o;
    }
    acc[qi] += a * w;
  });
  for (std::size_t qi = 0; qi < quads.size(); ++qi)
    acc[qi] = std::sqrt(acc[qi] * quads[qi].cell_volume);
  return acc;
}

/// Psi = ( int_Q |v|^4 dz )^{1/2}.
template <class T, class Sampler>
std::vector<double> psi_batch(const Sampler& s, std::span<const CylinderQuadrature> quads) {
  std::vector<double> acc(quads.size(), 0.0);
  detail::level_major_sweep(s, quads, [&](std::size_t qi, const CylinderQuadrature& q,
                                          std::size_t j, double w) {
    double a = 0.0;
    for (std::size_t node : q.nodes) {
      const double o = osc_norm_sq(s.value(j, node));
      a += o * o;
    }
    acc[qi] += a * w;
  });
  for (std::size_t qi = 0; qi < quads.size(); ++qi)
    acc[qi] = std::sqrt(acc[qi] * quads[qi].cell_volume);
  return acc;
}

/// D = int_Q |p - [p]_{x0,R}(t)|^2 dz with a per-time-slice spatial mean.
template <class Sampler>
std::vector<double> d_pressure_batch(const Sampler& s, std::span<const CylinderQuadrature> quads) {
  std::vector<double> acc(quads.size(), 0.0);
  detail::level_major_sweep(s, quads, [&](std::size_t qi, const CylinderQuadrature& q,
                                          std::size_t j, double w) {
    double sum = 0.0;
    for (std::size_t node : q.nodes) sum += s.value(j, node);
    const double slice_mean = sum / static_cast<double>(q.nodes.size());
    double a = 0.0;
    for (std::size_t node : q.nodes) {
      const double d = s.value(j, node) - slice_mean;
      a += d * d;
    }
    acc[qi] += a * w;
  });
  for (std::size_t qi = 0; qi < quads.size(); ++qi) acc[qi] *= quads[qi].cell_volume;
  return acc;
}

template <class T, class Sampler>
double phi(const Sampler& s, const CylinderQuadrature& q) {
  return phi_batch<T>(s, std::span<const CylinderQuadrature>(&q, 1))[0];
}
template <class T, class Sampler>
double psi(const Sampler& s, const CylinderQuadrature& q) {
  return psi_batch<T>(s, std::span<const CylinderQuadrature>(&q, 1))[0];
}
template <class Sampler>
double d_pressure(const Sampler& s, const CylinderQuadrature& q) {
  return d_pressure_batch(s, std::span<const CylinderQuadrature>(&q, 1))[0];
}

/// Theta(z0,R) = Phi(u; z0, tau R) + D(p; z0, R).
template <class USampler, class PSampler>
double theta(const USampler& u, const PSampler& p, const Grid& grid,
             const std::vector<double>& times, const ParabolicCylinder& cyl, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("theta: tau must lie in (0,1)");
  CylinderQuadrature inner = make_quadrature(grid, times, cyl.scaled(tau));
  CylinderQuadrature outer = make_quadrature(grid, times, cyl);
  return phi<Vec2>(u, inner) + d_pressure(p, outer);
}

// ---------------------------------------------------------------------------
// M_{2,gamma} seminorm
// ---------------------------------------------------------------------------

struct SeminormResult {
  double value = 0.0;
  ParabolicCylinder argmax;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // cylinders failing the resolution guard
};

/// sup over the family of R^{1-gamma} (|Q|^{-1} int_Q |F-(F)|^2)^{1/2}.
/// The discrete family is a lower bound for the true supremum.
template <class Sampler>
SeminormResult m2gamma_seminorm(const Sampler& s, double gamma,
                                std::span<const ParabolicCylinder> family) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("m2gamma_seminorm: gamma must lie in [0,1)");
  if (family.empty()) throw std::invalid_argument("m2gamma_seminorm: empty cylinder family");
  std::vector<CylinderQuadrature> quads;
  std::vector<std::size_t> origin;
  SeminormResult res;
  for (std::size_t i = 0; i < family.size(); ++i) {
    try {
      quads.push_back(make_quadrature(s.grid(), s.times(), family[i]));
      origin.push_back(i);
    } catch (const ResolutionGuardError&) {
      ++res.skipped;
    }
  }
  res.evaluated = quads.size();
  if (quads.empty()) return res;

  using T = decltype(s.value(std::size_t{0}, std::size_t{0}));
  std::vector<T> means = mean_space_time_batch<T>(s, quads);
  std::vector<double> acc(quads.size(), 0.0);
  std::vector<double> vol(quads.size(), 0.0);
  detail::level_major_sweep(s, std::span<const CylinderQuadrature>(quads),
                            [&](std::size_t qi, const CylinderQuadrature& q, std::size_t j,
                                double w) {
                              double a = 0.0;
                              for (std::size_t node : q.nodes)
                                a += osc_norm_sq(s.value(j, node) - means[qi]);
                              acc[qi] += a * w * q.cell_volume;
                              vol[qi] += w * q.cell_volume * static_cast<double>(q.nodes.size());
                            });
  for (std::size_t qi = 0; qi < quads.size(); ++qi) {
    const double r = quads[qi].cylinder.r;
    const double val = std::pow(r, 1.0 - gamma) * std::sqrt(acc[qi] / vol[qi]);
    if (val >= res.value) {
      res.value = val;
      res.argmax = quads[qi].cylinder;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Decay-exponent fitting
// ---------------------------------------------------------------------------

struct DecayFit {
  double slope = 0.0;
  double halfwidth = 0.0;        // ~2 standard errors of the slope
  double slope_full = 0.0;       // fit over the whole ladder
  bool trimmed = false;          // two largest radii discarded (curvature)
  double window_sensitivity = 0.0;
  int points = 0;
};

namespace detail {

struct LineFit {
  double slope, intercept, slope_se;
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double xb = sx / m, yb = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xb) * (x[i] - xb);
    sxy += (x[i] - xb) * (y[i] - yb);
  }
  const double slope = sxy / sxx;
  const double intercept = yb - slope * xb;
  double sse = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    sse += e * e;
  }
  const double dof = static_cast<double>(m > 2 ? m - 2 : 1);
  const double se = std::sqrt(sse / dof / sxx);
  return {slope, intercept, se};
}

/// Coefficient (and its standard error) of the quadratic term in a degree-2
/// fit; used only to detect curvature of the log-log data.
inline std::pair<double, double> quad_coefficient(std::span<const double> x,
                                                  std::span<const double> y) {
  const std::size_t m = x.size();
  if (m < 4) return {0.0, std::numeric_limits<double>::infinity()};
  // normal equations for [1, x, x^2]
  double s0 = m, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = x[i], x2 = xi * xi;
    s1 += xi;
    s2 += x2;
    s3 += x2 * xi;
    s4 += x2 * x2;
    t0 += y[i];
    t1 += y[i] * xi;
    t2 += y[i] * x2;
  }
  // solve the normal equations by Cramer's rule
  const double det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2);
  if (det == 0.0) return {0.0, std::numeric_limits<double>::infinity()};
  const double a = (t0 * (s2 * s4 - s3 * s3) - s1 * (t1 * s4 - s3 * t2) + s2 * (t1 * s3 - s2 * t2)) / det;
  const double b = (s0 * (t1 * s4 - s3 * t2) - t0 * (s1 * s4 - s3 * s2) + s2 * (s1 * t2 - t1 * s2)) / det;
  const double c = (s0 * (s2 * t2 - t1 * s3) - s1 * (s1 * t2 - t1 * s2) + t0 * (s1 * s3 - s2 * s2)) / det;
  double sse = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (a + b * x[i] + c * x[i] * x[i]);
    sse += e * e;
  }
  const double dof = static_cast<double>(m > 3 ? m - 3 : 1);
  // variance of c against the centered x^2 direction (crude but adequate)
  double x2b = s2 / m, sxx2 = 0;
  for (std::size_t i = 0; i < m; ++i) sxx2 += (x[i] * x[i] - x2b) * (x[i] * x[i] - x2b);
  const double se = sxx2 > 0 ? std::sqrt(sse / dof / sxx2) : std::numeric_limits<double>::infinity();
  return {c, se};
}

}  // namespace detail

/// Least-squares slope of log(value) against log(radius) on a dyadic ladder.
/// Nonpositive values are excluded; fewer than 4 usable points is an error.
/// When the log-log data shows significant curvature and enough points
/// remain, the two largest radii are discarded and the trimmed slope is
/// reported, with the full-window slope kept for comparison.
inline DecayFit fit_decay_exponent(std::span<const std::pair<double, double>> radius_value) {
  std::vector<double> x, y;
  for (const auto& [r, v] : radius_value) {
    if (v > 0.0 && r > 0.0) {
      x.push_back(std::log(r));
      y.push_back(std::log(v));
    }
  }
  if (x.size() < 4)
    throw std::invalid_argument("fit_decay_exponent: need at least 4 positive-value ladder points");

  DecayFit fit;
  fit.points = static_cast<int>(x.size());
  const auto full = detail::least_squares_line(x, y);
  fit.slope_full = full.slope;
  fit.slope = full.slope;
  fit.halfwidth = 2.0 * full.slope_se;

  if (x.size() >= 6) {
    const auto [c, cse] = detail::quad_coefficient(x, y);
    if (std::abs(c) > 2.0 * cse) {
      // drop the two largest radii (largest x)
      std::vector<std::size_t> idx(x.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
      std::vector<double> xt, yt;
      for (std::size_t i = 0; i + 2 < idx.size(); ++i) {
        xt.push_back(x[idx[i]]);
        yt.push_back(y[idx[i]]);
      }
      const auto trimmed = detail::least_squares_line(xt, yt);
      fit.trimmed = true;
      fit.slope = trimmed.slope;
      fit.halfwidth = 2.0 * trimmed.slope_se;
      fit.window_sensitivity = std::abs(trimmed.slope - full.slope);
    }
  }
  return fit;
}

struct GammaEstimate {
  double value = 0.0;
  bool clipped = false;
};

/// Hoelder readout from a Phi decay slope: gamma = (slope - 2)/2, clipped
/// to [0, 1] with the clip flagged.
inline GammaEstimate gamma_from_slope(double slope) {
  GammaEstimate g;
  g.value = (slope - 2.0) / 2.0;
  if (g.value < 0.0) {
    g.value = 0.0;
    g.clipped = true;
  } else if (g.value > 1.0) {
    g.value = 1.0;
    g.clipped = true;
  }
  return g;
}

// ---------------------------------------------------------------------------
// R0 selection
// ---------------------------------------------------------------------------

/// Uniform lattice of ball centers with the given stride.
inline std::vector<Vec2> center_lattice(const Grid& g, double stride) {
  std::vector<Vec2> centers;
  const int count = std::max(1, static_cast<int>(std::floor(g.length / stride)));
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b)
      centers.push_back({a * stride, b * stride});
  return centers;
}

/// Snapshot times usable as cylinder top-times for radius r given margin s;
/// the window (t0-r^2, t0] must also stay inside the sampled trajectory.
inline std::vector<double> admissible_top_times(const std::vector<double>& times, double margin_s,
                                                double r, std::size_t max_count) {
  std::vector<double> ok;
  const double floor_t = std::max(margin_s, times.front());
  for (double t : times)
    if (t - r * r >= floor_t - 1e-12) ok.push_back(t);
  if (ok.size() <= max_count) return ok;
  std::vector<double> picked;
  for (std::size_t i = 0; i < max_count; ++i) {
    const std::size_t j = (ok.size() - 1) * i / (max_count - 1);
    picked.push_back(ok[j]);
  }
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  return picked;
}

struct R0Selection {
  std::optional<double> r0;
  double worst_psi = 0.0;       // max Psi at the selected radius
  std::size_t cylinders = 0;    // family size inspected at that radius
};

/// Largest ladder radius R with Psi(u; z0, R) < tau^4 for every sampled
/// interior center; empty if no radius on the ladder satisfies it.
template <class USampler>
R0Selection select_r0(const USampler& u, double tau, double margin_s,
                      std::span<const double> ladder, double stride_factor = 0.5,
                      std::size_t max_top_times = 3) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("select_r0: tau must lie in (0,1)");
  const double thresh = tau * tau * tau * tau;
  R0Selection sel;
  for (double r : ladder) {
    const auto t0s = admissible_top_times(u.times(), margin_s, r, max_top_times);
    if (t0s.empty()) continue;
    std::vector<CylinderQuadrature> quads;
    bool resolvable = true;
    for (const Vec2& c : center_lattice(u.grid(), r * stride_factor)) {
      for (double t0 : t0s) {
        try {
          quads.push_back(make_quadrature(u.grid(), u.times(), {c, t0, r}));
        } catch (const ResolutionGuardError&) {
          resolvable = false;
        }
      }
      if (!resolvable) break;
    }
    if (!resolvable || quads.empty()) continue;
    const auto psis = psi_batch<Vec2>(u, quads);
    const double worst = *std::max_element(psis.begin(), psis.end());
    if (worst < thresh) {
      sel.r0 = r;
      sel.worst_psi = worst;
      sel.cylinders = quads.size();
      return sel;
    }
  }
  return sel;
}

}  // namespace ns2d
