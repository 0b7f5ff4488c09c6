#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "ns2d/core.hpp"

namespace ns2d {

/// Q(z0,R) = B(x0,R) x (t0 - R^2, t0]. All diagnostic functionals integrate
/// over these space-time sets.
struct ParabolicCylinder {
  Vec2 x0;
  double t0 = 0.0;
  double r = 0.0;

  ParabolicCylinder() = default;
  ParabolicCylinder(Vec2 center, double top_time, double radius)
      : x0(center), t0(top_time), r(radius) {
    if (r <= 0.0) throw std::invalid_argument("ParabolicCylinder: radius must be positive");
  }

  ParabolicCylinder scaled(double factor) const { return {x0, t0, r * factor}; }
};

struct ResolutionGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Discrete carrier of the cylinder integral: the spatial ball as node
/// indices (nearest-node membership, minimal-image metric) and the time
/// levels inside the window with their snapshot spacings as weights.
struct CylinderQuadrature {
  ParabolicCylinder cylinder;
  std::vector<std::size_t> nodes;     // flat grid indices inside the ball
  std::size_t level_first = 0;        // first snapshot index in the window
  std::vector<double> level_weight;   // spacing per level, level_first + k
  double cell_volume = 0.0;

  std::size_t level_count() const { return level_weight.size(); }
  double volume() const {
    double tw = 0.0;
    for (double w : level_weight) tw += w;
    return tw * cell_volume * static_cast<double>(nodes.size());
  }

  static constexpr std::size_t kMinNodes = 32;
  static constexpr std::size_t kMinLevels = 4;
};

/// Nearest-node ball membership: flat indices of grid nodes whose centers
/// lie strictly inside B(x0, r), minimal-image metric.
inline std::vector<std::size_t> ball_node_indices(const Grid& grid, Vec2 x0, double r) {
  if (r >= 0.5 * grid.length)
    throw std::invalid_argument("ball radius exceeds half the domain period");
  std::vector<std::size_t> nodes;
  const double r2 = r * r;
  const int n = grid.n;
  const double h = grid.spacing();
  const int c1 = static_cast<int>(std::floor(x0.x / h));
  const int c2 = static_cast<int>(std::floor(x0.y / h));
  const int span = static_cast<int>(std::ceil(r / h)) + 1;
  for (int a = c1 - span; a <= c1 + span; ++a) {
    const int i1 = ((a % n) + n) % n;
    const double d1 = periodic_delta(grid.coord(i1), x0.x, grid.length);
    if (d1 * d1 >= r2) continue;
    for (int b = c2 - span; b <= c2 + span; ++b) {
      const int i2 = ((b % n) + n) % n;
      const double d2 = periodic_delta(grid.coord(i2), x0.y, grid.length);
      if (d1 * d1 + d2 * d2 < r2) nodes.push_back(grid.index(i1, i2));
    }
  }
  return nodes;
}

/// Build the quadrature for a cylinder against a snapshot ladder, enforcing
/// the resolution guard (>= 32 spatial nodes, >= 4 time levels) and the
/// requirement that the cylinder fits inside the sampled window.
inline CylinderQuadrature make_quadrature(const Grid& grid, const std::vector<double>& times,
                                          const ParabolicCylinder& cyl) {
  if (times.size() < 2) throw ResolutionGuardError("cylinder quadrature: need >= 2 snapshots");

  const double t_lo = cyl.t0 - cyl.r * cyl.r;
  const double eps = 1e-9 * std::max(1.0, std::abs(cyl.t0));
  if (t_lo < times.front() - eps || cyl.t0 > times.back() + eps)
    throw ResolutionGuardError("cylinder does not fit inside the sampled time window");

  CylinderQuadrature q;
  q.cylinder = cyl;
  q.cell_volume = grid.cell_volume();
  q.nodes = ball_node_indices(grid, cyl.x0, cyl.r);

  std::size_t first = times.size();
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] > t_lo + eps && times[j] <= cyl.t0 + eps) {
      if (first == times.size()) first = j;
      const double spacing = j > 0 ? times[j] - times[j - 1] : times[1] - times[0];
      q.level_weight.push_back(spacing);
    } else if (first != times.size() && times[j] > cyl.t0 + eps) {
      break;
    }
  }
  q.level_first = first;

  if (q.nodes.size() < CylinderQuadrature::kMinNodes)
    throw ResolutionGuardError("cylinder has fewer than 32 spatial nodes at this resolution");
  if (q.level_count() < CylinderQuadrature::kMinLevels)
    throw ResolutionGuardError("cylinder has fewer than 4 time levels at this cadence");
  return q;
}

inline bool quadrature_resolvable(const Grid& grid, const std::vector<double>& times,
                                  const ParabolicCylinder& cyl) {
  try {
    make_quadrature(grid, times, cyl);
    return true;
  } catch (const ResolutionGuardError&) {
    return false;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

// --- value traits shared by the functional evaluators ---------------------

inline double osc_norm_sq(double v) { return v * v; }
inline double osc_norm_sq(Vec2 v) { return v.norm_sq(); }
inline double osc_norm_sq(Mat2 v) { return v.frobenius_sq(); }

template <class T>
struct zero_value;
template <>
struct zero_value<double> {
  static double get() { return 0.0; }
};
template <>
struct zero_value<Vec2> {
  static Vec2 get() { return {}; }
};
template <>
struct zero_value<Mat2> {
  static Mat2 get() { return {}; }
};

// --- samplers --------------------------------------------------------------
// A sampler exposes: grid(), times(), and value(level, node) -> T. The
// evaluators always sweep level-major so disk-backed samplers can stream.

/// Field constant in time, carried over an explicit time ladder.
template <class FieldT, class T>
struct StaticSeries {
  static constexpr bool thread_safe = true;
  const FieldT* field;
  const std::vector<double>* time_ladder;

  const Grid& grid() const { return field->grid; }
  const std::vector<double>& times() const { return *time_ladder; }
  T value(std::size_t, std::size_t node) const;
};

template <>
inline double StaticSeries<ScalarField, double>::value(std::size_t, std::size_t node) const {
  return field->values[node];
}
template <>
inline Vec2 StaticSeries<VectorField, Vec2>::value(std::size_t, std::size_t node) const {
  return {field->comp[0].values[node], field->comp[1].values[node]};
}
template <>
inline Mat2 StaticSeries<TensorField, Mat2>::value(std::size_t, std::size_t node) const {
  return {field->comp[0].values[node], field->comp[1].values[node], field->comp[2].values[node],
          field->comp[3].values[node]};
}

using StaticScalarSeries = StaticSeries<ScalarField, double>;
using StaticVectorSeries = StaticSeries<VectorField, Vec2>;
using StaticTensorSeries = StaticSeries<TensorField, Mat2>;

/// Samples a closed-form function f(x1, x2, t) on the grid; used for the
/// caloric/harmonic libraries and synthetic exponent fixtures.
template <class T, class Fn>
struct AnalyticSeries {
  static constexpr bool thread_safe = true;
  Grid grid_;
  std::vector<double> times_;
  Fn fn;

  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  T value(std::size_t level, std::size_t node) const {
    const int i1 = static_cast<int>(node) / grid_.n;
    const int i2 = static_cast<int>(node) % grid_.n;
    return fn(grid_.coord(i1), grid_.coord(i2), times_[level]);
  }
};

template <class T, class Fn>
AnalyticSeries<T, Fn> make_analytic_series(const Grid& g, std::vector<double> times, Fn fn) {
  return AnalyticSeries<T, Fn>{g, std::move(times), std::move(fn)};
}

/// Uniform time ladder with `count` levels ending at t_top, spacing dt.
inline std::vector<double> uniform_times(double t_top, double dt, std::size_t count) {
  std::vector<double> ts(count);
  for (std::size_t j = 0; j < count; ++j)
    ts[j] = t_top - dt * static_cast<double>(count - 1 - j);
  return ts;
}

}  // namespace ns2d
