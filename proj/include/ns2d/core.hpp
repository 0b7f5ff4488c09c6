#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ns2d {

/// Uniform periodic grid on the square torus [0, length)^2.
/// Samples live at x = (i1*h, i2*h), h = length/n, stored row-major
/// with the second index fastest: values[i1*n + i2].
struct Grid {
  int n = 0;
  double length = 2.0 * std::numbers::pi;

  Grid() = default;
  Grid(int n_, double length_ = 2.0 * std::numbers::pi) : n(n_), length(length_) {
    if (n < 16 || n % 2 != 0)
      throw std::invalid_argument("Grid: n must be even and >= 16, got " + std::to_string(n));
    if (length <= 0.0) throw std::invalid_argument("Grid: length must be positive");
  }

  double spacing() const { return length / n; }
  double cell_volume() const { return spacing() * spacing(); }
  std::size_t node_count() const { return static_cast<std::size_t>(n) * n; }
  std::size_t index(int i1, int i2) const { return static_cast<std::size_t>(i1) * n + i2; }
  double coord(int i) const { return i * spacing(); }

  /// Signed integer mode for FFT row index (wraps to negative past n/2).
  int mode(int i) const { return i <= n / 2 ? i : i - n; }
  /// Physical wavenumber of integer mode m.
  double wavenumber(int m) const { return 2.0 * std::numbers::pi * m / length; }

  bool operator==(const Grid&) const = default;
};

/// Minimal-image displacement a-b on the periodic axis of period L.
inline double periodic_delta(double a, double b, double L) {
  double d = std::remainder(a - b, L);
  return d;
}

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm_sq() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm_sq()); }
};

/// 2x2 tensor, row-major entries (xx, xy, yx, yy).
struct Mat2 {
  double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;
  Mat2 operator+(Mat2 o) const { return {xx + o.xx, xy + o.xy, yx + o.yx, yy + o.yy}; }
  Mat2 operator-(Mat2 o) const { return {xx - o.xx, xy - o.xy, yx - o.yx, yy - o.yy}; }
  Mat2 operator*(double s) const { return {xx * s, xy * s, yx * s, yy * s}; }
  double frobenius_sq() const { return xx * xx + xy * xy + yx * yx + yy * yy; }
  double max_abs() const {
    return std::max(std::max(std::abs(xx), std::abs(xy)), std::max(std::abs(yx), std::abs(yy)));
  }
};

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}

  double& at(int i1, int i2) { return values[grid.index(i1, i2)]; }
  double at(int i1, int i2) const { return values[grid.index(i1, i2)]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

struct VectorField {
  Grid grid;
  std::array<ScalarField, 2> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : grid(g), comp{ScalarField(g), ScalarField(g)} {}

  Vec2 at(int i1, int i2) const { return {comp[0].at(i1, i2), comp[1].at(i1, i2)}; }
  void set(int i1, int i2, Vec2 v) {
    comp[0].at(i1, i2) = v.x;
    comp[1].at(i1, i2) = v.y;
  }
};

struct TensorField {
  Grid grid;
  std::array<ScalarField, 4> comp;  // F11, F12, F21, F22

  TensorField() = default;
  explicit TensorField(const Grid& g)
      : grid(g), comp{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)} {}

  Mat2 at(int i1, int i2) const {
    return {comp[0].at(i1, i2), comp[1].at(i1, i2), comp[2].at(i1, i2), comp[3].at(i1, i2)};
  }
  void set(int i1, int i2, Mat2 m) {
    comp[0].at(i1, i2) = m.xx;
    comp[1].at(i1, i2) = m.xy;
    comp[2].at(i1, i2) = m.yx;
    comp[3].at(i1, i2) = m.yy;
  }
};

// Rectangle-rule integrals; spectrally accurate for smooth periodic data.

inline double integral(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

inline double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / static_cast<double>(f.values.size());
}

inline double lp_norm_p(const ScalarField& f, double p) {
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return s * f.grid.cell_volume();
}

inline double l2_norm_sq(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return s * f.grid.cell_volume();
}

inline double l2_norm_sq(const VectorField& u) {
  return l2_norm_sq(u.comp[0]) + l2_norm_sq(u.comp[1]);
}

inline double l2_norm_sq(const TensorField& F) {
  double s = 0.0;
  for (const auto& c : F.comp) s += l2_norm_sq(c);
  return s;
}

/// integral of |u|^p with |u| the Euclidean norm
inline double lp_norm_p(const VectorField& u, double p) {
  double s = 0.0;
  const auto& a = u.comp[0].values;
  const auto& b = u.comp[1].values;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::pow(a[i] * a[i] + b[i] * b[i], 0.5 * p);
  return s * u.grid.cell_volume();
}

/// integral of |F|^p with |F| the Frobenius norm
inline double lp_norm_p(const TensorField& F, double p) {
  double s = 0.0;
  const std::size_t m = F.comp[0].values.size();
  for (std::size_t i = 0; i < m; ++i) {
    double q = 0.0;
    for (const auto& c : F.comp) q += c.values[i] * c.values[i];
    s += std::pow(q, 0.5 * p);
  }
  return s * F.grid.cell_volume();
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_norm(const VectorField& u) {
  double m = 0.0;
  const auto& a = u.comp[0].values;
  const auto& b = u.comp[1].values;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, a[i] * a[i] + b[i] * b[i]);
  return std::sqrt(m);
}

inline double max_abs_component(const TensorField& F) {
  double m = 0.0;
  for (const auto& c : F.comp) m = std::max(m, max_abs(c));
  return m;
}

}  // namespace ns2d
