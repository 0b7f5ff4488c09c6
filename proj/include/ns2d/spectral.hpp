#pragma once

#include "ns2d/core.hpp"
#include "ns2d/fft.hpp"

namespace ns2d {

namespace detail {

/// Integer modes used for odd-order derivatives; the unpaired Nyquist mode
/// is dropped so derivatives of real fields stay real.
inline int deriv_mode_row(const Grid& g, int i1) {
  int m = g.mode(i1);
  return (i1 == g.n / 2) ? 0 : m;
}
inline int deriv_mode_col(const Grid& g, int i2) {
  return (i2 == g.n / 2) ? 0 : i2;
}

}  // namespace detail

/// Zero all coefficients with |mode| > n/3 on either axis (2/3 rule).
inline void dealias_inplace(SpectralScalar& s) {
  const int n = s.grid.n;
  const int cut = n / 3;
  for (int i1 = 0; i1 < n; ++i1) {
    const int m1 = s.grid.mode(i1);
    for (int i2 = 0; i2 <= n / 2; ++i2) {
      if (std::abs(m1) > cut || i2 > cut) s.at(i1, i2) = 0.0;
    }
  }
}

inline SpectralScalar dealias(SpectralScalar s) {
  dealias_inplace(s);
  return s;
}

inline SpectralScalar derivative(const SpectralScalar& s, int axis) {
  const Grid& g = s.grid;
  SpectralScalar out(g);
  const std::complex<double> I(0.0, 1.0);
  for (int i1 = 0; i1 < g.n; ++i1) {
    const double k1 = g.wavenumber(detail::deriv_mode_row(g, i1));
    for (int i2 = 0; i2 <= g.n / 2; ++i2) {
      const double k2 = g.wavenumber(detail::deriv_mode_col(g, i2));
      out.at(i1, i2) = I * (axis == 0 ? k1 : k2) * s.at(i1, i2);
    }
  }
  return out;
}

inline VectorField gradient(const ScalarField& f) {
  SpectralScalar s = forward_fft(f);
  VectorField out(f.grid);
  out.comp[0] = inverse_fft(derivative(s, 0));
  out.comp[1] = inverse_fft(derivative(s, 1));
  return out;
}

inline ScalarField divergence(const VectorField& v) {
  SpectralScalar d0 = derivative(forward_fft(v.comp[0]), 0);
  SpectralScalar d1 = derivative(forward_fft(v.comp[1]), 1);
  for (std::size_t i = 0; i < d0.coeff.size(); ++i) d0.coeff[i] += d1.coeff[i];
  return inverse_fft(d0);
}

/// (div F)_i = d_1 F_i1 + d_2 F_i2, computed spectrally after dealiasing F.
inline VectorField divergence_tensor(const TensorField& F) {
  std::array<SpectralScalar, 4> s;
  for (int c = 0; c < 4; ++c) s[c] = dealias(forward_fft(F.comp[c]));
  VectorField out(F.grid);
  for (int row = 0; row < 2; ++row) {
    SpectralScalar a = derivative(s[2 * row], 0);
    SpectralScalar b = derivative(s[2 * row + 1], 1);
    for (std::size_t i = 0; i < a.coeff.size(); ++i) a.coeff[i] += b.coeff[i];
    out.comp[row] = inverse_fft(a);
  }
  return out;
}

/// Spectral Leray projector applied in place on the coefficient pair:
/// u_hat -= k (k . u_hat) / |k|^2, zero mode untouched.
inline void leray_project_inplace(SpectralScalar& u1, SpectralScalar& u2) {
  const Grid& g = u1.grid;
  for (int i1 = 0; i1 < g.n; ++i1) {
    const double k1 = g.wavenumber(detail::deriv_mode_row(g, i1));
    for (int i2 = 0; i2 <= g.n / 2; ++i2) {
      const double k2 = g.wavenumber(detail::deriv_mode_col(g, i2));
      const double kk = k1 * k1 + k2 * k2;
      if (kk == 0.0) continue;
      const std::complex<double> kdot = (k1 * u1.at(i1, i2) + k2 * u2.at(i1, i2)) / kk;
      u1.at(i1, i2) -= k1 * kdot;
      u2.at(i1, i2) -= k2 * kdot;
    }
  }
}

inline VectorField leray_project(const VectorField& v) {
  SpectralScalar u1 = forward_fft(v.comp[0]);
  SpectralScalar u2 = forward_fft(v.comp[1]);
  leray_project_inplace(u1, u2);
  VectorField out(v.grid);
  out.comp[0] = inverse_fft(u1);
  out.comp[1] = inverse_fft(u2);
  return out;
}

/// L2 norm of the spectral divergence, for checking the solenoidal invariant.
inline double divergence_l2(const VectorField& v) {
  SpectralScalar d0 = derivative(forward_fft(v.comp[0]), 0);
  SpectralScalar d1 = derivative(forward_fft(v.comp[1]), 1);
  for (std::size_t i = 0; i < d0.coeff.size(); ++i) d0.coeff[i] += d1.coeff[i];
  return std::sqrt(coefficient_energy(d0));
}

/// Pointwise products u_i u_j as a (symmetric) tensor, dealiased.
inline TensorField velocity_stress(const VectorField& u) {
  TensorField T(u.grid);
  const auto& a = u.comp[0].values;
  const auto& b = u.comp[1].values;
  for (std::size_t i = 0; i < a.size(); ++i) {
    T.comp[0].values[i] = a[i] * a[i];
    T.comp[1].values[i] = a[i] * b[i];
    T.comp[2].values[i] = b[i] * a[i];
    T.comp[3].values[i] = b[i] * b[i];
  }
  return T;
}

/// Solve -lap p = sum_ij d_i d_j (u_i u_j + F_ij) with zero-mean p.
/// The zero wavenumber is pinned to 0.
inline ScalarField pressure_from_state(const VectorField& u, const TensorField& F) {
  const Grid& g = u.grid;
  TensorField S = velocity_stress(u);
  std::array<SpectralScalar, 4> s;
  for (int c = 0; c < 4; ++c) {
    SpectralScalar sc = dealias(forward_fft(S.comp[c]));
    SpectralScalar fc = dealias(forward_fft(F.comp[c]));
    for (std::size_t i = 0; i < sc.coeff.size(); ++i) sc.coeff[i] += fc.coeff[i];
    s[c] = std::move(sc);
  }
  SpectralScalar p(g);
  for (int i1 = 0; i1 < g.n; ++i1) {
    const double k1 = g.wavenumber(detail::deriv_mode_row(g, i1));
    for (int i2 = 0; i2 <= g.n / 2; ++i2) {
      const double k2 = g.wavenumber(detail::deriv_mode_col(g, i2));
      const double kk = k1 * k1 + k2 * k2;
      if (kk == 0.0) {
        p.at(i1, i2) = 0.0;
        continue;
      }
      // -|k|^2 p_hat = -(k_i k_j) s_ij_hat  =>  p_hat = -(k_i k_j s_ij)/|k|^2
      const std::complex<double> q = k1 * k1 * s[0].at(i1, i2) + k1 * k2 * s[1].at(i1, i2) +
                                     k2 * k1 * s[2].at(i1, i2) + k2 * k2 * s[3].at(i1, i2);
      p.at(i1, i2) = -q / kk;
    }
  }
  return inverse_fft(p);
}

}  // namespace ns2d
