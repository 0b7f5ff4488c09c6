#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "ns2d/core.hpp"

namespace ns2d {

/// Half-plane spectrum of a real field: n x (n/2+1) complex coefficients,
/// unnormalized FFTW forward convention. Row i1 carries integer mode
/// grid.mode(i1); column i2 carries integer mode i2 in [0, n/2].
struct SpectralScalar {
  Grid grid;
  std::vector<std::complex<double>> coeff;

  SpectralScalar() = default;
  explicit SpectralScalar(const Grid& g)
      : grid(g), coeff(static_cast<std::size_t>(g.n) * (g.n / 2 + 1)) {}

  int cols() const { return grid.n / 2 + 1; }
  std::complex<double>& at(int i1, int i2) { return coeff[static_cast<std::size_t>(i1) * cols() + i2]; }
  std::complex<double> at(int i1, int i2) const { return coeff[static_cast<std::size_t>(i1) * cols() + i2]; }

  /// Multiplicity of a half-plane column under Hermitian symmetry.
  double weight(int i2) const { return (i2 == 0 || i2 == grid.n / 2) ? 1.0 : 2.0; }
};

namespace detail {

// One cached plan pair per resolution. FFTW planning is not thread-safe and
// plans own their buffers, so a single mutex serializes all transforms.
struct PlanSet {
  int n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  explicit PlanSet(int n_) : n(n_) {
    real = fftw_alloc_real(static_cast<std::size_t>(n) * n);
    cplx = fftw_alloc_complex(static_cast<std::size_t>(n) * (n / 2 + 1));
    fwd = fftw_plan_dft_r2c_2d(n, n, real, cplx, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_2d(n, n, cplx, real, FFTW_ESTIMATE);
  }
  ~PlanSet() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(real);
    fftw_free(cplx);
  }
  PlanSet(const PlanSet&) = delete;
  PlanSet& operator=(const PlanSet&) = delete;
};

inline std::mutex& fft_mutex() {
  static std::mutex m;
  return m;
}

inline PlanSet& plans_for(int n) {
  static std::map<int, std::unique_ptr<PlanSet>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<PlanSet>(n)).first;
  return *it->second;
}

}  // namespace detail

inline SpectralScalar forward_fft(const ScalarField& f) {
  const int n = f.grid.n;
  SpectralScalar out(f.grid);
  std::lock_guard<std::mutex> lock(detail::fft_mutex());
  auto& p = detail::plans_for(n);
  std::copy(f.values.begin(), f.values.end(), p.real);
  fftw_execute(p.fwd);
  const std::size_t m = out.coeff.size();
  for (std::size_t i = 0; i < m; ++i) out.coeff[i] = {p.cplx[i][0], p.cplx[i][1]};
  return out;
}

inline ScalarField inverse_fft(const SpectralScalar& s) {
  const int n = s.grid.n;
  ScalarField out(s.grid);
  std::lock_guard<std::mutex> lock(detail::fft_mutex());
  auto& p = detail::plans_for(n);
  const std::size_t m = s.coeff.size();
  for (std::size_t i = 0; i < m; ++i) {
    p.cplx[i][0] = s.coeff[i].real();
    p.cplx[i][1] = s.coeff[i].imag();
  }
  fftw_execute(p.bwd);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = p.real[i] * scale;
  return out;
}

/// Coefficient-side value of the integral of f^2 over the torus (Parseval).
inline double coefficient_energy(const SpectralScalar& s) {
  const int n = s.grid.n;
  const double l2 = s.grid.length * s.grid.length;
  double acc = 0.0;
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 <= n / 2; ++i2)
      acc += s.weight(i2) * std::norm(s.at(i1, i2));
  return acc * l2 / (static_cast<double>(n) * n * n * n);
}

}  // namespace ns2d
