#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "ns2d/core.hpp"
#include "ns2d/fft.hpp"
#include "ns2d/forcing.hpp"
#include "ns2d/spectral.hpp"

namespace ns2d {

enum class InitialKind { Zero, TaylorGreen, RandomDivFree, SingleMode };

struct InitialCondition {
  InitialKind kind = InitialKind::Zero;
  std::uint64_t seed = 0;
  double spectrum_slope = -2.0;  // RandomDivFree amplitude law |m|^slope
  int k1 = 1, k2 = 0;            // SingleMode wave vector
  Vec2 mean_velocity{0.0, 0.0};  // uniform drift added to TaylorGreen

  VectorField realize(const Grid& g) const;
};

struct SolverConfig {
  Grid grid;
  double dt = 1e-3;
  double t_end = 1.0;
  double viscosity = 1.0;  // the solver is normalized to viscosity 1
  ForcingSpec forcing;
  InitialCondition initial;
  int output_every = 1;
  bool nonlinearity = true;
  double snapshot_start = 0.0;  // discard snapshots before this time
  double cfl_factor = 0.5;

  void validate() const {
    if (dt <= 0.0) throw std::invalid_argument("SolverConfig: dt must be positive");
    if (t_end < 0.0) throw std::invalid_argument("SolverConfig: t_end must be >= 0");
    if (viscosity != 1.0)
      throw std::invalid_argument("SolverConfig: viscosity is fixed at 1 in this solver");
    if (output_every < 1) throw std::invalid_argument("SolverConfig: output_every must be >= 1");
    forcing.validate();
  }
};

struct Snapshot {
  double t = 0.0;
  VectorField u;
  ScalarField p;
};

/// Per-step energy bookkeeping. `diss_rate` and `work_rate` are the step's
/// exact spectral energy budget divided by dt, so
///   (E_next - E_prev)/dt + diss_rate - work_rate = 0
/// up to roundoff; the remaining columns are instantaneous diagnostics.
struct EnergyRow {
  double t = 0.0;           // time at the end of the step
  double kinetic = 0.0;     // (1/2)||u||_2^2
  double diss_rate = 0.0;
  double work_rate = 0.0;
  double grad_norm_sq = 0.0;    // ||grad u||_2^2 at t
  double forcing_power = 0.0;   // int F : grad u dx at t
  double nl_transfer = 0.0;     // <u, P div(u x u)> at t; zero up to roundoff
  double f_l2_sq = 0.0;         // ||F(t)||_2^2
};

struct CflViolation : std::runtime_error {
  double max_speed;
  double dt_limit;
  CflViolation(double speed, double limit)
      : std::runtime_error("CFL violation: dt exceeds " + std::to_string(limit) +
                           " at max speed " + std::to_string(speed)),
        max_speed(speed),
        dt_limit(limit) {}
};

struct Trajectory {
  SolverConfig config;
  std::vector<Snapshot> snapshots;
  std::vector<EnergyRow> energy_log;
  bool aborted = false;
  std::string abort_reason;
  std::size_t last_valid_snapshot = 0;
};

namespace detail {

struct SpectralState {
  SpectralScalar u1, u2;
};

/// phi1(a) = (1 - e^-a)/a and phi2(a) = (e^-a - 1 + a)/a^2 with stable
/// series for small arguments.
inline double phi1(double a) {
  if (a < 1e-5) return 1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0;
  return (1.0 - std::exp(-a)) / a;
}
inline double phi2(double a) {
  if (a < 1e-5) return 0.5 - a / 6.0 + a * a / 24.0 - a * a * a / 120.0;
  return (std::exp(-a) - 1.0 + a) / (a * a);
}

inline double mode_ksq(const Grid& g, int i1, int i2) {
  const double k1 = g.wavenumber(deriv_mode_row(g, i1));
  const double k2 = g.wavenumber(deriv_mode_col(g, i2));
  return k1 * k1 + k2 * k2;
}

/// Weighted spectral inner product equal to the physical integral of a.b.
inline double spectral_inner(const SpectralScalar& a, const SpectralScalar& b) {
  const Grid& g = a.grid;
  double acc = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 <= g.n / 2; ++i2)
      acc += a.weight(i2) * (a.at(i1, i2) * std::conj(b.at(i1, i2))).real();
  const double n = g.n;
  return acc * g.length * g.length / (n * n * n * n);
}

inline double state_energy(const SpectralState& s) {
  return 0.5 * (coefficient_energy(s.u1) + coefficient_energy(s.u2));
}

inline double state_grad_energy(const SpectralState& s) {
  const Grid& g = s.u1.grid;
  double acc = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 <= g.n / 2; ++i2) {
      const double kk = mode_ksq(g, i1, i2);
      acc += s.u1.weight(i2) * kk * (std::norm(s.u1.at(i1, i2)) + std::norm(s.u2.at(i1, i2)));
    }
  const double n = g.n;
  return acc * g.length * g.length / (n * n * n * n);
}

}  // namespace detail

/// Stepper with cached spectra; owns no dynamics beyond the current config.
class NavierStokesStepper {
 public:
  explicit NavierStokesStepper(const SolverConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.forcing.kind != ForcingKind::Zero) {
      // Modulated forcing is separable, F(t) = cos(w t) F0, so the base
      // pattern is cached in either case.
      ForcingSpec base = cfg_.forcing;
      base.time_dependence = TimeDependence::Static;
      TensorField F = generate_forcing(base, cfg_.grid, 0.0);
      static_forcing_ = F;
      static_forcing_spectra_.emplace();
      for (int c = 0; c < 4; ++c) (*static_forcing_spectra_)[c] = dealias(forward_fft(F.comp[c]));
      static_f_l2_sq_ = l2_norm_sq(F);
    }
  }

  const SolverConfig& config() const { return cfg_; }

  detail::SpectralState lift(const VectorField& u) const {
    detail::SpectralState s{forward_fft(u.comp[0]), forward_fft(u.comp[1])};
    dealias_inplace(s.u1);
    dealias_inplace(s.u2);
    leray_project_inplace(s.u1, s.u2);
    return s;
  }

  VectorField lower(const detail::SpectralState& s) const {
    VectorField u(cfg_.grid);
    u.comp[0] = inverse_fft(s.u1);
    u.comp[1] = inverse_fft(s.u2);
    return u;
  }

  /// Explicit term N(u,t) = -P div(u x u + F), dealiased and projected.
  /// Also reports max |u| (for CFL) and the advective energy transfer.
  detail::SpectralState explicit_term(const detail::SpectralState& s, double t, double* max_speed,
                                      double* nl_transfer) const {
    const Grid& g = cfg_.grid;
    detail::SpectralState N{SpectralScalar(g), SpectralScalar(g)};

    detail::SpectralState adv{SpectralScalar(g), SpectralScalar(g)};
    bool have_adv = false;
    if (cfg_.nonlinearity || max_speed != nullptr) {
      VectorField u = lower(s);
      if (max_speed) *max_speed = max_norm(u);
      if (cfg_.nonlinearity) {
        TensorField T = velocity_stress(u);
        SpectralScalar t11 = dealias(forward_fft(T.comp[0]));
        SpectralScalar t12 = dealias(forward_fft(T.comp[1]));
        SpectralScalar t22 = dealias(forward_fft(T.comp[3]));
        // (div T)_i = d1 T_i1 + d2 T_i2, with T symmetric
        adv.u1 = derivative(t11, 0);
        SpectralScalar b = derivative(t12, 1);
        for (std::size_t i = 0; i < adv.u1.coeff.size(); ++i) adv.u1.coeff[i] = -(adv.u1.coeff[i] + b.coeff[i]);
        adv.u2 = derivative(t12, 0);
        SpectralScalar d = derivative(t22, 1);
        for (std::size_t i = 0; i < adv.u2.coeff.size(); ++i) adv.u2.coeff[i] = -(adv.u2.coeff[i] + d.coeff[i]);
        leray_project_inplace(adv.u1, adv.u2);
        have_adv = true;
      }
    }
    if (have_adv) {
      N = adv;
      if (nl_transfer)
        *nl_transfer = detail::spectral_inner(s.u1, adv.u1) + detail::spectral_inner(s.u2, adv.u2);
    } else if (nl_transfer) {
      *nl_transfer = 0.0;
    }

    if (cfg_.forcing.kind != ForcingKind::Zero) {
      const auto& f = *static_forcing_spectra_;
      const double env = cfg_.forcing.is_static() ? 1.0 : std::cos(cfg_.forcing.frequency * t);
      SpectralScalar a = derivative(f[0], 0);
      SpectralScalar b = derivative(f[1], 1);
      SpectralScalar c = derivative(f[2], 0);
      SpectralScalar d = derivative(f[3], 1);
      SpectralScalar g1(g), g2(g);
      for (std::size_t i = 0; i < a.coeff.size(); ++i) {
        g1.coeff[i] = -env * (a.coeff[i] + b.coeff[i]);
        g2.coeff[i] = -env * (c.coeff[i] + d.coeff[i]);
      }
      leray_project_inplace(g1, g2);
      for (std::size_t i = 0; i < N.u1.coeff.size(); ++i) {
        N.u1.coeff[i] += g1.coeff[i];
        N.u2.coeff[i] += g2.coeff[i];
      }
    }
    return N;
  }

  /// One ETD2RK step of size dt from time t. Throws CflViolation before
  /// advancing when dt exceeds the advective limit.
  detail::SpectralState advance(const detail::SpectralState& s, double t, double dt,
                                EnergyRow* row) const {
    const Grid& g = cfg_.grid;
    double max_speed = 0.0, nl_transfer = 0.0;
    detail::SpectralState N0 = explicit_term(s, t, &max_speed, &nl_transfer);
    if (cfg_.nonlinearity && max_speed > 0.0) {
      const double limit = cfg_.cfl_factor * g.spacing() / max_speed;
      if (dt > limit) throw CflViolation(max_speed, limit);
    }

    // predictor: a = E u + dt phi1 N0
    detail::SpectralState pred{SpectralScalar(g), SpectralScalar(g)};
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 <= g.n / 2; ++i2) {
        const double a = detail::mode_ksq(g, i1, i2) * dt;
        const double E = std::exp(-a);
        const double p1 = detail::phi1(a) * dt;
        pred.u1.at(i1, i2) = E * s.u1.at(i1, i2) + p1 * N0.u1.at(i1, i2);
        pred.u2.at(i1, i2) = E * s.u2.at(i1, i2) + p1 * N0.u2.at(i1, i2);
      }

    detail::SpectralState N1 = explicit_term(pred, t + dt, nullptr, nullptr);

    detail::SpectralState next{SpectralScalar(g), SpectralScalar(g)};
    double diss_acc = 0.0, work_acc = 0.0;
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 <= g.n / 2; ++i2) {
        const double a = detail::mode_ksq(g, i1, i2) * dt;
        const double E = std::exp(-a);
        const double p1 = detail::phi1(a) * dt;
        const double p2 = detail::phi2(a) * dt;
        const double w = next.u1.weight(i2);
        for (int c = 0; c < 2; ++c) {
          const SpectralScalar& uc = c == 0 ? s.u1 : s.u2;
          const SpectralScalar& n0 = c == 0 ? N0.u1 : N0.u2;
          const SpectralScalar& n1 = c == 0 ? N1.u1 : N1.u2;
          SpectralScalar& out = c == 0 ? next.u1 : next.u2;
          const std::complex<double> carried = E * uc.at(i1, i2);
          const std::complex<double> incr =
              p1 * n0.at(i1, i2) + p2 * (n1.at(i1, i2) - n0.at(i1, i2));
          out.at(i1, i2) = carried + incr;
          diss_acc += w * (1.0 - E * E) * std::norm(uc.at(i1, i2));
          work_acc += w * ((carried * std::conj(incr)).real() + 0.5 * std::norm(incr));
        }
      }
    if (row) {
      const double nn = static_cast<double>(g.n);
      const double scale = g.length * g.length / (nn * nn * nn * nn);
      row->t = t + dt;
      row->kinetic = detail::state_energy(next);
      row->diss_rate = 0.5 * diss_acc * scale / dt;
      row->work_rate = work_acc * scale / dt;
      row->grad_norm_sq = detail::state_grad_energy(next);
      row->nl_transfer = nl_transfer;
      row->f_l2_sq = forcing_l2_sq(t + dt);
      row->forcing_power = forcing_power(next, t + dt);
    }
    return next;
  }

  ScalarField pressure(const detail::SpectralState& s, double t) const {
    VectorField u = lower(s);
    TensorField F = forcing_at(t);
    return pressure_from_state(u, F);
  }

  TensorField forcing_at(double t) const {
    if (cfg_.forcing.kind == ForcingKind::Zero) return TensorField(cfg_.grid);
    if (cfg_.forcing.is_static()) return *static_forcing_;
    TensorField F = *static_forcing_;
    const double env = std::cos(cfg_.forcing.frequency * t);
    for (auto& c : F.comp)
      for (double& v : c.values) v *= env;
    return F;
  }

  double forcing_l2_sq(double t) const {
    if (cfg_.forcing.kind == ForcingKind::Zero) return 0.0;
    if (cfg_.forcing.is_static()) return static_f_l2_sq_;
    const double env = std::cos(cfg_.forcing.frequency * t);
    return static_f_l2_sq_ * env * env;
  }

  /// int F : grad u dx evaluated spectrally.
  double forcing_power(const detail::SpectralState& s, double t) const {
    if (cfg_.forcing.kind == ForcingKind::Zero) return 0.0;
    const auto& f = *static_forcing_spectra_;
    const double env = cfg_.forcing.is_static() ? 1.0 : std::cos(cfg_.forcing.frequency * t);
    // (grad u)_ij = d_j u_i
    double acc = 0.0;
    acc += detail::spectral_inner(f[0], derivative(s.u1, 0));
    acc += detail::spectral_inner(f[1], derivative(s.u1, 1));
    acc += detail::spectral_inner(f[2], derivative(s.u2, 0));
    acc += detail::spectral_inner(f[3], derivative(s.u2, 1));
    return env * acc;
  }

 private:
  SolverConfig cfg_;
  std::optional<TensorField> static_forcing_;
  std::optional<std::array<SpectralScalar, 4>> static_forcing_spectra_;
  double static_f_l2_sq_ = 0.0;
};

inline VectorField InitialCondition::realize(const Grid& g) const {
  VectorField u(g);
  switch (kind) {
    case InitialKind::Zero:
      break;
    case InitialKind::TaylorGreen: {
      for (int i1 = 0; i1 < g.n; ++i1) {
        const double x = g.coord(i1);
        for (int i2 = 0; i2 < g.n; ++i2) {
          const double y = g.coord(i2);
          u.comp[0].at(i1, i2) = std::sin(x) * std::cos(y) + mean_velocity.x;
          u.comp[1].at(i1, i2) = -std::cos(x) * std::sin(y) + mean_velocity.y;
        }
      }
      break;
    }
    case InitialKind::RandomDivFree: {
      const double slope = spectrum_slope;
      for (int c = 0; c < 2; ++c)
        u.comp[c] = detail::synthesize_random(g, seed, 200 + static_cast<std::uint64_t>(c), g.n / 3,
                                              [slope](double m) { return std::pow(m, slope); });
      u = leray_project(u);
      const double m = max_norm(u);
      if (m > 0.0)
        for (auto& comp : u.comp)
          for (double& v : comp.values) v /= m;
      break;
    }
    case InitialKind::SingleMode: {
      const double kk = std::hypot(static_cast<double>(k1), static_cast<double>(k2));
      if (kk == 0.0) throw std::invalid_argument("SingleMode initial condition needs k != 0");
      const double e1 = -k2 / kk, e2 = k1 / kk;  // unit vector orthogonal to k
      for (int i1 = 0; i1 < g.n; ++i1) {
        const double x = g.coord(i1);
        for (int i2 = 0; i2 < g.n; ++i2) {
          const double y = g.coord(i2);
          const double s = std::sin(g.wavenumber(k1) * x + g.wavenumber(k2) * y);
          u.comp[0].at(i1, i2) = e1 * s;
          u.comp[1].at(i1, i2) = e2 * s;
        }
      }
      break;
    }
  }
  return u;
}

/// Integrate the system from t=0 to t_end. Snapshots are emitted every
/// `output_every` accepted steps (and at t=0 and t_end) once t reaches
/// `snapshot_start`. On CFL rejection the step is retried with half the dt;
/// on non-finite energy the run aborts, retaining the trajectory so far.
inline Trajectory run(const SolverConfig& cfg_in) {
  SolverConfig cfg = cfg_in;
  cfg.validate();
  NavierStokesStepper stepper(cfg);
  Trajectory traj;
  traj.config = cfg;

  detail::SpectralState state = stepper.lift(cfg.initial.realize(cfg.grid));
  double t = 0.0;
  double dt = cfg.dt;

  auto emit = [&](double time) {
    Snapshot snap;
    snap.t = time;
    snap.u = stepper.lower(state);
    snap.p = stepper.pressure(state, time);
    traj.snapshots.push_back(std::move(snap));
    traj.last_valid_snapshot = traj.snapshots.size() - 1;
  };

  if (cfg.snapshot_start <= 0.0) emit(0.0);
  {
    EnergyRow init;
    init.t = 0.0;
    init.kinetic = detail::state_energy(state);
    init.grad_norm_sq = detail::state_grad_energy(state);
    init.f_l2_sq = stepper.forcing_l2_sq(0.0);
    init.forcing_power = stepper.forcing_power(state, 0.0);
    traj.energy_log.push_back(init);
  }
  if (cfg.t_end == 0.0) return traj;

  const double t_eps = 1e-12 * std::max(1.0, cfg.t_end);
  long step_count = 0;
  while (t < cfg.t_end - t_eps) {
    const double step_dt = std::min(dt, cfg.t_end - t);
    EnergyRow row;
    try {
      detail::SpectralState next = stepper.advance(state, t, step_dt, &row);
      if (!std::isfinite(row.kinetic)) {
        traj.aborted = true;
        traj.abort_reason = "non-finite energy at t=" + std::to_string(t + step_dt);
        break;
      }
      state = std::move(next);
      t += step_dt;
      ++step_count;
      traj.energy_log.push_back(row);
    } catch (const CflViolation&) {
      dt *= 0.5;
      if (dt < 1e-10) {
        traj.aborted = true;
        traj.abort_reason = "dt underflow during CFL adaptation";
        break;
      }
      continue;
    }
    const bool due = (step_count % cfg.output_every == 0) || t >= cfg.t_end - t_eps;
    if (due && t >= cfg.snapshot_start - t_eps) emit(t);
  }
  return traj;
}

/// Max over logged steps of the relative residual of the step energy budget
/// (E_j - E_{j-1})/dt + diss_rate_j - work_rate_j = 0.
inline double energy_audit(const Trajectory& traj) {
  if (traj.energy_log.size() < 2)
    throw std::invalid_argument("energy_audit: trajectory has no logged steps");
  double worst = 0.0;
  for (std::size_t j = 1; j < traj.energy_log.size(); ++j) {
    const EnergyRow& r = traj.energy_log[j];
    const EnergyRow& prev = traj.energy_log[j - 1];
    const double dt = r.t - prev.t;
    if (dt <= 0.0) continue;
    const double resid = std::abs((r.kinetic - prev.kinetic) / dt + r.diss_rate - r.work_rate) /
                         (1.0 + std::abs(r.kinetic));
    worst = std::max(worst, resid);
  }
  return worst;
}

}  // namespace ns2d
