#pragma once

#include <cmath>
#include <map>
#include <set>

#include "ns2d/campanato.hpp"
#include "ns2d/io.hpp"
#include "ns2d/iteration.hpp"

namespace ns2d {

// ---------------------------------------------------------------------------
// Campanato report
// ---------------------------------------------------------------------------

struct CampanatoRow {
  Vec2 x0;
  double t0 = 0.0;
  double radius = 0.0;
  double phi = std::numeric_limits<double>::quiet_NaN();
  double psi = std::numeric_limits<double>::quiet_NaN();
  double d_pressure = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
};

struct CampanatoFitRow {
  Vec2 x0;
  double t0 = 0.0;
  bool defined = false;
  DecayFit fit;
  GammaEstimate gamma_est;
  bool coarse_defined = false;
  double slope_coarse = 0.0;  // same fit on 2x node-decimated quadratures
};

struct CampanatoReport {
  double gamma = 0.5;
  double tau = 0.5;
  double margin_s = 0.0;
  std::vector<double> ladder;
  std::vector<CampanatoRow> rows;
  std::vector<CampanatoFitRow> fits;
  R0Selection r0;
  SeminormResult m2;  // seminorm of the forcing at `gamma`

  struct GammaStats {
    std::size_t defined = 0;
    std::size_t clipped = 0;
    double min = 0.0, median = 0.0, max = 0.0;
  };
  GammaStats gamma_stats() const {
    GammaStats s;
    std::vector<double> vals;
    for (const auto& f : fits)
      if (f.defined) {
        vals.push_back(f.gamma_est.value);
        if (f.gamma_est.clipped) ++s.clipped;
      }
    s.defined = vals.size();
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      s.min = vals.front();
      s.max = vals.back();
      s.median = vals[vals.size() / 2];
    }
    return s;
  }

  /// Max measured Phi per ladder radius (for envelope comparisons).
  std::map<double, double> phi_max_by_radius() const {
    std::map<double, double> out;
    for (const auto& r : rows)
      if (std::isfinite(r.phi)) {
        auto [it, fresh] = out.emplace(r.radius, r.phi);
        if (!fresh) it->second = std::max(it->second, r.phi);
      }
    return out;
  }
};

namespace detail {

/// Decimate a quadrature to every second node per axis (cell volume x4);
/// empty result when the guard fails.
inline std::optional<CylinderQuadrature> decimate_quadrature(const CylinderQuadrature& q, int n) {
  CylinderQuadrature out = q;
  out.nodes.clear();
  for (std::size_t node : q.nodes) {
    const int i1 = static_cast<int>(node) / n;
    const int i2 = static_cast<int>(node) % n;
    if (i1 % 2 == 0 && i2 % 2 == 0) out.nodes.push_back(node);
  }
  out.cell_volume = 4.0 * q.cell_volume;
  if (out.nodes.size() < CylinderQuadrature::kMinNodes) return std::nullopt;
  return out;
}

}  // namespace detail

/// Compute the full per-cylinder functional report over a sampled
/// trajectory: Phi/Psi/D/Theta rows on a dyadic ladder, per-center decay
/// fits with a node-decimated companion, the forcing seminorm, and the
/// R0 selection.
template <class USampler, class PSampler, class FSampler>
CampanatoReport run_diagnostics(const USampler& u, const PSampler& p, const FSampler& fstress,
                                const DiagnosticsOptions& opts) {
  const Grid& grid = u.grid();
  const std::vector<double>& times = u.times();
  if (times.size() < 2) throw std::invalid_argument("run_diagnostics: trajectory too short");

  CampanatoReport rep;
  rep.gamma = opts.gamma;
  rep.tau = opts.tau;
  rep.margin_s = opts.margin_s;

  // dyadic ladder from the largest interior radius
  const double t_span = times.back() - std::max(opts.margin_s, times.front());
  double r_top = std::min(0.25 * grid.length, std::sqrt(std::max(t_span, 0.0)) * 0.999);
  if (r_top <= 0.0) throw ResolutionGuardError("no admissible cylinder radius in the window");
  for (int j = 0; j < opts.ladder_depth; ++j) rep.ladder.push_back(r_top * std::pow(0.5, j));

  const auto t0s = admissible_top_times(times, opts.margin_s, r_top, opts.max_top_times);
  if (t0s.empty()) throw ResolutionGuardError("no admissible top-times in the window");
  const auto centers = center_lattice(grid, r_top * opts.stride_factor);

  // quadratures for every (center, t0, rung) plus the tau-scaled companions
  struct Slot {
    int center = 0, t0 = 0, rung = 0;
    bool inner = false;  // radius tau*R (feeds Theta)
  };
  std::vector<CylinderQuadrature> quads;
  std::vector<Slot> slots;
  auto try_push = [&](int ci, int ti, int rj, bool inner) {
    const double r = rep.ladder[rj] * (inner ? opts.tau : 1.0);
    try {
      quads.push_back(make_quadrature(grid, times, {centers[ci], t0s[ti], r}));
      slots.push_back({ci, ti, rj, inner});
    } catch (const ResolutionGuardError&) {
    } catch (const std::invalid_argument&) {
    }
  };
  for (int ci = 0; ci < static_cast<int>(centers.size()); ++ci)
    for (int ti = 0; ti < static_cast<int>(t0s.size()); ++ti)
      for (int rj = 0; rj < static_cast<int>(rep.ladder.size()); ++rj) {
        try_push(ci, ti, rj, false);
        try_push(ci, ti, rj, true);
      }
  if (quads.empty()) throw ResolutionGuardError("no cylinder passes the resolution guard");

  const auto phis = phi_batch<Vec2>(u, quads);
  const auto psis = psi_batch<Vec2>(u, quads);
  const auto ds = d_pressure_batch(p, quads);

  // index (center,t0,rung,inner) -> quad position
  std::map<std::tuple<int, int, int, bool>, std::size_t> lookup;
  for (std::size_t i = 0; i < slots.size(); ++i)
    lookup[{slots[i].center, slots[i].t0, slots[i].rung, slots[i].inner}] = i;

  for (int ci = 0; ci < static_cast<int>(centers.size()); ++ci)
    for (int ti = 0; ti < static_cast<int>(t0s.size()); ++ti) {
      std::vector<std::pair<double, double>> fit_pts;
      std::vector<std::size_t> fit_quads;
      for (int rj = 0; rj < static_cast<int>(rep.ladder.size()); ++rj) {
        auto it = lookup.find({ci, ti, rj, false});
        if (it == lookup.end()) continue;
        const std::size_t qi = it->second;
        CampanatoRow row;
        row.x0 = centers[ci];
        row.t0 = t0s[ti];
        row.radius = rep.ladder[rj];
        row.phi = phis[qi];
        row.psi = psis[qi];
        row.d_pressure = ds[qi];
        auto inner = lookup.find({ci, ti, rj, true});
        if (inner != lookup.end()) row.theta = phis[inner->second] + ds[qi];
        rep.rows.push_back(row);
        fit_pts.emplace_back(row.radius, row.phi);
        fit_quads.push_back(qi);
      }
      CampanatoFitRow fit;
      fit.x0 = centers[ci];
      fit.t0 = t0s[ti];
      try {
        fit.fit = fit_decay_exponent(fit_pts);
        fit.gamma_est = gamma_from_slope(fit.fit.slope);
        fit.defined = true;
      } catch (const std::invalid_argument&) {
      }
      if (fit.defined) {
        // refinement companion: same ladder on 2x-decimated quadratures
        std::vector<CylinderQuadrature> coarse;
        for (std::size_t qi : fit_quads)
          if (auto cq = detail::decimate_quadrature(quads[qi], grid.n)) coarse.push_back(*cq);
        if (coarse.size() >= 4) {
          const auto cphis = phi_batch<Vec2>(u, coarse);
          std::vector<std::pair<double, double>> cpts;
          for (std::size_t i = 0; i < coarse.size(); ++i)
            cpts.emplace_back(coarse[i].cylinder.r, cphis[i]);
          try {
            fit.slope_coarse = fit_decay_exponent(cpts).slope;
            fit.coarse_defined = true;
          } catch (const std::invalid_argument&) {
          }
        }
      }
      rep.fits.push_back(fit);
    }

  // forcing seminorm over per-radius lattices
  {
    std::vector<ParabolicCylinder> family;
    for (double r : rep.ladder)
      for (const Vec2& c : center_lattice(grid, r * opts.stride_factor))
        for (double t0 : admissible_top_times(times, opts.margin_s, r, opts.max_top_times))
          family.push_back({c, t0, r});
    rep.m2 = m2gamma_seminorm(fstress, opts.gamma, family);
  }

  rep.r0 = select_r0(u, opts.tau, opts.margin_s, rep.ladder, opts.stride_factor,
                     opts.max_top_times);
  return rep;
}

// ---------------------------------------------------------------------------
// Lq -> M_{2,gamma} embedding check
// ---------------------------------------------------------------------------

struct LqEmbeddingReport {
  double q = 0.0;
  double gamma = 0.0;  // 1 - 4/q
  double lq_norm = 0.0;
  double seminorm = 0.0;
  ParabolicCylinder argmax;
  std::size_t cylinders = 0;
  bool success = false;
};

/// Measure ||F||_{L^q} over the sampled window and the M_{2,gamma} seminorm
/// at the embedding exponent gamma = 1 - 4/q over the given family.
template <class FSampler>
LqEmbeddingReport verify_lq_embedding(const FSampler& f, double q,
                                      std::span<const ParabolicCylinder> family) {
  if (!(q > 4.0)) throw std::invalid_argument("verify_lq_embedding: q must exceed 4");
  LqEmbeddingReport rep;
  rep.q = q;
  rep.gamma = 1.0 - 4.0 / q;

  const Grid& g = f.grid();
  const std::vector<double>& ts = f.times();
  double acc = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const double w = j > 0 ? ts[j] - ts[j - 1] : ts[1] - ts[0];
    double slice = 0.0;
    for (std::size_t node = 0; node < g.node_count(); ++node)
      slice += std::pow(osc_norm_sq(f.value(j, node)), 0.5 * q);
    acc += slice * w;
  }
  rep.lq_norm = std::pow(acc * g.cell_volume(), 1.0 / q);

  SeminormResult sem = m2gamma_seminorm(f, rep.gamma, family);
  rep.seminorm = sem.value;
  rep.argmax = sem.argmax;
  rep.cylinders = sem.evaluated;
  rep.success = std::isfinite(rep.seminorm) && sem.evaluated > 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Iteration pipeline over a finished report
// ---------------------------------------------------------------------------

struct EnvelopeRow {
  double rho = 0.0;
  double phi_measured_max = 0.0;
  double env_first_pass = 0.0;
  double env_improved = 0.0;
};

struct IterateOutcome {
  BasicEstimateOutcome basic;
  double c_used = 0.0;
  double m = 0.0;            // forcing seminorm squared
  double tau_formula = 0.0;
  bool tau_capped = false;
  double tau_iter = 0.0;     // dyadic rounding of the formula value
  std::optional<double> r0;
  double worst_psi_at_r0 = 0.0;
  double theta0 = 0.0;
  double h_emp = 0.0;        // max Phi(R)/R^{1+gamma} over rungs <= r0
  double h1_emp = 0.0;       // max Psi(R)/R^{1+gamma} over rungs <= r0
  IterationResult iteration;
  std::vector<EnvelopeRow> table;
  bool measured_below_envelope = false;
};

/// Assemble the decay-iteration summary from measured report rows: the
/// empirical basic-estimate constant on dyadic rung triples, the derived
/// contraction factor, R0, the bound constants, and the envelope-versus-
/// measured-Phi table.
inline IterateOutcome run_iterate(const CampanatoReport& rep, double c_override = 0.0) {
  IterateOutcome out;
  const double gamma = rep.gamma;
  out.m = rep.m2.value * rep.m2.value;

  // group rows per (center, t0) keyed by quantized coordinates
  std::map<std::tuple<long long, long long, long long>, std::map<double, const CampanatoRow*>>
      groups;
  auto key_of = [](const CampanatoRow& r) {
    auto q = [](double v) { return static_cast<long long>(std::llround(v * 1e9)); };
    return std::make_tuple(q(r.x0.x), q(r.x0.y), q(r.t0));
  };
  for (const auto& r : rep.rows) groups[key_of(r)][r.radius] = &r;

  // descending rung list
  std::vector<double> rungs = rep.ladder;
  std::sort(rungs.begin(), rungs.end(), std::greater<>());

  // empirical constant from consecutive-rung triples (ratio exactly 1/2)
  std::vector<BasicEstimateSample> samples;
  for (const auto& [key, by_radius] : groups) {
    for (std::size_t i = 0; i + 2 < rungs.size(); ++i) {
      auto a = by_radius.find(rungs[i]);
      auto b = by_radius.find(rungs[i + 1]);
      auto c = by_radius.find(rungs[i + 2]);
      if (a == by_radius.end() || b == by_radius.end() || c == by_radius.end()) continue;
      BasicEstimateSample s;
      s.r = rungs[i];
      s.phi_r = a->second->phi;
      s.psi_r = a->second->psi;
      s.d_r = a->second->d_pressure;
      s.phi_tau_r = b->second->phi;
      s.psi_tau_r = b->second->psi;
      s.d_tau_r = b->second->d_pressure;
      s.phi_tau2_r = c->second->phi;
      if (!std::isfinite(s.phi_r + s.psi_r + s.d_r + s.phi_tau_r + s.psi_tau_r + s.d_tau_r +
                         s.phi_tau2_r))
        continue;
      samples.push_back(s);
    }
  }
  out.basic = check_basic_estimate(samples, 0.5, gamma, out.m);
  out.c_used = c_override > 0.0 ? c_override : (out.basic.constants.empty() ? 1.0 : out.basic.max_c);

  TauSelection sel = tau_from_gamma(out.c_used, gamma);
  out.tau_formula = sel.tau;
  out.tau_capped = sel.capped;
  out.tau_iter = 0.5;
  while (out.tau_iter > sel.tau) out.tau_iter *= 0.5;

  // largest rung with sup Psi < tau^4, constrained so r0/tau stays on the
  // ladder
  const double thresh = std::pow(out.tau_iter, 4);
  const int tau_steps = static_cast<int>(std::llround(std::log2(1.0 / out.tau_iter)));
  for (std::size_t i = static_cast<std::size_t>(tau_steps); i < rungs.size(); ++i) {
    double worst = 0.0;
    bool any = false;
    for (const auto& [key, by_radius] : groups) {
      auto it = by_radius.find(rungs[i]);
      if (it == by_radius.end() || !std::isfinite(it->second->psi)) continue;
      worst = std::max(worst, it->second->psi);
      any = true;
    }
    if (any && worst < thresh) {
      out.r0 = rungs[i];
      out.worst_psi_at_r0 = worst;
      break;
    }
  }
  if (!out.r0) return out;

  const double r0 = *out.r0;
  const double r0_over_tau = r0 / out.tau_iter;
  for (const auto& [key, by_radius] : groups) {
    auto a = by_radius.find(r0);
    auto b = by_radius.find(r0_over_tau);
    if (a == by_radius.end() || b == by_radius.end()) continue;
    if (!std::isfinite(a->second->phi) || !std::isfinite(b->second->d_pressure)) continue;
    out.theta0 = std::max(out.theta0, a->second->phi + b->second->d_pressure);
  }
  for (const auto& r : rep.rows) {
    if (r.radius > r0 + 1e-12 || !std::isfinite(r.phi)) continue;
    const double denom = std::pow(r.radius, 1.0 + gamma);
    out.h_emp = std::max(out.h_emp, r.phi / denom);
    if (std::isfinite(r.psi)) out.h1_emp = std::max(out.h1_emp, r.psi / denom);
  }

  IterationParams params;
  params.gamma = gamma;
  params.c = out.c_used;
  params.m = out.m;
  params.r0 = r0;
  params.tau = out.tau_iter;
  params.theta0 = out.theta0;
  params.h_override = out.h_emp;
  params.h1_override = out.h1_emp;
  out.iteration = iterate_theta(params);

  auto phi_max = rep.phi_max_by_radius();
  out.measured_below_envelope = true;
  for (const auto& [rho, phimax] : phi_max) {
    if (rho > r0 + 1e-12) continue;
    EnvelopeRow row;
    row.rho = rho;
    row.phi_measured_max = phimax;
    row.env_first_pass = std::pow(rho, 1.0 + gamma) * out.iteration.h;
    row.env_improved = std::pow(rho, 2.0 + 2.0 * gamma) * out.iteration.h2;
    out.table.push_back(row);
    if (phimax > row.env_improved * (1.0 + 1e-9)) out.measured_below_envelope = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline void write_campanato_csv(const std::filesystem::path& path, const CampanatoReport& rep,
                                const std::string& timestamp) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << "# schema ns2d.campanato v1\n";
  if (!timestamp.empty()) out << "# generated " << timestamp << "\n";
  out << "x0_1,x0_2,t0,radius,phi,psi,d_pressure,theta,slope_phi,gamma_est,halfwidth\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& r : rep.rows)
    out << format_double(r.x0.x) << ',' << format_double(r.x0.y) << ',' << format_double(r.t0)
        << ',' << format_double(r.radius) << ',' << num(r.phi) << ',' << num(r.psi) << ','
        << num(r.d_pressure) << ',' << num(r.theta) << ",,,\n";
  for (const auto& f : rep.fits) {
    if (!f.defined) continue;
    out << format_double(f.x0.x) << ',' << format_double(f.x0.y) << ',' << format_double(f.t0)
        << ",0,,,,," << format_double(f.fit.slope) << ',' << format_double(f.gamma_est.value)
        << ',' << format_double(f.fit.halfwidth) << "\n";
  }
}

/// Parse a campanato CSV back into rows/fits (the inverse of the writer,
/// sufficient for the iterate pipeline). Rejects unknown schema versions.
inline void read_campanato_csv(const std::filesystem::path& path, CampanatoReport& rep) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  bool schema_ok = false;
  std::set<double> radii;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("# schema", 0) == 0) {
      if (line.find("ns2d.campanato v1") == std::string::npos)
        throw IoError("unsupported report schema: " + line);
      schema_ok = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(11);
    auto val = [&](int i) {
      return cells[i].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[i]);
    };
    const double radius = val(3);
    if (radius == 0.0) {
      CampanatoFitRow f;
      f.x0 = {val(0), val(1)};
      f.t0 = val(2);
      f.defined = true;
      f.fit.slope = val(8);
      f.gamma_est.value = val(9);
      f.fit.halfwidth = val(10);
      rep.fits.push_back(f);
    } else {
      CampanatoRow r;
      r.x0 = {val(0), val(1)};
      r.t0 = val(2);
      r.radius = radius;
      r.phi = val(4);
      r.psi = val(5);
      r.d_pressure = val(6);
      r.theta = val(7);
      rep.rows.push_back(r);
      radii.insert(radius);
    }
  }
  if (!schema_ok) throw IoError(path.string() + ": missing schema header");
  rep.ladder.assign(radii.rbegin(), radii.rend());
}

inline void write_diag_summary(const std::filesystem::path& path, const CampanatoReport& rep,
                               const std::string& timestamp) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << "# ns2d diagnostics summary\n";
  if (!timestamp.empty()) out << "# generated " << timestamp << "\n";
  out << "[format]\nschema = ns2d.diagsummary.v1\n\n";
  out << "[diagnostics]\n";
  out << "gamma = " << format_double(rep.gamma) << "\n";
  out << "tau = " << format_double(rep.tau) << "\n";
  out << "margin = " << format_double(rep.margin_s) << "\n";
  out << "ladder_top = " << format_double(rep.ladder.front()) << "\n";
  out << "ladder_depth = " << rep.ladder.size() << "\n\n";
  out << "[results]\n";
  if (rep.r0.r0)
    out << "r0 = " << format_double(*rep.r0.r0) << "\n";
  else
    out << "r0 = unresolved\n";
  out << "worst_psi = " << format_double(rep.r0.worst_psi) << "\n";
  out << "m2gamma = " << format_double(rep.m2.value) << "\n";
  out << "m2gamma_argmax = " << format_double(rep.m2.argmax.x0.x) << " "
      << format_double(rep.m2.argmax.x0.y) << " " << format_double(rep.m2.argmax.t0) << " "
      << format_double(rep.m2.argmax.r) << "\n";
  const auto gs = rep.gamma_stats();
  out << "fits_defined = " << gs.defined << "\n";
  out << "fits_clipped = " << gs.clipped << "\n";
  if (gs.defined > 0) {
    out << "gamma_est_min = " << format_double(gs.min) << "\n";
    out << "gamma_est_median = " << format_double(gs.median) << "\n";
    out << "gamma_est_max = " << format_double(gs.max) << "\n";
  } else {
    out << "gamma_est_median = undefined\n";
  }
  double sens = 0.0;
  std::size_t coarse = 0;
  for (const auto& f : rep.fits)
    if (f.defined && f.coarse_defined) {
      sens = std::max(sens, std::abs(f.fit.slope - f.slope_coarse));
      ++coarse;
    }
  out << "coarse_fits = " << coarse << "\n";
  out << "max_resolution_sensitivity = " << format_double(sens) << "\n";
}

}  // namespace ns2d
