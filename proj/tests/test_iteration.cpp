#include <catch2/catch_amalgamated.hpp>

#include "ns2d/campanato.hpp"
#include "ns2d/iteration.hpp"
#include "ns2d/trajectory_view.hpp"

using namespace ns2d;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("tau selection") {
  CHECK(tau_from_gamma(1.0, 0.0).tau == Catch::Approx(0.5).margin(1e-15));
  CHECK(tau_from_gamma(2.0, 0.5).tau == Catch::Approx(1.0 / 16.0).margin(1e-15));
  CHECK(tau_from_gamma(1.0, 0.5).tau == Catch::Approx(0.25).margin(1e-15));

  SECTION("small constants hit the documented cap") {
    TauSelection s = tau_from_gamma(0.4, 0.3);
    CHECK(s.capped);
    CHECK(s.tau == TauSelection::kTauMax);
  }

  SECTION("the contraction condition holds whenever uncapped") {
    for (double c : {0.6, 1.0, 2.0, 5.0, 20.0})
      for (double gamma : {0.0, 0.2, 0.5, 0.8, 0.95}) {
        TauSelection s = tau_from_gamma(c, gamma);
        if (!s.capped) CHECK(c * std::pow(s.tau, 1.0 - gamma) <= 0.5 + 1e-12);
      }
  }

  CHECK_THROWS_AS(tau_from_gamma(-1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(tau_from_gamma(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("theta recursion") {
  SECTION("one step by hand") {
    IterationParams p;
    p.gamma = 0.5;
    p.c = 1.0;
    p.m = 0.0;
    p.r0 = 1.0;
    p.tau = 0.5;  // vartheta = 1/4
    p.theta0 = 1.0;
    IterationResult res = iterate_theta(p, 4);
    CHECK(res.theta_seq[0] == 1.0);
    CHECK(res.theta_seq[1] == Catch::Approx(std::pow(0.25, 1.75)).epsilon(1e-12));
    CHECK(res.theta_seq[1] == Catch::Approx(0.08839).epsilon(1e-3));
  }

  SECTION("zero data stays zero") {
    IterationParams p;
    p.gamma = 0.3;
    p.c = 1.0;
    p.m = 0.0;
    p.r0 = 0.5;
    p.tau = 0.25;
    p.theta0 = 0.0;
    IterationResult res = iterate_theta(p, 16);
    for (double v : res.theta_seq) CHECK(v == 0.0);
    for (const auto& e : predict_holder_envelope(res, res.radii)) {
      CHECK(e.phi_first_pass == 0.0);
      CHECK(e.phi_improved == 0.0);
    }
  }

  SECTION("closed-form envelope dominates the recursion on a parameter grid") {
    for (double gamma : {0.0, 0.5, 0.9})
      for (double m : {0.0, 0.5, 3.0})
        for (double theta0 : {0.0, 1.0, 10.0}) {
          IterationParams p;
          p.gamma = gamma;
          p.c = 1.0;
          p.m = m;
          p.r0 = 1.0;
          p.tau = tau_from_gamma(p.c, gamma).tau;
          p.theta0 = theta0;
          IterationResult res = iterate_theta(p, 64);
          for (std::size_t k = 0; k < res.theta_seq.size(); ++k)
            CHECK(res.envelope[k] >= res.theta_seq[k] * (1.0 - 1e-12));
        }
  }

  SECTION("unforced recursion is nonincreasing") {
    IterationParams p;
    p.gamma = 0.4;
    p.c = 2.0;
    p.m = 0.0;
    p.r0 = 1.0;
    p.tau = tau_from_gamma(p.c, p.gamma).tau;
    p.theta0 = 5.0;
    IterationResult res = iterate_theta(p, 32);
    for (std::size_t k = 1; k < res.theta_seq.size(); ++k)
      CHECK(res.theta_seq[k] <= res.theta_seq[k - 1]);
  }
}

TEST_CASE("envelope shapes and monotone dependencies") {
  IterationParams base;
  base.gamma = 0.5;
  base.c = 1.0;
  base.m = 1.0;
  base.r0 = 0.5;
  base.tau = 0.25;
  base.theta0 = 2.0;

  SECTION("the improved envelope decays faster by rho^{1+gamma}") {
    IterationResult res = iterate_theta(base);
    std::vector<double> rhos = {0.4, 0.2, 0.1, 0.05};
    auto env = predict_holder_envelope(res, rhos);
    // log-log slopes differ by exactly 1+gamma
    const double s16 = std::log(env[3].phi_first_pass / env[0].phi_first_pass) /
                       std::log(rhos[3] / rhos[0]);
    const double s19 = std::log(env[3].phi_improved / env[0].phi_improved) /
                       std::log(rhos[3] / rhos[0]);
    CHECK(s16 == Catch::Approx(1.5).margin(1e-12));
    CHECK(s19 == Catch::Approx(3.0).margin(1e-12));
    CHECK(s19 - s16 == Catch::Approx(1.0 + base.gamma).margin(1e-12));
  }

  SECTION("H, H1, H2 increase with theta0 and with the forcing seminorm") {
    IterationResult r0 = iterate_theta(base);
    IterationParams bumped = base;
    bumped.theta0 *= 1.5;
    IterationResult r1 = iterate_theta(bumped);
    CHECK(r1.h > r0.h);
    CHECK(r1.h1 > r0.h1);
    CHECK(r1.h2 > r0.h2);
    bumped = base;
    bumped.m *= 2.0;
    IterationResult r2 = iterate_theta(bumped);
    CHECK(r2.h > r0.h);
    CHECK(r2.h2 > r0.h2);
  }

  SECTION("with no forcing the bound stiffens as r0 shrinks") {
    IterationParams p = base;
    p.m = 0.0;
    IterationResult big = iterate_theta(p);
    p.r0 *= 0.5;
    IterationResult small = iterate_theta(p);
    CHECK(small.h > big.h);
  }
}

TEST_CASE("empirical basic-estimate constants") {
  SECTION("vacuous data is excluded") {
    std::vector<BasicEstimateSample> samples(3);  // all zeros
    BasicEstimateOutcome out = check_basic_estimate(samples, 0.5, 0.5, 0.0);
    CHECK(out.constants.empty());
    CHECK(out.vacuous == 3);
    CHECK(out.quadrature_failures == 0);
  }

  SECTION("known synthetic constant") {
    BasicEstimateSample s;
    s.r = 0.5;
    s.phi_r = 1.0;
    s.psi_r = 0.5;
    s.phi_tau_r = 0.8;
    s.psi_tau_r = 0.3;
    s.d_r = 0.2;
    s.d_tau_r = 0.1;
    s.phi_tau2_r = 0.7;
    const double tau = 0.5, gamma = 0.5, m = 2.0;
    const double t4 = std::pow(tau, 4);
    const double theta_r = s.phi_tau_r + s.d_r;
    const double theta_tau = s.phi_tau2_r + s.d_tau_r;
    const double denom =
        (t4 + s.psi_tau_r) * theta_r + s.psi_r * s.phi_r + m * std::pow(s.r, 3.0);
    BasicEstimateOutcome out = check_basic_estimate(std::vector{s}, tau, gamma, m);
    REQUIRE(out.constants.size() == 1);
    CHECK(out.constants[0] == Catch::Approx(theta_tau / denom).epsilon(1e-14));
  }

  SECTION("degenerate denominator with a live numerator is flagged") {
    BasicEstimateSample s;
    s.r = 0.5;
    s.phi_tau2_r = 1.0;  // lhs > 0, rhs = 0
    BasicEstimateOutcome out = check_basic_estimate(std::vector{s}, 0.5, 0.5, 0.0);
    CHECK(out.constants.empty());
    CHECK(out.quadrature_failures == 1);
  }
}

namespace {

struct MeasuredTriple {
  std::vector<BasicEstimateSample> samples;
};

/// Measure (R, tau R, tau^2 R) functional triples over a small family of
/// interior cylinders on an in-memory trajectory.
MeasuredTriple measure_triples(const Trajectory& traj, double t0, double r, double tau,
                               std::span<const Vec2> centers) {
  TrajectoryVelocity u(traj);
  TrajectoryPressure p(traj);
  const Grid& g = traj.config.grid;
  MeasuredTriple out;
  for (const Vec2& c : centers) {
    BasicEstimateSample s;
    s.r = r;
    CylinderQuadrature qr = make_quadrature(g, u.times(), {c, t0, r});
    CylinderQuadrature qt = make_quadrature(g, u.times(), {c, t0, tau * r});
    CylinderQuadrature qt2 = make_quadrature(g, u.times(), {c, t0, tau * tau * r});
    s.phi_r = phi<Vec2>(u, qr);
    s.psi_r = psi<Vec2>(u, qr);
    s.d_r = d_pressure(p, qr);
    s.phi_tau_r = phi<Vec2>(u, qt);
    s.psi_tau_r = psi<Vec2>(u, qt);
    s.d_tau_r = d_pressure(p, qt);
    s.phi_tau2_r = phi<Vec2>(u, qt2);
    out.samples.push_back(s);
  }
  return out;
}

Trajectory tg_run(int n, double t_end) {
  SolverConfig cfg;
  cfg.grid = Grid(n);
  cfg.dt = 2.5e-3;
  cfg.t_end = t_end;
  cfg.initial.kind = InitialKind::TaylorGreen;
  cfg.output_every = 4;  // snapshot spacing 0.01
  Trajectory traj = run(cfg);
  REQUIRE_FALSE(traj.aborted);
  return traj;
}

}  // namespace

TEST_CASE("basic estimate on resolved flow data") {
  const double tau = 0.5;
  const double r = 0.8;
  const double t0 = 0.7;
  const std::vector<Vec2> centers = {{kPi, kPi}, {2.0, 3.0}, {4.0, 2.5}, {3.0, 4.2}};

  Trajectory coarse = tg_run(128, 0.7);
  Trajectory fine = tg_run(256, 0.7);

  MeasuredTriple mc = measure_triples(coarse, t0, r, tau, centers);
  MeasuredTriple mf = measure_triples(fine, t0, r, tau, centers);

  BasicEstimateOutcome oc = check_basic_estimate(mc.samples, tau, 0.5, 0.0);
  BasicEstimateOutcome of = check_basic_estimate(mf.samples, tau, 0.5, 0.0);
  REQUIRE_FALSE(oc.constants.empty());
  REQUIRE_FALSE(of.constants.empty());
  CHECK(oc.max_c > 0.0);
  CHECK(std::isfinite(oc.max_c));

  // stability across resolutions
  INFO("coarse max c " << oc.max_c << " fine max c " << of.max_c);
  CHECK(std::abs(of.max_c - oc.max_c) <= 0.3 * oc.max_c);

  SECTION("mean comparison on the nested cylinder") {
    // Phi(u; z0, tau R) <= 4 Phi(u; z0, R), the constant-16 property applied
    // on the smaller cylinder
    for (const auto& s : mf.samples) {
      CHECK(s.phi_tau_r <= 4.0 * s.phi_r * (1.0 + 1e-12));
      CHECK(s.phi_tau2_r <= 4.0 * s.phi_tau_r * (1.0 + 1e-12));
    }
  }
}
