#include <catch2/catch_amalgamated.hpp>

#include "ns2d/inequalities.hpp"
#include "ns2d/trajectory_view.hpp"

using namespace ns2d;

namespace {

constexpr double kPi = std::numbers::pi;

TestFunctionSpec gaussian_spec(double width = 1.0) {
  TestFunctionSpec spec;
  spec.kind = TestFunctionKind::Gaussian;
  spec.grid = Grid(256, 8.0 * kPi);
  spec.width = width;
  return spec;
}

ScalarField band_field(std::uint64_t seed, int cutoff = 16) {
  TestFunctionSpec spec;
  spec.kind = TestFunctionKind::BandLimitedRandom;
  spec.grid = Grid(256, 8.0 * kPi);
  spec.seed = seed;
  spec.cutoff = cutoff;
  return realize_test_function(spec);
}

}  // namespace

TEST_CASE("generalized Ladyzhenskaya inequality") {
  SECTION("zero field is vacuous") {
    ScalarField z(Grid(64, 8.0 * kPi));
    InequalityRecord rec = verify_ladyzhenskaya(z, 2.0);
    CHECK(rec.lhs == 0.0);
    CHECK(rec.rhs == 0.0);
    CHECK(rec.pass);
  }

  SECTION("unit Gaussian closed form at r=2") {
    ScalarField u = realize_test_function(gaussian_spec());
    InequalityRecord rec = verify_ladyzhenskaya(u, 2.0);
    CHECK(rec.lhs == Catch::Approx(std::sqrt(kPi / 2.0)).epsilon(1e-10));
    CHECK(rec.rhs == Catch::Approx(std::sqrt(2.0) * kPi).epsilon(1e-10));
    CHECK(rec.lhs == Catch::Approx(1.25331).epsilon(1e-5));
    CHECK(rec.rhs == Catch::Approx(4.44288).epsilon(1e-5));
    CHECK(rec.ratio == Catch::Approx(0.2821).epsilon(1e-3));
    CHECK(rec.pass);
  }

  SECTION("seeded band-limited fields across exponents") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ScalarField u = band_field(seed);
      for (double r : {2.0, 3.0, 4.0, 6.0}) {
        InequalityRecord rec = verify_ladyzhenskaya(u, r, /*check_tail=*/false);
        CHECK(rec.ratio <= 1.0 + 1e-8);
      }
    }
  }

  SECTION("exponent below 2 and fat tails are rejected") {
    ScalarField u = realize_test_function(gaussian_spec());
    CHECK_THROWS_AS(verify_ladyzhenskaya(u, 1.5), std::invalid_argument);
    ScalarField wide = realize_test_function(gaussian_spec(4.0));
    CHECK(boundary_tail_mass(wide) > kTailGuard);
    CHECK_THROWS_AS(verify_ladyzhenskaya(wide, 2.0), std::invalid_argument);
  }

  SECTION("ratio is invariant under amplitude scaling") {
    ScalarField u = realize_test_function(gaussian_spec());
    const double base = verify_ladyzhenskaya(u, 3.0).ratio;
    for (double lambda : {1e-3, 1e3}) {
      ScalarField v = u;
      for (auto& x : v.values) x *= lambda;
      CHECK(verify_ladyzhenskaya(v, 3.0).ratio == Catch::Approx(base).epsilon(1e-10));
    }
  }

  SECTION("ratio is invariant under dilation") {
    // in 2D both sides scale identically under u(x) -> u(mu x); realized by
    // comparing Gaussians of different widths
    const double r1 = verify_ladyzhenskaya(realize_test_function(gaussian_spec(0.5)), 4.0).ratio;
    const double r2 = verify_ladyzhenskaya(realize_test_function(gaussian_spec(1.0)), 4.0).ratio;
    const double r3 = verify_ladyzhenskaya(realize_test_function(gaussian_spec(2.0)), 4.0).ratio;
    CHECK(r1 == Catch::Approx(r2).epsilon(1e-8));
    CHECK(r2 == Catch::Approx(r3).epsilon(1e-8));
  }
}

TEST_CASE("interpolation inequality") {
  SECTION("identity at r=2") {
    for (std::uint64_t seed : {3ull, 9ull}) {
      ScalarField u = band_field(seed);
      InequalityRecord rec = verify_interpolation(u, 2.0);
      CHECK(std::abs(rec.ratio - 1.0) <= 1e-12);
    }
  }

  SECTION("Gaussian at r=4") {
    InequalityRecord rec = verify_interpolation(realize_test_function(gaussian_spec()), 4.0);
    CHECK(rec.ratio <= 1.0 + 1e-8);
  }

  SECTION("plateau bump approaches equality") {
    TestFunctionSpec spec;
    spec.kind = TestFunctionKind::Bump;
    spec.grid = Grid(256, 8.0 * kPi);
    spec.support_radius = 4.0;
    ScalarField bump = realize_test_function(spec);
    CHECK(boundary_tail_mass(bump) <= kTailGuard);
    InequalityRecord rec = verify_interpolation(bump, 4.0);
    CHECK(rec.ratio <= 1.0 + 1e-8);
    CHECK(rec.ratio >= 0.95);
  }

  SECTION("seeded fields at several exponents") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ScalarField u = band_field(seed, 12);
      for (double r : {3.0, 4.0, 6.0})
        CHECK(verify_interpolation(u, r).ratio <= 1.0 + 1e-8);
    }
  }
}

TEST_CASE("the r=4 special case bounds trajectory snapshots") {
  SolverConfig cfg;
  cfg.grid = Grid(64);
  cfg.dt = 2e-3;
  cfg.t_end = 0.2;
  cfg.output_every = 25;
  cfg.initial.kind = InitialKind::TaylorGreen;
  cfg.forcing.kind = ForcingKind::SmoothStress;
  cfg.forcing.cutoff = 4;
  cfg.forcing.seed = 17;
  cfg.forcing.amplitude = 0.5;
  Trajectory traj = run(cfg);
  REQUIRE_FALSE(traj.aborted);
  for (const auto& snap : traj.snapshots) {
    InequalityRecord rec = verify_ladyzhenskaya_8_4(snap.u);
    CHECK(rec.ratio <= 1.0 + 1e-8);
  }
}

TEST_CASE("caloric fields lose oscillation at fourth order") {
  Grid g(128);
  const std::vector<double> ladder = {2.4, 1.2, 0.6, 0.3};
  auto lib = caloric_library(ladder.front());

  SECTION("linear profile sits at the homogeneity slope") {
    DecayFit fit = verify_caloric_decay(lib[0].fn, g, ladder, 16);
    CHECK(fit.slope >= 3.9);
    CHECK(fit.slope == Catch::Approx(4.0).margin(0.1));
  }

  SECTION("the quadratic caloric profile decays faster") {
    DecayFit fit = verify_caloric_decay(lib[3].fn, g, ladder, 16);
    CHECK(fit.slope >= 3.9);
  }

  SECTION("constants are vacuous and excluded") {
    auto constant = [](double, double, double) { return 2.0; };
    CHECK_THROWS_AS(verify_caloric_decay(constant, g, ladder, 16), std::invalid_argument);
  }
}

TEST_CASE("harmonic polynomials lose oscillation at fourth order") {
  Grid g(512);
  const std::vector<double> ladder = {1.6, 0.8, 0.4, 0.2, 0.1};

  SECTION("degree one is exactly quartic") {
    TestFunctionSpec spec;
    spec.kind = TestFunctionKind::HarmonicPoly;
    spec.grid = g;
    spec.degree = 1;
    DecayFit fit = verify_harmonic_decay(realize_test_function(spec), ladder);
    CHECK(fit.slope == Catch::Approx(4.0).margin(0.05));
  }

  SECTION("products and higher degrees decay faster") {
    ScalarField xy(g);
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2)
        xy.at(i1, i2) = (g.coord(i1) - kPi) * (g.coord(i2) - kPi);
    // x1 x2 is degree-2 homogeneous: oscillation integral ~ rho^6
    DecayFit fit = verify_harmonic_decay(xy, ladder);
    CHECK(fit.slope >= 3.9);
    CHECK(fit.slope == Catch::Approx(6.0).margin(0.2));

    for (int deg = 2; deg <= 4; ++deg) {
      TestFunctionSpec spec;
      spec.kind = TestFunctionKind::HarmonicPoly;
      spec.grid = g;
      spec.degree = deg;
      CHECK(verify_harmonic_decay(realize_test_function(spec), ladder).slope >= 3.9);
    }
  }

  SECTION("constants are vacuous and excluded") {
    ScalarField c(g, 5.0);
    CHECK_THROWS_AS(verify_harmonic_decay(c, ladder), std::invalid_argument);
  }
}

TEST_CASE("heat-energy estimate on the torus") {
  Grid g(64);

  SECTION("constant stress is vacuous") {
    TensorField G(g);
    for (auto& c : G.comp)
      for (auto& v : c.values) v = 3.0;
    HeatEnergyRecord rec = verify_heat_energy(G, 1.0);
    CHECK(rec.vacuous);
    CHECK(rec.record.lhs == 0.0);
    CHECK(rec.record.pass);
  }

  SECTION("single-mode closed form") {
    TensorField G(g);
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2) G.comp[2].at(i1, i2) = std::sin(g.coord(i1));
    HeatEnergyRecord rec = verify_heat_energy(G, 1.0);
    CHECK_FALSE(rec.vacuous);
    CHECK(rec.record.ratio <= 1.0);
    // mode k=(1,0): w2(t) = cos(x1)(1 - e^{-t}); sup ||w||^2 = 2 pi^2 (1-e^-1)^2
    const double expect_sup = 2.0 * kPi * kPi * std::pow(1.0 - std::exp(-1.0), 2);
    CHECK(rec.sup_w_sq == Catch::Approx(expect_sup).epsilon(1e-10));
  }

  SECTION("twenty seeded stress fields stay below the bound") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ForcingSpec spec;
      spec.kind = ForcingKind::SmoothStress;
      spec.cutoff = 8;
      spec.seed = 1000 + seed;
      TensorField G = generate_forcing(spec, g, 0.0);
      HeatEnergyRecord rec = verify_heat_energy(G, 0.5);
      CHECK(rec.record.ratio <= 1.0);
    }
  }

  SECTION("the stepper reproduces the exact forced heat response") {
    SolverConfig cfg;
    cfg.grid = g;
    cfg.dt = 2.5e-3;
    cfg.t_end = 0.5;
    cfg.nonlinearity = false;
    cfg.output_every = 1 << 30;
    cfg.forcing.kind = ForcingKind::SmoothStress;
    cfg.forcing.cutoff = 8;
    cfg.forcing.seed = 4;
    Trajectory traj = run(cfg);
    REQUIRE_FALSE(traj.aborted);

    // per-mode exact response to the projected static forcing
    NavierStokesStepper stepper(cfg);
    double dummy_speed = 0.0, dummy_nl = 0.0;
    auto zero = stepper.lift(VectorField(g));
    auto N = stepper.explicit_term(zero, 0.0, &dummy_speed, &dummy_nl);
    SpectralScalar w1(g), w2(g);
    const double T = 0.5;
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 <= g.n / 2; ++i2) {
        const double kk = detail::mode_ksq(g, i1, i2);
        const double gain = kk == 0.0 ? T : (1.0 - std::exp(-kk * T)) / kk;
        w1.at(i1, i2) = gain * N.u1.at(i1, i2);
        w2.at(i1, i2) = gain * N.u2.at(i1, i2);
      }
    ScalarField e1 = inverse_fft(w1), e2 = inverse_fft(w2);
    const VectorField& got = traj.snapshots.back().u;
    double err = 0.0;
    for (std::size_t i = 0; i < e1.values.size(); ++i) {
      err = std::max(err, std::abs(got.comp[0].values[i] - e1.values[i]));
      err = std::max(err, std::abs(got.comp[1].values[i] - e2.values[i]));
    }
    CHECK(err <= 1e-12);
  }
}

TEST_CASE("fourth-power monitor") {
  SECTION("zero trajectory gives flat zero series") {
    SolverConfig cfg;
    cfg.grid = Grid(32);
    cfg.dt = 0.01;
    cfg.t_end = 0.2;
    Trajectory traj = run(cfg);
    L4MonitorReport rep = l4_monitor(traj, 0.05);
    CHECK(rep.c_max == 0.0);
    CHECK(rep.sup_l4 == 0.0);
    CHECK(rep.below_envelope);
    CHECK(rep.skipped > 0);  // all denominators vanish
  }

  SECTION("Taylor-Green fourth powers decay at the profile rate") {
    SolverConfig cfg;
    cfg.grid = Grid(64);
    cfg.dt = 2e-3;
    cfg.t_end = 0.5;
    cfg.output_every = 10;
    cfg.initial.kind = InitialKind::TaylorGreen;
    Trajectory traj = run(cfg);
    L4MonitorReport rep = l4_monitor(traj, 0.1);
    // ||u||_4^4 = e^{-8t} ||profile||_4^4
    const std::size_t m = rep.times.size();
    const double rate = std::log(rep.u4[1] / rep.u4[m - 1]) / (rep.times[m - 1] - rep.times[1]);
    CHECK(rate == Catch::Approx(8.0).epsilon(1e-6));
    CHECK(rep.below_envelope);
    CHECK(rep.sup_l4 > 0.0);
    CHECK(std::isfinite(rep.sup_l4));
    CHECK(rep.c_max == 0.0);  // monotone decay has no positive part
  }

  SECTION("margin validation") {
    SolverConfig cfg;
    cfg.grid = Grid(32);
    cfg.dt = 0.01;
    cfg.t_end = 0.1;
    Trajectory traj = run(cfg);
    CHECK_THROWS_AS(l4_monitor(traj, 0.5), std::invalid_argument);
  }
}
