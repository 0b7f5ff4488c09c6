#include <catch2/catch_amalgamated.hpp>

#include "ns2d/forcing.hpp"
#include "ns2d/rng.hpp"
#include "ns2d/spectral.hpp"

using namespace ns2d;

namespace {

ScalarField sampled(const Grid& g, double (*fn)(double, double)) {
  ScalarField f(g);
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 < g.n; ++i2) f.at(i1, i2) = fn(g.coord(i1), g.coord(i2));
  return f;
}

ScalarField random_band_limited(const Grid& g, std::uint64_t seed, int maxmode) {
  return detail::synthesize_random(g, seed, 7, maxmode, [](double m) { return 1.0 / (1.0 + m); });
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

// Second-order centered finite differences with periodic wrap; the
// independent check for the spectral tensor divergence.
VectorField fd_divergence_tensor(const TensorField& F) {
  const Grid& g = F.grid;
  const int n = g.n;
  const double inv2h = 1.0 / (2.0 * g.spacing());
  VectorField out(g);
  for (int i1 = 0; i1 < n; ++i1) {
    const int ip = (i1 + 1) % n, im = (i1 + n - 1) % n;
    for (int i2 = 0; i2 < n; ++i2) {
      const int jp = (i2 + 1) % n, jm = (i2 + n - 1) % n;
      out.comp[0].at(i1, i2) = (F.comp[0].at(ip, i2) - F.comp[0].at(im, i2)) * inv2h +
                               (F.comp[1].at(i1, jp) - F.comp[1].at(i1, jm)) * inv2h;
      out.comp[1].at(i1, i2) = (F.comp[2].at(ip, i2) - F.comp[2].at(im, i2)) * inv2h +
                               (F.comp[3].at(i1, jp) - F.comp[3].at(i1, jm)) * inv2h;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(8), std::invalid_argument);
  CHECK_THROWS_AS(Grid(17), std::invalid_argument);
  Grid g(64);
  CHECK(g.cell_volume() == Catch::Approx(g.spacing() * g.spacing()));
  CHECK(g.mode(63) == -1);
  CHECK(g.mode(32) == 32);
}

TEST_CASE("transform round trip is lossless") {
  Grid g(64);
  ScalarField f(g);
  HashRng rng{123, 1};
  for (auto& v : f.values) v = rng.next_normal();
  ScalarField back = inverse_fft(forward_fft(f));
  CHECK(max_abs_diff(f, back) <= 1e-12 * max_abs(f));
}

TEST_CASE("parseval identity") {
  Grid g(128);
  ScalarField f = random_band_limited(g, 99, 40);
  const double phys = l2_norm_sq(f);
  const double spec = coefficient_energy(forward_fft(f));
  CHECK(std::abs(phys - spec) <= 1e-10 * phys);
}

TEST_CASE("gradient of single modes") {
  Grid g(64);
  auto f = sampled(g, [](double x, double) { return std::sin(x); });
  VectorField grad = gradient(f);
  auto expect = sampled(g, [](double x, double) { return std::cos(x); });
  CHECK(max_abs_diff(grad.comp[0], expect) < 1e-12);
  CHECK(max_abs(grad.comp[1]) < 1e-12);

  SECTION("constant has zero gradient") {
    ScalarField c(g, 7.0);
    VectorField gc = gradient(c);
    CHECK(max_abs(gc.comp[0]) < 1e-13);
    CHECK(max_abs(gc.comp[1]) < 1e-13);
  }

  SECTION("product mode") {
    auto fp = sampled(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
    VectorField gp = gradient(fp);
    auto e1 = sampled(g, [](double x, double y) { return std::cos(x) * std::sin(y); });
    auto e2 = sampled(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
    CHECK(max_abs_diff(gp.comp[0], e1) < 1e-12);
    CHECK(max_abs_diff(gp.comp[1], e2) < 1e-12);
  }
}

TEST_CASE("tensor divergence") {
  Grid g(64);

  SECTION("constant tensor vanishes") {
    TensorField F(g);
    for (auto& c : F.comp)
      for (auto& v : c.values) v = 3.5;
    VectorField d = divergence_tensor(F);
    CHECK(max_norm(d) < 1e-12);
  }

  SECTION("single-mode diagonal") {
    TensorField F(g);
    F.comp[0] = sampled(g, [](double x, double) { return std::sin(x); });
    VectorField d = divergence_tensor(F);
    auto expect = sampled(g, [](double x, double) { return std::cos(x); });
    CHECK(max_abs_diff(d.comp[0], expect) < 1e-12);
    CHECK(max_abs(d.comp[1]) < 1e-12);
  }

  SECTION("matches the finite-difference check at second order") {
    // same band-limited tensor on two grids; FD error must drop ~4x
    double errs[2];
    int idx = 0;
    for (int n : {64, 128}) {
      Grid gr(n);
      TensorField F(gr);
      for (int c = 0; c < 4; ++c) F.comp[c] = random_band_limited(gr, 1000 + c, 10);
      VectorField spec = divergence_tensor(F);
      VectorField fd = fd_divergence_tensor(F);
      double e = 0.0;
      for (int comp = 0; comp < 2; ++comp)
        e = std::max(e, max_abs_diff(spec.comp[comp], fd.comp[comp]));
      errs[idx++] = e;
    }
    const double order = std::log2(errs[0] / errs[1]);
    CHECK(order >= 1.9);
    CHECK(order <= 2.3);
  }
}

TEST_CASE("leray projection") {
  Grid g(64);

  SECTION("pure gradients are annihilated") {
    auto f = sampled(g, [](double x, double) { return std::sin(x); });
    VectorField v = gradient(f);
    VectorField pv = leray_project(v);
    CHECK(max_norm(pv) < 1e-12);
  }

  SECTION("divergence-free fields pass through") {
    VectorField v(g);
    v.comp[0] = sampled(g, [](double, double y) { return -std::sin(y); });
    v.comp[1] = sampled(g, [](double x, double) { return std::sin(x); });
    VectorField pv = leray_project(v);
    CHECK(max_abs_diff(v.comp[0], pv.comp[0]) < 1e-12);
    CHECK(max_abs_diff(v.comp[1], pv.comp[1]) < 1e-12);
  }

  SECTION("idempotent, mean-preserving, and output is solenoidal") {
    VectorField v(g);
    HashRng rng{5, 2};
    for (auto& c : v.comp)
      for (auto& x : c.values) x = rng.next_normal();
    const double m0 = mean(v.comp[0]);
    const double m1 = mean(v.comp[1]);
    VectorField p1 = leray_project(v);
    VectorField p2 = leray_project(p1);
    CHECK(max_abs_diff(p1.comp[0], p2.comp[0]) < 1e-12);
    CHECK(max_abs_diff(p1.comp[1], p2.comp[1]) < 1e-12);
    CHECK(mean(p1.comp[0]) == Catch::Approx(m0).margin(1e-13));
    CHECK(mean(p1.comp[1]) == Catch::Approx(m1).margin(1e-13));
    const double scale = std::sqrt(l2_norm_sq(v));
    CHECK(divergence_l2(p1) <= 1e-12 * scale);
  }
}

TEST_CASE("pressure recovery") {
  Grid g(64);

  SECTION("zero state gives zero pressure") {
    VectorField u(g);
    TensorField F(g);
    ScalarField p = pressure_from_state(u, F);
    CHECK(max_abs(p) < 1e-14);
  }

  SECTION("constant stress gives zero pressure") {
    VectorField u(g);
    TensorField F(g);
    for (auto& c : F.comp)
      for (auto& v : c.values) v = 2.0;
    ScalarField p = pressure_from_state(u, F);
    CHECK(max_abs(p) < 1e-12);
  }

  SECTION("Taylor-Green closed form") {
    VectorField u(g);
    u.comp[0] = sampled(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
    u.comp[1] = sampled(g, [](double x, double y) { return -std::cos(x) * std::sin(y); });
    TensorField F(g);
    ScalarField p = pressure_from_state(u, F);
    // substituting u into the momentum equation: u.grad u = (sin 2x, sin 2y)/2,
    // so p = +(cos 2x + cos 2y)/4 up to a constant
    auto expect = sampled(g, [](double x, double y) {
      return 0.25 * (std::cos(2 * x) + std::cos(2 * y));
    });
    CHECK(max_abs_diff(p, expect) < 1e-11);
    CHECK(std::abs(mean(p)) < 1e-14);

    // momentum balance: grad p + div(u x u) = 0 for the steady profile
    VectorField residual = gradient(p);
    VectorField adv = divergence_tensor(velocity_stress(u));
    for (int c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < residual.comp[c].values.size(); ++i)
        residual.comp[c].values[i] += adv.comp[c].values[i];
    CHECK(max_norm(residual) < 1e-11);
  }
}

TEST_CASE("dealiasing") {
  Grid g(64);

  SECTION("band-limited input below the cutoff is unchanged") {
    ScalarField f = random_band_limited(g, 3, g.n / 4);
    SpectralScalar s = forward_fft(f);
    SpectralScalar d = dealias(s);
    const int cut = g.n / 3;
    double kept_diff = 0.0, removed = 0.0, scale = 0.0;
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 <= g.n / 2; ++i2) {
        scale = std::max(scale, std::abs(s.at(i1, i2)));
        if (std::abs(g.mode(i1)) <= cut && i2 <= cut)
          kept_diff = std::max(kept_diff, std::abs(s.at(i1, i2) - d.at(i1, i2)));
        else
          removed = std::max(removed, std::abs(s.at(i1, i2)));
      }
    CHECK(kept_diff == 0.0);                // kept band is bit-identical
    CHECK(removed <= 1e-12 * scale);        // removed content was only roundoff
  }

  SECTION("mode above the cutoff is zeroed") {
    auto f = sampled(g, [](double x, double) { return std::cos(31.0 * x); });
    ScalarField filtered = inverse_fft(dealias(forward_fft(f)));
    CHECK(max_abs(filtered) < 1e-12);
  }

  SECTION("idempotent") {
    ScalarField f = random_band_limited(g, 4, g.n / 2 - 1);
    SpectralScalar once = dealias(forward_fft(f));
    SpectralScalar twice = dealias(once);
    double diff = 0.0;
    for (std::size_t i = 0; i < once.coeff.size(); ++i)
      diff = std::max(diff, std::abs(once.coeff[i] - twice.coeff[i]));
    CHECK(diff == 0.0);
  }
}
