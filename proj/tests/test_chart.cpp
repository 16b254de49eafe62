#include <catch2/catch_amalgamated.hpp>

#include "wulff/chart.hpp"

#include <cmath>

using namespace wulff;

namespace {

Anisotropy make_harmonic() {
  return Anisotropy::harmonic(2, 0.08, {{2, 0, 1.0}, {3, 2, 0.6}, {4, -3, 0.4}});
}

Anisotropy make_zonal(int n) { return Anisotropy::harmonic(n, 0.06, {{2, 0, 1.0}, {4, 0, 0.3}}); }

}  // namespace

TEST_CASE("round chart reproduces the round metric in closed form") {
  SphereGrid g = SphereGrid::full2d(32, 64);
  WulffChart ch(Anisotropy::round(2), g);
  for (int a = 0; a < g.count(); ++a) {
    double th = g.theta(g.ring_of(a));
    REQUIRE(std::abs(ch.g11[a] - 1.0) < 1e-10);
    REQUIRE(std::abs(ch.g12[a]) < 1e-10);
    REQUIRE(std::abs(ch.g22[a] - sqr(std::sin(th))) < 1e-10);
    // Christoffels of the round sphere
    REQUIRE(std::abs(ch.gam_t_pp[a] + std::sin(th) * std::cos(th)) < 1e-8);
    REQUIRE(std::abs(ch.gam_p_tp[a] - std::cos(th) / std::sin(th)) < 1e-8);
    REQUIRE(std::abs(ch.gam_t_tt[a]) < 1e-8);
    REQUIRE(std::abs(ch.gam_t_tp[a]) < 1e-8);
    REQUIRE(std::abs(ch.gam_p_tt[a]) < 1e-8);
    REQUIRE(std::abs(ch.gam_p_pp[a]) < 1e-8);
    // cubic tensor vanishes for the Euclidean norm
    for (double q : {ch.q111[a], ch.q112[a], ch.q122[a], ch.q222[a]})
      REQUIRE(std::abs(q) < 1e-9);
  }
  REQUIRE(ch.total_measure() == Catch::Approx(4.0 * kPi).epsilon(1e-10));
}

TEST_CASE("ellipsoid chart: total anisotropic area equals (n+1)|W_F|") {
  // |W_F| for Ellipsoid(2,1,1) is the ellipsoid volume (4 pi/3)*2, total 8 pi
  double expect = 8.0 * kPi;
  SphereGrid g = SphereGrid::full2d(48, 96);
  WulffChart ch(Anisotropy::ellipsoid({2.0, 1.0, 1.0}), g);
  REQUIRE(ch.total_measure() == Catch::Approx(expect).epsilon(1e-9));
  // refined grid agrees with the same reference (cell quadrature is O(h^8))
  SphereGrid g2 = SphereGrid::full2d(96, 192);
  WulffChart ch2(Anisotropy::ellipsoid({2.0, 1.0, 1.0}), g2);
  REQUIRE(ch2.total_measure() == Catch::Approx(expect).epsilon(1e-10));
}

TEST_CASE("chart metric derivative closed form agrees with stencils under refinement") {
  Anisotropy f = make_harmonic();
  auto residual = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    WulffChart ch(f, g);
    // metric compatibility: d_c g_ab = Gamma_{a,cb} + Gamma_{b,ca}; compare the
    // stencil theta-derivative of g11 and g22 with the lowered Christoffels
    Padded p11 = g.pad(ch.g11), p22 = g.pad(ch.g22);
    double r = 0.0;
    for (int i = 2; i < g.n_theta() - 2; ++i)
      for (int j = 0; j < g.n_phi(); ++j) {
        int a = g.id(i, j);
        double lhs11 = g.d_theta(p11, i, j);
        double rhs11 = 2.0 * (ch.g11[a] * ch.gam_t_tt[a] + ch.g12[a] * ch.gam_p_tt[a]);
        double lhs22 = g.d_theta(p22, i, j);
        double rhs22 = 2.0 * (ch.g12[a] * ch.gam_t_tp[a] + ch.g22[a] * ch.gam_p_tp[a]);
        r = std::max(r, std::abs(lhs11 - rhs11));
        r = std::max(r, std::abs(lhs22 - rhs22));
      }
    return r;
  };
  double r1 = residual(24), r2 = residual(48);
  REQUIRE(r1 < 1e-2);
  REQUIRE(std::log2(r1 / r2) > 3.0);
}

TEST_CASE("chart Q is totally symmetric") {
  // recompute the four stored components with independently permuted slots
  Anisotropy f = make_harmonic();
  SphereGrid g = SphereGrid::full2d(16, 32);
  WulffChart ch(f, g);
  Rng rng(3, 0);
  for (int trial = 0; trial < 40; ++trial) {
    int a = (int)(rng.uniform() * g.count());
    WulffPointFrame fr = f.frame_at(g.direction(a));
    const VecA &zt = ch.dz_t[a], &zp = ch.dz_p[a];
    REQUIRE(std::abs(fr.Q.apply(zt, zp, zt) - ch.q112[a]) < 1e-8);
    REQUIRE(std::abs(fr.Q.apply(zp, zt, zt) - ch.q112[a]) < 1e-8);
    REQUIRE(std::abs(fr.Q.apply(zp, zt, zp) - ch.q122[a]) < 1e-8);
    REQUIRE(std::abs(fr.Q.apply(zp, zp, zt) - ch.q122[a]) < 1e-8);
  }
}

TEST_CASE("covariant hessian: constants and linear functions") {
  SphereGrid g = SphereGrid::full2d(32, 64);
  WulffChart ch(Anisotropy::round(2), g);

  ScalarField c(g.count(), 2.5);
  auto hc = ch.covariant_hessian(c);
  for (int a = 0; a < g.count(); ++a) REQUIRE(hc[a].cwiseAbs().maxCoeff() == 0.0);

  // on the round chart, f = <x,v> satisfies hess f = -f g
  VecA v(3);
  v << 0.3, -0.7, 0.55;
  auto err_at = [&](int nt) {
    SphereGrid gg = SphereGrid::full2d(nt, 2 * nt);
    WulffChart cc(Anisotropy::round(2), gg);
    ScalarField f(gg.count());
    for (int a = 0; a < gg.count(); ++a) f[a] = gg.direction(a).dot(v);
    auto h = cc.covariant_hessian(f);
    double e = 0.0;
    for (int a = 0; a < gg.count(); ++a) {
      MatT expect(2, 2);
      expect << cc.g11[a], cc.g12[a], cc.g12[a], cc.g22[a];
      expect *= -f[a];
      e = std::max(e, (h[a] - expect).cwiseAbs().maxCoeff());
    }
    return e;
  };
  double e1 = err_at(24), e2 = err_at(48);
  REQUIRE(e1 < 1e-3);
  REQUIRE(std::log2(e1 / e2) > 3.0);
}

TEST_CASE("laplacian on the round chart has spherical harmonic eigenvalues") {
  auto err_at = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    WulffChart ch(Anisotropy::round(2), g);
    Poly y32 = solid_harmonic_s2(3, 2);
    ScalarField f(g.count());
    for (int a = 0; a < g.count(); ++a) f[a] = y32.eval(g.direction(a));
    ScalarField lap = ch.laplacian(f);
    double e = 0.0;
    for (int a = 0; a < g.count(); ++a) e = std::max(e, std::abs(lap[a] + 12.0 * f[a]));
    return e;
  };
  double e1 = err_at(24), e2 = err_at(48);
  REQUIRE(e1 < 0.05);
  REQUIRE(std::log2(e1 / e2) > 3.0);
}

TEST_CASE("axisymmetric round chart matches closed forms") {
  for (int n : {2, 3, 4}) {
    SphereGrid g = SphereGrid::axisym(n, 48);
    WulffChart ch(Anisotropy::round(n), g);
    for (int i = 0; i < g.n_theta(); ++i) {
      double th = g.theta(i);
      REQUIRE(std::abs(ch.gm[i] - 1.0) < 1e-10);
      REQUIRE(std::abs(ch.go[i] - sqr(std::sin(th))) < 1e-10);
      REQUIRE(std::abs(ch.dgm[i]) < 1e-9);
      REQUIRE(std::abs(ch.dgo[i] - std::sin(2.0 * th)) < 1e-9);
      REQUIRE(std::abs(ch.qm[i]) < 1e-9);
      REQUIRE(std::abs(ch.qo[i]) < 1e-9);
    }
    REQUIRE(ch.total_measure() == Catch::Approx(sphere_area(n)).epsilon(1e-9));
  }
}

TEST_CASE("axisymmetric covariant hessian of a linear zonal function") {
  SphereGrid g = SphereGrid::axisym(3, 64);
  WulffChart ch(Anisotropy::round(3), g);
  ScalarField f(g.count());
  for (int i = 0; i < g.count(); ++i) f[i] = std::cos(g.theta(i));  // <x, e_1>
  auto h = ch.covariant_hessian(f);
  double e = 0.0;
  for (int i = 0; i < g.count(); ++i) {
    e = std::max(e, std::abs(h[i](0, 0) + f[i] * ch.gm[i]));
    e = std::max(e, std::abs(h[i](1, 1) + f[i] * ch.go[i]));
    e = std::max(e, std::abs(h[i](2, 2) + f[i] * ch.go[i]));
  }
  REQUIRE(e < 1e-6);
}

TEST_CASE("axisymmetric and full charts integrate the same anisotropic area") {
  // Ellipsoid(2,1,1) is symmetric about e_1, so it is valid in both modes.
  // (For n = 2 the harmonic family carries spherical harmonics about the
  // z-axis and is never e_1-axisymmetric; zonal harmonic anisotropies are the
  // n >= 3 route.)  Closed-form reference: 3 * (4 pi/3) * 2 = 8 pi.
  Anisotropy f = Anisotropy::ellipsoid({2.0, 1.0, 1.0});
  WulffChart axi(f, SphereGrid::axisym(2, 96));
  WulffChart full(f, SphereGrid::full2d(96, 192));
  REQUIRE(axi.total_measure() == Catch::Approx(full.total_measure()).epsilon(1e-9));
  REQUIRE(axi.total_measure() == Catch::Approx(8.0 * kPi).epsilon(1e-9));
}

TEST_CASE("axisymmetric mode rejects non-axisymmetric anisotropies") {
  Anisotropy bad = make_harmonic();  // carries m != 0 terms about the z-axis
  REQUIRE_THROWS_AS(WulffChart(bad, SphereGrid::axisym(2, 32)), ConfigError);
  // dimension mismatch is rejected too
  REQUIRE_THROWS_AS(WulffChart(Anisotropy::round(3), SphereGrid::full2d(16, 32)), ConfigError);
}

TEST_CASE("higher-dimensional zonal chart: wulff area against dual-norm integral") {
  // (n+1)|W_F| can be computed independently as the integral of the radial
  // function to the (n+1)-th power: |W_F| = (1/(n+1)) int_{S^n} F0(u)^{-(n+1)} du,
  // evaluated here with a dense Gauss-Legendre rule in the polar angle.
  Anisotropy f = make_zonal(3);
  SphereGrid g = SphereGrid::axisym(3, 48);
  WulffChart ch(f, g);

  std::vector<double> gn, gw;
  gauss_legendre(200, gn, gw);
  double acc = 0.0;
  for (int q = 0; q < 200; ++q) {
    double th = 0.5 * kPi * (1.0 + gn[q]);
    VecA u = VecA::Zero(4);
    u[0] = std::cos(th);
    u[1] = std::sin(th);
    double r = 1.0 / f.dual_norm(u);
    acc += 0.5 * kPi * gw[q] * std::pow(r, 4) * std::pow(std::sin(th), 2);
  }
  double total = sphere_area(2) * acc;  // = (n+1)|W_F|
  REQUIRE(ch.total_measure() == Catch::Approx(total).epsilon(1e-8));
}
