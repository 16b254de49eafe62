#include <catch2/catch_amalgamated.hpp>

#include "wulff/sphere.hpp"

#include <cmath>

using namespace wulff;

namespace {

// Spherical quadrature that is exact for polynomial integrands of the degrees
// used here: Gauss-Legendre in cos(theta) x uniform trapezoid in phi.
double integrate_s2(const std::function<double(const Eigen::Vector3d&)>& f, int nt = 32,
                    int np = 64) {
  std::vector<double> tn, tw;
  gauss_legendre(nt, tn, tw);
  double acc = 0.0;
  for (int i = 0; i < nt; ++i) {
    double ct = tn[i], st = std::sqrt(1.0 - ct * ct);
    for (int j = 0; j < np; ++j) {
      double phi = 2.0 * kPi * j / np;
      Eigen::Vector3d x(st * std::cos(phi), st * std::sin(phi), ct);
      acc += tw[i] * (2.0 * kPi / np) * f(x);
    }
  }
  return acc;
}

double poly_eval3(const Poly& p, const Eigen::Vector3d& x) {
  VecA v(3);
  v << x.x(), x.y(), x.z();
  return p.eval(v);
}

}  // namespace

TEST_CASE("polynomial engine derivatives match finite differences") {
  Poly p = Poly::monomial(3, 2.0, {3, 1, 0, 0, 0, 0}) + Poly::monomial(3, -1.5, {0, 2, 2, 0, 0, 0}) +
           Poly::monomial(3, 0.7, {1, 1, 1, 0, 0, 0});
  Rng rng(42, 0);
  for (int trial = 0; trial < 20; ++trial) {
    VecA x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      VecA e = VecA::Zero(3);
      e[i] = 1.0;
      double h = 1e-5;
      double fd = (p.eval(x + h * e) - p.eval(x - h * e)) / (2 * h);
      REQUIRE(std::abs(p.deriv(i).eval(x) - fd) < 1e-8);
    }
  }
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  std::vector<double> n8, w8;
  gauss_legendre(8, n8, w8);
  double s = 0.0;
  for (double w : w8) s += w;
  REQUIRE(std::abs(s - 2.0) < 1e-14);
  // t^14 over [-1,1] = 2/15, degree 14 < 2*8
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) acc += w8[i] * std::pow(n8[i], 14);
  REQUIRE(std::abs(acc - 2.0 / 15.0) < 1e-14);
}

TEST_CASE("solid harmonics match the associated-Legendre recurrence route") {
  Rng rng(7, 1);
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) {
      Poly y = solid_harmonic_s2(l, m);
      for (int trial = 0; trial < 50; ++trial) {
        double theta = rng.uniform(0.05, kPi - 0.05);
        double phi = rng.uniform(0.0, 2 * kPi);
        double via_poly = poly_eval3(y, s2_point(theta, phi));
        double via_rec = real_sph_harm(l, m, theta, phi);
        REQUIRE(std::abs(via_poly - via_rec) < 1e-12);
      }
    }
}

TEST_CASE("solid harmonics are harmonic polynomials") {
  Rng rng(7, 2);
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) {
      PolyJet jet(solid_harmonic_s2(l, m));
      for (int trial = 0; trial < 10; ++trial) {
        VecA x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-2.0, 2.0);
        double lap = 0.0;
        for (int i = 0; i < 3; ++i) lap += jet.d2[i][i].eval(x);
        REQUIRE(std::abs(lap) < 1e-10);
      }
    }
}

TEST_CASE("solid harmonics are orthonormal on the sphere") {
  struct Key {
    int l, m;
  };
  std::vector<Key> keys;
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) keys.push_back({l, m});
  for (std::size_t a = 0; a < keys.size(); ++a)
    for (std::size_t b = a; b < keys.size(); ++b) {
      Poly ya = solid_harmonic_s2(keys[a].l, keys[a].m);
      Poly yb = solid_harmonic_s2(keys[b].l, keys[b].m);
      double ip = integrate_s2([&](const Eigen::Vector3d& x) {
        return poly_eval3(ya, x) * poly_eval3(yb, x);
      });
      REQUIRE(std::abs(ip - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("zonal harmonics: gegenbauer recurrence against closed forms") {
  // C_2^{3/2}(t) = (15 t^2 - 3)/2, C_3^1(t) = 8 t^3 - 4 t
  auto c2 = gegenbauer_coeffs(2, 1.5);
  REQUIRE(std::abs(c2[2] - 7.5) < 1e-14);
  REQUIRE(std::abs(c2[0] + 1.5) < 1e-14);
  auto c3 = gegenbauer_coeffs(3, 1.0);
  REQUIRE(std::abs(c3[3] - 8.0) < 1e-14);
  REQUIRE(std::abs(c3[1] + 4.0) < 1e-14);
}

TEST_CASE("zonal harmonics: harmonic, pole-normalized, match Legendre for n=2") {
  Rng rng(11, 3);
  for (int d = 3; d <= 5; ++d)
    for (int l = 1; l <= 4; ++l) {
      PolyJet jet(solid_zonal(l, d));
      VecA pole = VecA::Zero(d);
      pole[0] = 1.0;  // axisymmetry axis is e_1
      REQUIRE(std::abs(jet.p.eval(pole) - 1.0) < 1e-13);
      for (int trial = 0; trial < 10; ++trial) {
        VecA x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(-2.0, 2.0);
        double lap = 0.0;
        for (int i = 0; i < d; ++i) lap += jet.d2[i][i].eval(x);
        REQUIRE(std::abs(lap) < 1e-10);
      }
    }
  // n = 2: zonal polynomial is the Legendre polynomial P_l(cos theta)
  for (int l = 1; l <= 4; ++l) {
    Poly z = solid_zonal(l, 3);
    for (int trial = 0; trial < 20; ++trial) {
      double theta = rng.uniform(0.0, kPi);
      VecA x(3);
      x << std::cos(theta), std::sin(theta), 0.0;
      REQUIRE(std::abs(z.eval(x) - assoc_legendre(l, 0, std::cos(theta))) < 1e-12);
    }
  }
}

TEST_CASE("fibonacci sphere points are unit and well spread") {
  auto pts = fibonacci_sphere(500);
  REQUIRE(pts.size() == 500);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    REQUIRE(std::abs(p.norm() - 1.0) < 1e-14);
    mean += p;
  }
  REQUIRE(mean.norm() / 500 < 0.01);
  // nearest-neighbour distance should not collapse
  double dmin = 10.0;
  for (int i = 0; i < 100; ++i)
    for (int j = i + 1; j < 100; ++j) dmin = std::min(dmin, (pts[i] - pts[j]).norm());
  REQUIRE(dmin > 0.05);
}

TEST_CASE("sphere_sample is deterministic and unit for higher dimensions") {
  auto a = sphere_sample(3, 100, 99);
  auto b = sphere_sample(3, 100, 99);
  for (int i = 0; i < 100; ++i) {
    REQUIRE(a[i].size() == 4);
    REQUIRE(std::abs(a[i].norm() - 1.0) < 1e-14);
    REQUIRE((a[i] - b[i]).norm() == 0.0);
  }
}

TEST_CASE("latitude-longitude chart derivatives agree with finite differences") {
  Rng rng(5, 4);
  for (int trial = 0; trial < 30; ++trial) {
    double t = rng.uniform(0.2, kPi - 0.2), p = rng.uniform(0.0, 2 * kPi);
    double h = 1e-6;
    Eigen::Vector3d fd1t = (s2_point(t + h, p) - s2_point(t - h, p)) / (2 * h);
    Eigen::Vector3d fd1p = (s2_point(t, p + h) - s2_point(t, p - h)) / (2 * h);
    Eigen::Vector3d fd2t = (s2_point(t + h, p) - 2 * s2_point(t, p) + s2_point(t - h, p)) / (h * h);
    Eigen::Vector3d fd2p = (s2_point(t, p + h) - 2 * s2_point(t, p) + s2_point(t, p - h)) / (h * h);
    Eigen::Vector3d fdtp = (s2_point(t + h, p + h) - s2_point(t + h, p - h) -
                            s2_point(t - h, p + h) + s2_point(t - h, p - h)) /
                           (4 * h * h);
    REQUIRE((s2_dtheta(t, p) - fd1t).norm() < 1e-8);
    REQUIRE((s2_dphi(t, p) - fd1p).norm() < 1e-8);
    REQUIRE((s2_dtheta2(t, p) - fd2t).norm() < 1e-3);
    REQUIRE((s2_dphi2(t, p) - fd2p).norm() < 1e-3);
    REQUIRE((s2_dthetaphi(t, p) - fdtp).norm() < 1e-3);
  }
}
