#include <catch2/catch_amalgamated.hpp>

#include "wulff/curvature.hpp"

#include <cmath>

using namespace wulff;

namespace {

Anisotropy make_harmonic() {
  return Anisotropy::harmonic(2, 0.08, {{2, 0, 1.0}, {3, 2, 0.6}, {4, -3, 0.4}});
}

// Brute-force E_k by explicit enumeration of all index subsets.
double ek_brute(const VecT& v, int k) {
  int n = (int)v.size();
  double sum = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) p *= v[i];
    sum += p;
  }
  return sum / binomial(n, k);
}

VecT random_tuple(Rng& rng, int n, double lo, double hi) {
  VecT v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

// Radial function of an axis-aligned ellipsoid with the given semi-axes.
double rho_ellipsoid(const std::vector<double>& ax, const VecA& u) {
  double q = 0.0;
  for (int i = 0; i < (int)ax.size(); ++i) q += sqr(u[i] / ax[i]);
  return 1.0 / std::sqrt(q);
}

// Euclidean support function of the same ellipsoid.
double h_ellipsoid(const std::vector<double>& ax, const VecA& x) {
  double q = 0.0;
  for (int i = 0; i < (int)ax.size(); ++i) q += sqr(ax[i] * x[i]);
  return std::sqrt(q);
}

ScalarField sample_gamma(const SphereGrid& g, const std::function<double(const VecA&)>& rho) {
  ScalarField gamma(g.count());
  for (int a = 0; a < g.count(); ++a) gamma[a] = std::log(rho(g.direction(a)));
  return gamma;
}

// Anisotropic principal radii of an ellipsoid body at normal direction x:
// the support function is h(x) = |diag(ax) x|, and the radii are the
// eigenvalues of its tangent-restricted ambient Hessian.
VecT ellipsoid_radii(const Anisotropy& ell_body, const VecA& x) {
  MatT a = ell_body.a_matrix(x);
  Eigen::SelfAdjointEigenSolver<MatT> es(a);
  return es.eigenvalues();
}

double bilinear(const SphereGrid& g, const ScalarField& f, double th, double ph) {
  double ri = th / g.h_theta() - 0.5;
  int i0 = std::max(0, std::min(g.n_theta() - 2, (int)std::floor(ri)));
  double ft = ri - i0;
  double rj = ph / g.h_phi();
  int j0 = (int)std::floor(rj);
  double fp = rj - j0;
  int jm = ((j0 % g.n_phi()) + g.n_phi()) % g.n_phi();
  int jp = (jm + 1) % g.n_phi();
  auto id = [&](int i, int j) { return i * g.n_phi() + j; };
  return (1 - ft) * ((1 - fp) * f[id(i0, jm)] + fp * f[id(i0, jp)]) +
         ft * ((1 - fp) * f[id(i0 + 1, jm)] + fp * f[id(i0 + 1, jp)]);
}

}  // namespace

TEST_CASE("elementary symmetric functions match subset enumeration") {
  Rng rng(2024);
  for (int n = 2; n <= 5; ++n) {
    for (int rep = 0; rep < 40; ++rep) {
      VecT v = random_tuple(rng, n, 0.1, 3.0);
      for (int k = 0; k <= n; ++k) {
        double got = elementary_Ek(v, k);
        double want = ek_brute(v, k);
        REQUIRE(std::abs(got - want) < 1e-12 * std::max(1.0, std::abs(want)));
      }
    }
  }

  VecT ones = VecT::Ones(4);
  for (int k = 0; k <= 4; ++k) REQUIRE(elementary_Ek(ones, k) == Catch::Approx(1.0).margin(1e-14));

  VecT v(3);
  v << 1, 2, 3;
  REQUIRE(std::abs(elementary_Ek(v, 1) - 2.0) < 1e-14);
  REQUIRE(std::abs(elementary_Ek(v, 2) - 11.0 / 3.0) < 1e-14);
  REQUIRE(std::abs(elementary_Ek(v, 3) - 6.0) < 1e-14);

  // deflation identity: e_j(v \ i) from the full coefficient list
  for (int rep = 0; rep < 20; ++rep) {
    VecT w = random_tuple(rng, 5, 0.2, 2.0);
    std::vector<double> e = elementary_all(w);
    for (int i = 0; i < 5; ++i) {
      VecT red(4);
      int c = 0;
      for (int j = 0; j < 5; ++j)
        if (j != i) red[c++] = w[j];
      std::vector<double> want = elementary_all(red);
      std::vector<double> got = elementary_deflate(e, w[i]);
      for (int j = 0; j < 5; ++j)
        REQUIRE(std::abs(got[j] - want[j]) < 1e-11 * std::max(1.0, std::abs(want[j])));
    }
  }
}

TEST_CASE("dual curvature function: values, duality, homogeneity, gradients") {
  VecT ones = VecT::Ones(3);
  REQUIRE(phi_dual(ones, 2) == Catch::Approx(1.0).margin(1e-14));

  VecT t2(2);
  t2 << 1, 4;
  REQUIRE(phi_dual(t2, 2) == Catch::Approx(2.0).margin(1e-14));

  VecT t3(3);
  t3 << 1, 2, 3;
  REQUIRE(phi_dual(t3, 2) == Catch::Approx(std::sqrt(3.0)).margin(1e-14));

  Rng rng(77);
  for (int n = 2; n <= 5; ++n) {
    for (int k = 2; k <= n; ++k) {
      for (int rep = 0; rep < 25; ++rep) {
        VecT tau = random_tuple(rng, n, 0.2, 4.0);
        // reciprocal identity against E_k of the inverse tuple
        VecT inv = tau.cwiseInverse();
        double via_ek = 1.0 / std::pow(elementary_Ek(inv, k), 1.0 / k);
        double phi = phi_dual(tau, k);
        REQUIRE(std::abs(phi - via_ek) < 1e-13 * via_ek);
        // exact 1-homogeneity
        for (double lam : {0.5, 3.7}) {
          VecT scaled = lam * tau;
          REQUIRE(std::abs(phi_dual(scaled, k) - lam * phi) < 1e-13 * lam * phi);
        }
        // gradient against central differences
        VecT g = phi_dual_gradient(tau, k);
        VecT gp = psi_gradient(tau, k);
        for (int i = 0; i < n; ++i) {
          const double h = 1e-6;
          VecT tp = tau, tm = tau;
          tp[i] += h;
          tm[i] -= h;
          REQUIRE(std::abs(g[i] - (phi_dual(tp, k) - phi_dual(tm, k)) / (2 * h)) < 1e-6);
          REQUIRE(std::abs(gp[i] - (psi_speed(tp, k) - psi_speed(tm, k)) / (2 * h)) < 1e-6);
        }
        // Euler relation for the 1-homogeneous function
        REQUIRE(std::abs(g.dot(tau) - phi) < 1e-12 * phi);
      }
    }
  }

  VecT bad(2);
  bad << 1.0, -0.5;
  REQUIRE_THROWS_AS(phi_dual(bad, 2), DomainError);
  bad << 1.0, 0.0;
  REQUIRE_THROWS_AS(phi_dual(bad, 2), DomainError);
  VecT ok(3);
  ok << 1, 1, 1;
  REQUIRE_THROWS_AS(phi_dual(ok, 4), ConfigError);
  REQUIRE_THROWS_AS(phi_dual(ok, 0), ConfigError);
}

TEST_CASE("newton-maclaurin ordering on random positive tuples") {
  Rng rng(5150);
  for (int n = 2; n <= 5; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      VecT v = random_tuple(rng, n, 0.05, 5.0);
      double prev = elementary_Ek(v, 1);
      for (int k = 2; k <= n; ++k) {
        double cur = std::pow(elementary_Ek(v, k), 1.0 / k);
        REQUIRE(cur <= prev + 1e-12 * prev);
        prev = cur;
      }
      for (int k = 1; k + 1 <= n; ++k) {
        double ek = elementary_Ek(v, k);
        REQUIRE(ek * ek >= elementary_Ek(v, k - 1) * elementary_Ek(v, k + 1) - 1e-12 * ek * ek);
      }
    }
  }
}

TEST_CASE("round sphere graph geometry is exact") {
  const double rho0 = 1.7;

  SECTION("full 2d") {
    SphereGrid g = SphereGrid::full2d(32, 64);
    Anisotropy f = Anisotropy::round(2);
    RadialGraphState st{ScalarField(g.count(), std::log(rho0)), 0.0};
    GraphGeometry geo = graph_geometry(f, g, st);
    REQUIRE(geo.convex);
    for (int a = 0; a < g.count(); ++a) {
      REQUIRE(std::abs(geo.kappa[a][0] - 1.0 / rho0) < 1e-10);
      REQUIRE(std::abs(geo.kappa[a][1] - 1.0 / rho0) < 1e-10);
      REQUIRE(std::abs(geo.sigma_f[a] - rho0) < 1e-10);
      REQUIRE(std::abs(geo.sigma_iso[a] - rho0) < 1e-10);
      REQUIRE(std::abs(geo.det_w[a] - 1.0 / sqr(rho0)) < 1e-9);
      REQUIRE((geo.nu[a] - g.direction(a)).norm() < 1e-10);
      REQUIRE((geo.nu_f[a] - geo.nu[a]).norm() < 1e-12);
      REQUIRE(std::abs(geo.area_el[a] - sqr(rho0)) < 1e-10);
      REQUIRE(std::abs(geo.hhat[a](0, 1) - geo.hhat[a](1, 0)) < 1e-14);
    }
    REQUIRE(geo.umbilicity_defect() < 1e-13);  // cancellation floor of E1^2 - E2
    // E_k values of the round sphere
    for (int k = 1; k <= 2; ++k)
      REQUIRE(std::abs(elementary_Ek(geo.kappa[0], k) - std::pow(rho0, -k)) < 1e-9);
  }

  SECTION("axisymmetric, n = 3") {
    SphereGrid g = SphereGrid::axisym(3, 48);
    Anisotropy f = Anisotropy::round(3);
    RadialGraphState st{ScalarField(g.count(), std::log(rho0)), 0.0};
    GraphGeometry geo = graph_geometry(f, g, st);
    REQUIRE(geo.convex);
    for (int a = 0; a < g.count(); ++a) {
      for (int i = 0; i < 3; ++i) REQUIRE(std::abs(geo.kappa[a][i] - 1.0 / rho0) < 1e-10);
      REQUIRE(std::abs(geo.sigma_f[a] - rho0) < 1e-10);
    }
    REQUIRE(geo.umbilicity_defect() < 1e-13);  // cancellation floor of E1^2 - E2
  }
}

TEST_CASE("umbilicity defect formula matches pair sums") {
  // n = 2, kappa = (1,3): sum of squared gaps is 4 = n^2(n-1)(E_1^2 - E_2)
  VecT k2(2);
  k2 << 1, 3;
  double e1 = elementary_Ek(k2, 1), e2 = elementary_Ek(k2, 2);
  REQUIRE(std::abs(4.0 * 1.0 * (e1 * e1 - e2) - 4.0) < 1e-14);

  Rng rng(99);
  for (int n = 2; n <= 5; ++n) {
    for (int rep = 0; rep < 30; ++rep) {
      VecT v = random_tuple(rng, n, 0.1, 2.0);
      double pair = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pair += sqr(v[i] - v[j]);
      double formula =
          n * n * (n - 1) * (sqr(elementary_Ek(v, 1)) - elementary_Ek(v, 2));
      REQUIRE(std::abs(pair - formula) < 1e-11 * std::max(1.0, pair));
    }
  }
}

TEST_CASE("graph geometry reproduces ellipsoid curvatures through the normal map") {
  std::vector<double> ax = {1.3, 1.0, 0.8};
  Anisotropy body = Anisotropy::ellipsoid(ax);  // support function h(x) = |diag(ax) x|
  Anisotropy f = Anisotropy::round(2);
  auto rho = [&](const VecA& u) { return rho_ellipsoid(ax, u); };

  auto worst_err = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    RadialGraphState st{sample_gamma(g, rho), 0.0};
    GraphGeometry geo = graph_geometry(f, g, st);
    REQUIRE(geo.convex);
    double worst = 0.0;
    for (int a = 0; a < g.count(); ++a) {
      VecT radii = ellipsoid_radii(body, geo.nu[a]);  // ascending
      for (int i = 0; i < 2; ++i) {
        double want = 1.0 / radii[1 - i];  // largest radius <-> smallest curvature
        worst = std::max(worst, std::abs(geo.kappa[a][i] - want) / want);
      }
      // sigma_F for Round F is the Euclidean support at the normal
      worst = std::max(worst, std::abs(geo.sigma_f[a] - h_ellipsoid(ax, geo.nu[a])));
    }
    return worst;
  };

  double e1 = worst_err(32), e2 = worst_err(64);
  REQUIRE(e1 < 2e-3);
  REQUIRE(e1 / e2 > 8.0);  // fourth-order stencils
}

TEST_CASE("anisotropic gauss curvature identity and gauge symmetry") {
  Anisotropy f = make_harmonic();
  std::vector<double> ax = {1.2, 1.0, 0.9};
  auto rho = [&](const VecA& u) { return rho_ellipsoid(ax, u); };
  SphereGrid g = SphereGrid::full2d(32, 64);
  RadialGraphState st{sample_gamma(g, rho), 0.0};
  GraphGeometry geo = graph_geometry(f, g, st);
  REQUIRE(geo.convex);

  for (int a = 0; a < g.count(); ++a) {
    // E_n(kappa) = det A_F(nu) * E_n(lambda), lambda the isotropic curvatures
    double lhs = elementary_Ek(geo.kappa[a], 2);
    double rhs = f.a_matrix(geo.nu[a]).determinant() * geo.det_w[a];
    REQUIRE(std::abs(lhs - rhs) < 1e-6 * std::abs(rhs));
    // symmetrized gauge has no asymmetry residual
    REQUIRE((geo.hhat[a] - geo.hhat[a].transpose()).cwiseAbs().maxCoeff() < 1e-8);
    // Newton-MacLaurin ordering holds pointwise on the convex state
    double p1 = elementary_Ek(geo.kappa[a], 1);
    double p2 = std::sqrt(elementary_Ek(geo.kappa[a], 2));
    REQUIRE(p2 <= p1 + 1e-12 * p1);
  }
}

TEST_CASE("scaled wulff shapes have unit anisotropic curvature") {
  const double rbar = 1.3;

  SECTION("ellipsoid, full 2d, with refinement") {
    Anisotropy f = Anisotropy::ellipsoid({1.6, 1.0, 0.7});
    auto rho = [&](const VecA& u) { return rbar / f.dual_norm(u); };
    auto worst = [&](int nt) {
      SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
      RadialGraphState st{sample_gamma(g, rho), 0.0};
      GraphGeometry geo = graph_geometry(f, g, st);
      REQUIRE(geo.convex);
      double w = 0.0;
      for (int a = 0; a < g.count(); ++a) {
        for (int i = 0; i < 2; ++i) w = std::max(w, std::abs(geo.kappa[a][i] * rbar - 1.0));
        w = std::max(w, std::abs(geo.sigma_f[a] / rbar - 1.0));
      }
      return w;
    };
    double e1 = worst(32), e2 = worst(64);
    REQUIRE(e1 < 5e-3);
    REQUIRE(e1 / e2 > 8.0);
  }

  SECTION("harmonic, full 2d") {
    Anisotropy f = make_harmonic();
    auto rho = [&](const VecA& u) { return rbar / f.dual_norm(u); };
    SphereGrid g = SphereGrid::full2d(32, 64);
    RadialGraphState st{sample_gamma(g, rho), 0.0};
    GraphGeometry geo = graph_geometry(f, g, st);
    REQUIRE(geo.convex);
    double w = 0.0;
    for (int a = 0; a < g.count(); ++a)
      for (int i = 0; i < 2; ++i) w = std::max(w, std::abs(geo.kappa[a][i] * rbar - 1.0));
    REQUIRE(w < 1e-2);
    REQUIRE(geo.umbilicity_defect() < 1e-4);
  }

  SECTION("ellipsoid of revolution, axisymmetric n = 3") {
    Anisotropy f = Anisotropy::ellipsoid({1.7, 1.0, 1.0, 1.0});
    auto rho = [&](const VecA& u) { return rbar / f.dual_norm(u); };
    auto worst = [&](int nt) {
      SphereGrid g = SphereGrid::axisym(3, nt);
      RadialGraphState st{sample_gamma(g, rho), 0.0};
      GraphGeometry geo = graph_geometry(f, g, st);
      REQUIRE(geo.convex);
      double w = 0.0;
      for (int a = 0; a < g.count(); ++a)
        for (int i = 0; i < 3; ++i) w = std::max(w, std::abs(geo.kappa[a][i] * rbar - 1.0));
      return w;
    };
    double e1 = worst(48), e2 = worst(96);
    REQUIRE(e1 < 5e-3);
    REQUIRE(e1 / e2 > 8.0);
  }
}

TEST_CASE("radial convexity loss is flagged, not thrown") {
  Poly y40 = solid_harmonic_s2(4, 0);
  auto rho = [&](const VecA& u) { return 1.0 + 0.5 * y40.eval(u); };
  SphereGrid g = SphereGrid::full2d(32, 64);
  RadialGraphState st{sample_gamma(g, rho), 0.0};
  GraphGeometry geo = graph_geometry(Anisotropy::round(2), g, st);
  REQUIRE_FALSE(geo.convex);
  REQUIRE(geo.bad_node >= 0);
}

TEST_CASE("support route: constant fields give scaled wulff radii") {
  const double rbar = 1.4;
  std::vector<Anisotropy> fams;
  fams.push_back(Anisotropy::round(2));
  fams.push_back(Anisotropy::ellipsoid({1.5, 1.0, 0.8}));
  fams.push_back(make_harmonic());
  for (const Anisotropy& f : fams) {
    SphereGrid g = SphereGrid::full2d(32, 64);
    WulffChart ch(f, g);
    SupportState st{ScalarField(g.count(), rbar), 0.0};
    TauField tf = tau_matrix(ch, st);
    REQUIRE(tf.convex);
    for (int a = 0; a < g.count(); ++a) {
      REQUIRE(std::abs(tf.eigs[a][0] - rbar) < 1e-9);
      REQUIRE(std::abs(tf.eigs[a][1] - rbar) < 1e-9);
      // tau = rbar * gbar componentwise
      REQUIRE(std::abs(tf.tau[a](0, 0) - rbar * ch.g11[a]) < 1e-9);
      REQUIRE(std::abs(tf.tau[a](0, 1) - rbar * ch.g12[a]) < 1e-9);
      REQUIRE(std::abs(tf.tau[a](1, 1) - rbar * ch.g22[a]) < 1e-9);
    }
  }
  // axisymmetric chart, n = 3
  Anisotropy fz = Anisotropy::ellipsoid({1.4, 1.0, 1.0, 1.0});
  SphereGrid g = SphereGrid::axisym(3, 64);
  WulffChart ch(fz, g);
  SupportState st{ScalarField(g.count(), rbar), 0.0};
  TauField tf = tau_matrix(ch, st);
  REQUIRE(tf.convex);
  for (int a = 0; a < g.count(); ++a)
    for (int i = 0; i < 3; ++i) REQUIRE(std::abs(tf.eigs[a][i] - rbar) < 1e-9);
}

TEST_CASE("support route: translated spheres on the round chart") {
  VecA v(3);
  v << 0.12, -0.2, 0.15;
  auto worst = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    WulffChart ch(Anisotropy::round(2), g);
    ScalarField s(g.count());
    for (int a = 0; a < g.count(); ++a) s[a] = 1.0 + v.dot(g.direction(a));
    TauField tf = tau_matrix(ch, SupportState{s, 0.0});
    REQUIRE(tf.convex);
    double w = 0.0;
    for (int a = 0; a < g.count(); ++a)
      for (int i = 0; i < 2; ++i) w = std::max(w, std::abs(tf.eigs[a][i] - 1.0));
    return w;
  };
  double e1 = worst(24), e2 = worst(48);
  REQUIRE(e1 < 1e-4);
  REQUIRE(e1 / e2 > 8.0);

  // axisymmetric version: s = 1 + c cos(theta) about the symmetry axis
  SphereGrid g = SphereGrid::axisym(3, 64);
  WulffChart ch(Anisotropy::round(3), g);
  ScalarField s(g.count());
  for (int a = 0; a < g.count(); ++a) s[a] = 1.0 + 0.3 * std::cos(g.theta(a));
  TauField tf = tau_matrix(ch, SupportState{s, 0.0});
  REQUIRE(tf.convex);
  for (int a = 0; a < g.count(); ++a)
    for (int i = 0; i < 3; ++i) REQUIRE(std::abs(tf.eigs[a][i] - 1.0) < 1e-6);
}

TEST_CASE("support convexity loss is flagged, not thrown") {
  SphereGrid g = SphereGrid::full2d(32, 64);
  WulffChart ch(Anisotropy::round(2), g);
  Poly y40 = solid_harmonic_s2(4, 0);
  ScalarField s(g.count());
  for (int a = 0; a < g.count(); ++a) s[a] = 1.0 + 0.8 * y40.eval(g.direction(a));
  TauField tf = tau_matrix(ch, SupportState{s, 0.0});
  REQUIRE_FALSE(tf.convex);
  REQUIRE(tf.bad_node >= 0);
}

TEST_CASE("support positions reconstruct the body surface") {
  // ellipsoid support on the round chart: reconstructed points satisfy the
  // ellipsoid equation
  std::vector<double> ax = {1.25, 1.0, 0.85};
  auto worst = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    WulffChart ch(Anisotropy::round(2), g);
    ScalarField s = sample_support_from_h(ch, [&](const VecA& x) { return h_ellipsoid(ax, x); });
    std::vector<VecA> pos = support_positions(ch, s);
    double w = 0.0;
    for (int a = 0; a < g.count(); ++a) {
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += sqr(pos[a][i] / ax[i]);
      w = std::max(w, std::abs(q - 1.0));
    }
    return w;
  };
  double e1 = worst(24), e2 = worst(48);
  REQUIRE(e1 < 1e-4);
  REQUIRE(e1 / e2 > 8.0);

  // on any chart, s = const rbar reconstructs the scaled wulff embedding
  Anisotropy f = make_harmonic();
  SphereGrid g = SphereGrid::full2d(24, 48);
  WulffChart ch(f, g);
  ScalarField s(g.count(), 0.9);
  std::vector<VecA> pos = support_positions(ch, s);
  for (int a = 0; a < g.count(); ++a) REQUIRE((pos[a] - 0.9 * ch.z[a]).norm() < 1e-10);
}

TEST_CASE("support sampling optimizer matches closed-form support functions") {
  Rng rng(31337);
  std::vector<double> ax = {1.4, 1.0, 0.75};
  auto rho_e = [&](const VecA& u) { return rho_ellipsoid(ax, u); };
  VecA c(3);
  c << 0.2, -0.1, 0.15;
  double R = 1.1;
  auto rho_b = [&](const VecA& u) {
    double cu = c.dot(u);
    return cu + std::sqrt(R * R - c.squaredNorm() + cu * cu);
  };
  for (int rep = 0; rep < 60; ++rep) {
    VecA x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.normal();
    x.normalize();
    double he = support_of_radial(rho_e, 2, x);
    REQUIRE(std::abs(he - h_ellipsoid(ax, x)) < 1e-7 * h_ellipsoid(ax, x));
    double hb = support_of_radial(rho_b, 2, x);
    REQUIRE(std::abs(hb - (R + c.dot(x))) < 1e-7 * R);
  }
}

TEST_CASE("parametrization duality: kappa and tau are reciprocal") {
  Anisotropy f = make_harmonic();
  Poly y20 = solid_harmonic_s2(2, 0), y31 = solid_harmonic_s2(3, 1);
  auto rho = [&](const VecA& u) { return 1.0 + 0.12 * y20.eval(u) - 0.07 * y31.eval(u); };

  auto worst = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    RadialGraphState rst{sample_gamma(g, rho), 0.0};
    GraphGeometry geo = graph_geometry(f, g, rst);
    REQUIRE(geo.convex);

    WulffChart ch(f, g);
    ScalarField s = sample_support(ch, rho);
    TauField tf = tau_matrix(ch, SupportState{s, 0.0});
    REQUIRE(tf.convex);
    // interpolate the smooth symmetric functions of the eigenvalues; the
    // sorted eigenvalue fields themselves kink at near-umbilic points
    ScalarField e1f(g.count()), e2f(g.count());
    for (int a = 0; a < g.count(); ++a) {
      e1f[a] = tf.eigs[a][0] + tf.eigs[a][1];
      e2f[a] = tf.eigs[a][0] * tf.eigs[a][1];
    }

    // probe radial nodes away from the poles; the normal at each probe picks
    // the chart point, where kappa_i * tau_{n+1-i} should be 1
    double w = 0.0;
    for (int i = nt / 4; i <= 3 * nt / 4; i += std::max(1, nt / 8)) {
      for (int j = 0; j < g.n_phi(); j += std::max(1, g.n_phi() / 8)) {
        int a = i * g.n_phi() + j;
        VecA nu = geo.nu[a];
        double th = std::acos(std::min(1.0, std::max(-1.0, nu[2])));
        double ph = std::atan2(nu[1], nu[0]);
        if (ph < 0) ph += 2 * kPi;
        double se = bilinear(g, e1f, th, ph), pe = bilinear(g, e2f, th, ph);
        double disc = std::sqrt(std::max(0.0, se * se - 4 * pe));
        double t_lo = 0.5 * (se - disc), t_hi = 0.5 * (se + disc);
        w = std::max(w, std::abs(geo.kappa[a][0] * t_hi - 1.0));
        w = std::max(w, std::abs(geo.kappa[a][1] * t_lo - 1.0));
      }
    }
    return w;
  };

  // bilinear node matching is second order; the constant is set by the
  // oscillatory harmonic anisotropy (measured 0.117 / 0.045 / 0.012 over
  // three doublings)
  double e1 = worst(24), e2 = worst(48);
  REQUIRE(e1 < 0.2);
  REQUIRE(e2 < 0.07);
  REQUIRE(e1 / e2 > 2.3);
}

TEST_CASE("codazzi-type residual of tau vanishes under refinement") {
  Anisotropy f = make_harmonic();
  Poly y20 = solid_harmonic_s2(2, 0), y32 = solid_harmonic_s2(3, 2);
  VecA v(3);
  v << 0.1, -0.05, 0.08;

  auto residual = [&](int nt) {
    SphereGrid g = SphereGrid::full2d(nt, 2 * nt);
    WulffChart ch(f, g);
    ScalarField s(g.count());
    for (int a = 0; a < g.count(); ++a) {
      VecA x = g.direction(a);
      s[a] = 1.0 + v.dot(x) + 0.08 * y20.eval(x) + 0.05 * y32.eval(x);
    }
    TauField tf = tau_matrix(ch, SupportState{s, 0.0});
    REQUIRE(tf.convex);
    ScalarField t11(g.count()), t12(g.count()), t22(g.count());
    for (int a = 0; a < g.count(); ++a) {
      t11[a] = tf.tau[a](0, 0);
      t12[a] = tf.tau[a](0, 1);
      t22[a] = tf.tau[a](1, 1);
    }
    // the mixed component carries one theta index and is odd across the pole
    Padded p11 = g.pad(t11), p12 = g.pad(t12, true), p22 = g.pad(t22);
    double w = 0.0;
    for (int a = 0; a < g.count(); ++a) {
      int i = g.ring_of(a), j = g.col_of(a);
      // raised tau components: that^p_j = gbar^{pq} tau_{jq}
      double ht_t = ch.gi11[a] * t11[a] + ch.gi12[a] * t12[a];
      double hp_t = ch.gi12[a] * t11[a] + ch.gi22[a] * t12[a];
      double ht_p = ch.gi11[a] * t12[a] + ch.gi12[a] * t22[a];
      double hp_p = ch.gi12[a] * t12[a] + ch.gi22[a] * t22[a];
      // l = theta component
      double rt = g.d_theta(p12, i, j) - g.d_phi(p11, i, j) -
                  (ch.gam_t_tt[a] * t12[a] + ch.gam_p_tt[a] * t22[a]) +
                  (ch.gam_t_tp[a] * t11[a] + ch.gam_p_tp[a] * t12[a]) +
                  0.5 * (ch.q112[a] * ht_t + ch.q122[a] * hp_t) -
                  0.5 * (ch.q111[a] * ht_p + ch.q112[a] * hp_p);
      // l = phi component
      double rp = g.d_theta(p22, i, j) - g.d_phi(p12, i, j) -
                  (ch.gam_t_tp[a] * t12[a] + ch.gam_p_tp[a] * t22[a]) +
                  (ch.gam_t_pp[a] * t11[a] + ch.gam_p_pp[a] * t12[a]) +
                  0.5 * (ch.q122[a] * ht_t + ch.q222[a] * hp_t) -
                  0.5 * (ch.q112[a] * ht_p + ch.q122[a] * hp_p);
      w = std::max(w, std::max(std::abs(rt), std::abs(rp)));
    }
    return w;
  };

  double r1 = residual(24), r2 = residual(48);
  double order = std::log2(r1 / r2);
  REQUIRE(order >= 1.0);  // observed ~3.9 with fourth-order stencils
  REQUIRE(r2 < 1e-3);
}
