#ifndef WULFF_BODIES_HPP
#define WULFF_BODIES_HPP

#include "anisotropy.hpp"
#include "chart.hpp"
#include "core.hpp"
#include "curvature.hpp"
#include "grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace wulff {

using RadialFn = std::function<double(const VecA&)>;
using SupportFn = std::function<double(const VecA&)>;

// Real spherical harmonic Y_l^m(theta, phi), orthonormal on S^2.  The zonal
// m = 0 member is a polynomial in cos(theta) and stays smooth as a function of
// the polar angle on any S^n.
inline double real_harmonic(int l, int m, double theta, double phi) {
  int am = std::abs(m);
  if (am > l) throw ConfigError("harmonic order |m| exceeds degree l");
  double p = std::sph_legendre((unsigned)l, (unsigned)am, theta);
  if (m == 0) return p;
  return std::sqrt(2.0) * p * (m > 0 ? std::cos(m * phi) : std::sin(am * phi));
}

// ---------------------------------------------------------------------------
// Radial functions rho(u) of star-shaped bodies.

inline RadialFn radial_constant(double r0) {
  return [r0](const VecA&) { return r0; };
}

// rho(u) = (sum u_i^2 / b_i^2)^{-1/2}: the ellipsoid with semi-axes b.
inline RadialFn radial_ellipsoid(std::vector<double> semi) {
  return [semi = std::move(semi)](const VecA& u) {
    double acc = 0.0;
    for (int i = 0; i < u.size(); ++i) acc += sqr(u[i] / semi[i]);
    return 1.0 / std::sqrt(acc);
  };
}

// Sphere with a single spherical-harmonic perturbation; polar angle measured
// from e_3 (the full2d grid convention).
inline RadialFn radial_harmonic(double r0, double eps, int l, int m) {
  return [=](const VecA& u) {
    double th = std::acos(std::clamp(u[2] / u.norm(), -1.0, 1.0));
    double ph = std::atan2(u[1], u[0]);
    return r0 * (1.0 + eps * real_harmonic(l, m, th, ph));
  };
}

// Zonal perturbation about the axisymmetry axis e_1, valid on any S^n.
inline RadialFn radial_zonal(double r0, double eps, int l) {
  return [=](const VecA& u) {
    double th = std::acos(std::clamp(u[0] / u.norm(), -1.0, 1.0));
    return r0 * (1.0 + eps * real_harmonic(l, 0, th, 0.0));
  };
}

// rho(u) = rbar / F0(u): the scaled Wulff shape as a radial graph.
inline RadialFn radial_wulff(const Anisotropy& aniso, double rbar) {
  return [aniso, rbar](const VecA& u) { return rbar / aniso.dual_norm(u); };
}

inline ScalarField sample_gamma(const SphereGrid& grid, const RadialFn& rho) {
  ScalarField g(grid.count());
  parallel_for(grid.count(), [&](std::int64_t a0, std::int64_t a1) {
    for (std::int64_t a = a0; a < a1; ++a) g[a] = std::log(rho(grid.direction((int)a)));
  });
  return g;
}

// ---------------------------------------------------------------------------
// Euclidean support functions with closed forms (for the Monte-Carlo oracle).

inline SupportFn support_ball(double r) {
  return [r](const VecA& x) { return r * x.norm(); };
}

// h(x) = sqrt(sum b_i^2 x_i^2): support of the ellipsoid with semi-axes b.
inline SupportFn support_ellipsoid(std::vector<double> semi) {
  return [semi = std::move(semi)](const VecA& x) {
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += sqr(semi[i] * x[i]);
    return std::sqrt(acc);
  };
}

inline SupportFn support_of_body(RadialFn rho, int n) {
  return [rho = std::move(rho), n](const VecA& x) { return support_of_radial(rho, n, x); };
}

// ---------------------------------------------------------------------------
// Seeded random convex bodies.  A smooth random field (powers of linear forms)
// perturbs the unit sphere; the amplitude shrinks geometrically until every
// anisotropic principal curvature is positive, so the construction is total
// and deterministic for a given (seed, grid, anisotropy).  The body keeps a
// closed radial form, so it can be re-sampled in any parametrization.

struct RandomBody {
  std::vector<VecA> dirs;
  std::vector<int> deg;
  std::vector<double> coeff;
  double amp = 0.0;
  double norm = 1.0;

  double rho(const VecA& x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dirs.size(); ++j)
      acc += coeff[j] * std::pow(dirs[j].dot(x), deg[j]);
    return 1.0 + amp * acc / norm;
  }

  RadialFn radial() const {
    return [body = *this](const VecA& x) { return body.rho(x); };
  }
};

inline RandomBody random_convex_body(const Anisotropy& aniso, const SphereGrid& grid,
                                     std::uint64_t seed, double amplitude = 0.3) {
  Rng rng(seed, 17);
  const int d = grid.dim(), terms = 6;
  RandomBody body;
  body.dirs.resize(terms);
  body.deg.resize(terms);
  body.coeff.resize(terms);
  for (int j = 0; j < terms; ++j) {
    VecA v(d);
    if (grid.mode() == GridMode::Axisym) {
      v.setZero();
      v[0] = 1.0;
    } else {
      for (int c = 0; c < d; ++c) v[c] = rng.normal();
      v /= v.norm();
    }
    body.dirs[j] = v;
    body.deg[j] = 1 + (int)(rng.uniform() * 3.0);
    body.coeff[j] = rng.normal();
  }
  ScalarField raw(grid.count());
  double sup = 0.0;
  for (int a = 0; a < grid.count(); ++a) {
    VecA x = grid.direction(a);
    double acc = 0.0;
    for (int j = 0; j < terms; ++j)
      acc += body.coeff[j] * std::pow(body.dirs[j].dot(x), body.deg[j]);
    raw[a] = acc;
    sup = std::max(sup, std::abs(acc));
  }
  body.norm = sup > 0.0 ? sup : 1.0;

  double amp = std::min(amplitude, 0.9);
  for (int tries = 0; tries < 48; ++tries) {
    RadialGraphState st;
    st.gamma.resize(grid.count());
    for (int a = 0; a < grid.count(); ++a)
      st.gamma[a] = std::log(1.0 + amp * raw[a] / body.norm);
    if (graph_geometry(aniso, grid, st).convex) {
      body.amp = amp;
      return body;
    }
    amp *= 0.65;
  }
  throw NumericalError("random convex body generator did not reach a convex state");
}

inline RadialGraphState random_convex_graph(const Anisotropy& aniso, const SphereGrid& grid,
                                            std::uint64_t seed, double amplitude = 0.3) {
  RandomBody body = random_convex_body(aniso, grid, seed, amplitude);
  RadialGraphState st;
  st.gamma.resize(grid.count());
  for (int a = 0; a < grid.count(); ++a)
    st.gamma[a] = std::log(body.rho(grid.direction(a)));
  return st;
}

}  // namespace wulff

#endif
