#ifndef WULFF_SPHERE_HPP
#define WULFF_SPHERE_HPP

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace wulff {

// ---------------------------------------------------------------------------
// Multivariate polynomials over <= 6 variables, with exact derivatives.
// Used to represent solid (harmonic) polynomials: r^l * Y(x/r) is a
// homogeneous polynomial, so the harmonic anisotropy family gets closed-form
// ambient derivatives to third order out of this.

struct Poly {
  struct Term {
    double c;
    std::array<int, 6> e;  // exponents
  };
  int dim = 3;
  std::vector<Term> terms;

  static Poly constant(int dim, double c) {
    Poly p;
    p.dim = dim;
    if (c != 0.0) p.terms.push_back({c, {0, 0, 0, 0, 0, 0}});
    return p;
  }
  static Poly monomial(int dim, double c, std::array<int, 6> e) {
    Poly p;
    p.dim = dim;
    p.terms.push_back({c, e});
    return p;
  }

  double eval(const VecA& x) const {
    double s = 0.0;
    for (const Term& t : terms) {
      double m = t.c;
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < t.e[i]; ++k) m *= x[i];
      s += m;
    }
    return s;
  }

  Poly deriv(int i) const {
    Poly d;
    d.dim = dim;
    for (const Term& t : terms) {
      if (t.e[i] == 0) continue;
      Term td = t;
      td.c *= t.e[i];
      td.e[i] -= 1;
      d.terms.push_back(td);
    }
    d.compress();
    return d;
  }

  void compress() {
    std::map<std::array<int, 6>, double> acc;
    for (const Term& t : terms) acc[t.e] += t.c;
    terms.clear();
    for (auto& [e, c] : acc)
      if (c != 0.0) terms.push_back({c, e});
  }

  Poly operator*(const Poly& o) const {
    Poly p;
    p.dim = dim;
    for (const Term& a : terms)
      for (const Term& b : o.terms) {
        Term t;
        t.c = a.c * b.c;
        for (int i = 0; i < 6; ++i) t.e[i] = a.e[i] + b.e[i];
        p.terms.push_back(t);
      }
    p.compress();
    return p;
  }
  Poly operator+(const Poly& o) const {
    Poly p = *this;
    p.terms.insert(p.terms.end(), o.terms.begin(), o.terms.end());
    p.compress();
    return p;
  }
  Poly scaled(double s) const {
    Poly p = *this;
    for (Term& t : p.terms) t.c *= s;
    return p;
  }
};

// A polynomial together with its precomputed derivative tables up to order 3.
struct PolyJet {
  int dim = 3;
  Poly p;
  std::vector<Poly> d1;                            // [i]
  std::vector<std::vector<Poly>> d2;               // [i][j], j<=i stored full
  std::vector<std::vector<std::vector<Poly>>> d3;  // [i][j][k]

  explicit PolyJet(const Poly& poly) : dim(poly.dim), p(poly) {
    d1.resize(dim);
    d2.assign(dim, std::vector<Poly>(dim));
    d3.assign(dim, std::vector<std::vector<Poly>>(dim, std::vector<Poly>(dim)));
    for (int i = 0; i < dim; ++i) d1[i] = p.deriv(i);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) d2[i][j] = d1[i].deriv(j);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) d3[i][j][k] = d2[i][j].deriv(k);
  }
  PolyJet() = default;
};

// ---------------------------------------------------------------------------
// Real spherical harmonics on S^2 as Cartesian solid polynomials (orthonormal
// on the sphere, no Condon-Shortley phase), degrees l <= 4.

inline Poly solid_harmonic_s2(int l, int m) {
  if (l < 0 || l > 4 || std::abs(m) > l)
    throw ConfigError("spherical harmonic degree/order out of supported range (l <= 4)");
  auto mono = [](double c, int ex, int ey, int ez) {
    return Poly::monomial(3, c, {ex, ey, ez, 0, 0, 0});
  };
  const double pi = kPi;
  switch (l) {
    case 0:
      return mono(std::sqrt(1.0 / (4 * pi)), 0, 0, 0);
    case 1: {
      double c = std::sqrt(3.0 / (4 * pi));
      if (m == -1) return mono(c, 0, 1, 0);
      if (m == 0) return mono(c, 0, 0, 1);
      return mono(c, 1, 0, 0);
    }
    case 2: {
      if (m == -2) return mono(std::sqrt(15.0 / (4 * pi)), 1, 1, 0);
      if (m == -1) return mono(std::sqrt(15.0 / (4 * pi)), 0, 1, 1);
      if (m == 0) {
        double c = std::sqrt(5.0 / (16 * pi));
        return mono(2 * c, 0, 0, 2) + mono(-c, 2, 0, 0) + mono(-c, 0, 2, 0);
      }
      if (m == 1) return mono(std::sqrt(15.0 / (4 * pi)), 1, 0, 1);
      return mono(std::sqrt(15.0 / (16 * pi)), 2, 0, 0) + mono(-std::sqrt(15.0 / (16 * pi)), 0, 2, 0);
    }
    case 3: {
      if (m == -3) {
        double c = std::sqrt(35.0 / (32 * pi));
        return mono(3 * c, 2, 1, 0) + mono(-c, 0, 3, 0);
      }
      if (m == -2) return mono(std::sqrt(105.0 / (4 * pi)), 1, 1, 1);
      if (m == -1) {
        double c = std::sqrt(21.0 / (32 * pi));
        return mono(4 * c, 0, 1, 2) + mono(-c, 2, 1, 0) + mono(-c, 0, 3, 0);
      }
      if (m == 0) {
        double c = std::sqrt(7.0 / (16 * pi));
        return mono(2 * c, 0, 0, 3) + mono(-3 * c, 2, 0, 1) + mono(-3 * c, 0, 2, 1);
      }
      if (m == 1) {
        double c = std::sqrt(21.0 / (32 * pi));
        return mono(4 * c, 1, 0, 2) + mono(-c, 3, 0, 0) + mono(-c, 1, 2, 0);
      }
      if (m == 2) {
        double c = std::sqrt(105.0 / (16 * pi));
        return mono(c, 2, 0, 1) + mono(-c, 0, 2, 1);
      }
      double c = std::sqrt(35.0 / (32 * pi));
      return mono(c, 3, 0, 0) + mono(-3 * c, 1, 2, 0);
    }
    default: {  // l == 4
      if (m == -4) {
        double c = 0.75 * std::sqrt(35.0 / pi);
        return mono(c, 3, 1, 0) + mono(-c, 1, 3, 0);
      }
      if (m == -3) {
        double c = 0.75 * std::sqrt(35.0 / (2 * pi));
        return mono(3 * c, 2, 1, 1) + mono(-c, 0, 3, 1);
      }
      if (m == -2) {  // xy(6z^2 - x^2 - y^2)
        double c = 0.75 * std::sqrt(5.0 / pi);
        return mono(6 * c, 1, 1, 2) + mono(-c, 3, 1, 0) + mono(-c, 1, 3, 0);
      }
      if (m == -1) {  // yz(4z^2 - 3x^2 - 3y^2)
        double c = 0.75 * std::sqrt(5.0 / (2 * pi));
        return mono(4 * c, 0, 1, 3) + mono(-3 * c, 2, 1, 1) + mono(-3 * c, 0, 3, 1);
      }
      if (m == 0) {  // 35z^4 - 30z^2 r^2 + 3r^4 = 3x^4+3y^4+8z^4+6x^2y^2-24x^2z^2-24y^2z^2
        double c = (3.0 / 16.0) * std::sqrt(1.0 / pi);
        return mono(3 * c, 4, 0, 0) + mono(3 * c, 0, 4, 0) + mono(8 * c, 0, 0, 4) +
               mono(6 * c, 2, 2, 0) + mono(-24 * c, 2, 0, 2) + mono(-24 * c, 0, 2, 2);
      }
      if (m == 1) {
        double c = 0.75 * std::sqrt(5.0 / (2 * pi));
        return mono(4 * c, 1, 0, 3) + mono(-3 * c, 3, 0, 1) + mono(-3 * c, 1, 2, 1);
      }
      if (m == 2) {  // (x^2-y^2)(6z^2-x^2-y^2) = 6x^2z^2-6y^2z^2-x^4+y^4
        double c = (3.0 / 8.0) * std::sqrt(5.0 / pi);
        return mono(6 * c, 2, 0, 2) + mono(-6 * c, 0, 2, 2) + mono(-c, 4, 0, 0) + mono(c, 0, 4, 0);
      }
      if (m == 3) {
        double c = 0.75 * std::sqrt(35.0 / (2 * pi));
        return mono(c, 3, 0, 1) + mono(-3 * c, 1, 2, 1);
      }
      double c = (3.0 / 16.0) * std::sqrt(35.0 / pi);
      return mono(c, 4, 0, 0) + mono(-6 * c, 2, 2, 0) + mono(c, 0, 4, 0);
    }
  }
}

// ---------------------------------------------------------------------------
// Independent evaluation route: associated Legendre recurrence (no
// Condon-Shortley phase).  Kept as the cross-check for the polynomial tables.

inline double assoc_legendre(int l, int m, double t) {
  // P_m^m = (2m-1)!! (1-t^2)^{m/2}; upward recurrence in l.
  double somx2 = std::sqrt(std::max(0.0, 1.0 - t * t));
  double pmm = 1.0;
  for (int i = 1; i <= m; ++i) pmm *= (2 * i - 1) * somx2;
  if (l == m) return pmm;
  double pmmp1 = t * (2 * m + 1) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = (t * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

inline double real_sph_harm(int l, int m, double theta, double phi) {
  int am = std::abs(m);
  double lognum = std::lgamma(l - am + 1.0), logden = std::lgamma(l + am + 1.0);
  double norm = std::sqrt((2 * l + 1) / (4 * kPi) * std::exp(lognum - logden));
  double plm = assoc_legendre(l, am, std::cos(theta));
  if (m == 0) return norm * plm;
  double f = std::sqrt(2.0) * norm * plm;
  return m > 0 ? f * std::cos(am * phi) : f * std::sin(am * phi);
}

// ---------------------------------------------------------------------------
// Zonal harmonics on S^n (axis = e_1, the axisymmetry axis), normalized to 1
// at the pole, as Cartesian polynomials in d = n+1 variables.  Gegenbauer
// C_l^lambda with lambda = (n-1)/2; for n = 2 this is the Legendre polynomial.

inline std::vector<double> gegenbauer_coeffs(int l, double lambda) {
  // coefficient arrays in t, c[j] multiplies t^j
  std::vector<double> cm2{1.0};                 // C_0
  if (l == 0) return cm2;
  std::vector<double> cm1{0.0, 2.0 * lambda};   // C_1 = 2 lambda t
  if (l == 1) return cm1;
  for (int k = 2; k <= l; ++k) {
    std::vector<double> c(k + 1, 0.0);
    for (int j = 0; j + 1 <= k; ++j) c[j + 1] += 2.0 * (k + lambda - 1) * cm1[j] / k;
    for (std::size_t j = 0; j < cm2.size(); ++j) c[j] -= (k + 2 * lambda - 2) * cm2[j] / k;
    cm2 = cm1;
    cm1 = c;
  }
  return cm1;
}

inline Poly solid_zonal(int l, int d) {
  if (d < 3 || d > 6) throw ConfigError("zonal harmonic: ambient dimension out of range");
  double lambda = 0.5 * (d - 2);
  std::vector<double> c = gegenbauer_coeffs(l, lambda);
  double at_one = 0.0;
  for (double v : c) at_one += v;
  // r^l * C(x_1/r) / C(1) = sum_j c_j x_1^j r^{l-j} / C(1); l-j is even.
  Poly r2 = Poly::constant(d, 0.0);
  for (int i = 0; i < d; ++i) {
    std::array<int, 6> e{0, 0, 0, 0, 0, 0};
    e[i] = 2;
    r2 = r2 + Poly::monomial(d, 1.0, e);
  }
  Poly out = Poly::constant(d, 0.0);
  for (int j = 0; j <= l; ++j) {
    if (c[j] == 0.0) continue;
    int pw = l - j;
    if (pw % 2 != 0) throw NumericalError("gegenbauer parity violated");
    std::array<int, 6> e{0, 0, 0, 0, 0, 0};
    e[0] = j;
    Poly term = Poly::monomial(d, c[j] / at_one, e);
    for (int k = 0; k < pw / 2; ++k) term = term * r2;
    out = out + term;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch via the symmetric
// Jacobi matrix).  Exact for polynomials of degree <= 2n-1.

inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k - 1, k) = j(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    weights[i] = 2.0 * v0 * v0;
  }
}

// ---------------------------------------------------------------------------
// Direction samples.

inline std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ph = ga * i;
    pts.emplace_back(r * std::cos(ph), r * std::sin(ph), z);
  }
  return pts;
}

// Deterministic quasi-uniform sample on S^n for any n (Fibonacci for n = 2,
// seeded Gaussian directions otherwise).
inline std::vector<VecA> sphere_sample(int n, int count, std::uint64_t seed = 12345) {
  std::vector<VecA> out;
  out.reserve(count);
  if (n == 2) {
    for (const auto& p : fibonacci_sphere(count)) {
      VecA v(3);
      v << p.x(), p.y(), p.z();
      out.push_back(v);
    }
    return out;
  }
  Rng rng(seed, 7);
  for (int i = 0; i < count; ++i) {
    VecA v(n + 1);
    double nrm = 0.0;
    do {
      for (int j = 0; j <= n; ++j) v[j] = rng.normal();
      nrm = v.norm();
    } while (nrm < 1e-12);
    out.push_back(v / nrm);
  }
  return out;
}

// Latitude-longitude chart of S^2 (pole axis = z): position and derivatives.
inline Eigen::Vector3d s2_point(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}
inline Eigen::Vector3d s2_dtheta(double theta, double phi) {
  return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}
inline Eigen::Vector3d s2_dphi(double theta, double phi) {
  return {-std::sin(theta) * std::sin(phi), std::sin(theta) * std::cos(phi), 0.0};
}
inline Eigen::Vector3d s2_dtheta2(double theta, double phi) {
  return -s2_point(theta, phi);
}
inline Eigen::Vector3d s2_dthetaphi(double theta, double phi) {
  return {-std::cos(theta) * std::sin(phi), std::cos(theta) * std::cos(phi), 0.0};
}
inline Eigen::Vector3d s2_dphi2(double theta, double phi) {
  return {-std::sin(theta) * std::cos(phi), -std::sin(theta) * std::sin(phi), 0.0};
}

}  // namespace wulff

#endif
