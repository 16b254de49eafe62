#ifndef WULFF_CURVATURE_HPP
#define WULFF_CURVATURE_HPP

#include "anisotropy.hpp"
#include "chart.hpp"
#include "core.hpp"
#include "grid.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <vector>

namespace wulff {

// ---------------------------------------------------------------------------
// Elementary symmetric functions.  e_k unnormalized, E_k = e_k / C(n,k).

inline std::vector<double> elementary_all(const VecT& v) {
  int n = (int)v.size();
  std::vector<double> e(n + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::min(i + 1, n); j >= 1; --j) e[j] += v[i] * e[j - 1];
  return e;
}

// e_j of the tuple with entry i removed, by synthetic deflation of the
// generating polynomial: ehat_j = e_j - v_i * ehat_{j-1}.
inline std::vector<double> elementary_deflate(const std::vector<double>& e, double vi) {
  int n = (int)e.size() - 1;
  std::vector<double> d(n, 0.0);
  d[0] = 1.0;
  for (int j = 1; j < n; ++j) d[j] = e[j] - vi * d[j - 1];
  return d;
}

inline double elementary_Ek(const VecT& kappa, int k) {
  int n = (int)kappa.size();
  if (k < 0 || k > n) throw ConfigError("elementary symmetric index out of range");
  return elementary_all(kappa)[k] / binomial(n, k);
}

// Psi = E_k^{1/k} and its gradient in the eigenvalue frame.
inline double psi_speed(const VecT& kappa, int k) {
  double ek = elementary_Ek(kappa, k);
  if (!(ek > 0.0)) throw DomainError("E_k not positive where a positive power is required");
  return std::pow(ek, 1.0 / k);
}

inline VecT psi_gradient(const VecT& kappa, int k) {
  int n = (int)kappa.size();
  std::vector<double> e = elementary_all(kappa);
  double psi = std::pow(e[k] / binomial(n, k), 1.0 / k);
  VecT g(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d = elementary_deflate(e, kappa[i]);
    g[i] = psi / k * d[k - 1] / e[k];
  }
  return g;
}

// Dual curvature function Phi(tau) = (E_n/E_{n-k})^{1/k}; satisfies
// Phi(tau) = 1 / E_k^{1/k}(1/tau) and is 1-homogeneous.
inline double phi_dual(const VecT& tau, int k) {
  int n = (int)tau.size();
  if (k < 1 || k > n) throw ConfigError("dual exponent k out of range");
  for (int i = 0; i < n; ++i)
    if (!(tau[i] > 0.0)) throw DomainError("phi_dual requires positive principal radii");
  std::vector<double> e = elementary_all(tau);
  double ratio = e[n] / e[n - k] * binomial(n, n - k);
  return std::pow(ratio, 1.0 / k);
}

inline VecT phi_dual_gradient(const VecT& tau, int k) {
  int n = (int)tau.size();
  std::vector<double> e = elementary_all(tau);
  double phi = std::pow(e[n] / e[n - k] * binomial(n, n - k), 1.0 / k);
  VecT g(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d = elementary_deflate(e, tau[i]);
    g[i] = phi / k * (1.0 / tau[i] - d[n - k - 1] / e[n - k]);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Flow states.

struct RadialGraphState {
  ScalarField gamma;  // log of the radial function
  double t = 0.0;
};

struct SupportState {
  ScalarField s;  // anisotropic support function on the Wulff chart
  double t = 0.0;
};

// ---------------------------------------------------------------------------
// Radial-graph curvature pipeline.

struct GraphGeometry {
  int n = 2;
  std::vector<double> rho, omega, sigma_f, f_nu;
  std::vector<double> sigma_iso;  // isotropic support <X, nu> = rho/omega
  std::vector<double> det_w;      // isotropic Gauss curvature det of the Weingarten map
  std::vector<VecA> nu, nu_f;     // unit normal and its Wulff image DF(nu)
  std::vector<MatT> hhat;         // anisotropic Weingarten in the A_F^{1/2} gauge
  std::vector<VecT> kappa;        // anisotropic principal curvatures, ascending
  std::vector<double> area_el;    // isotropic area density rho^n omega (per unit sphere measure)
  std::vector<double> a_max;      // largest eigenvalue of A_F(nu): diffusion bound for stepping
  bool convex = true;
  int bad_node = -1;

  double umbilicity_defect() const {
    // sup over nodes of n^2(n-1)(E_1^2 - E_2) = sup of sum_{i<j} (k_i - k_j)^2
    double worst = 0.0;
    for (const VecT& k : kappa) {
      double e1 = elementary_Ek(k, 1), e2 = elementary_Ek(k, 2);
      worst = std::max(worst, (double)k.size() * k.size() * (k.size() - 1) * (e1 * e1 - e2));
    }
    return worst;
  }
};

// Geometry of the radial graph rho = exp(gamma): normal, anisotropic
// Weingarten spectrum in the A_F^{1/2}-symmetrized gauge, sigma_F.
//
// Orthonormal-frame route: with t the frame gradient of gamma and C its frame
// Hessian on S^n, the tangent basis P_a = e_a + t_a x has Gram I + t t^T = L L^T
// and the isotropic Weingarten operator in the orthonormalized basis U = P L^{-T}
// is W = L^{-1}((I + t t^T) - C) L^{-T} / (rho omega).  kappa are the
// eigenvalues of A^{1/2} W A^{1/2} with A = U^T D^2F(nu) U.
inline GraphGeometry graph_geometry(const Anisotropy& aniso, const SphereGrid& grid,
                                    const RadialGraphState& state) {
  grid.check_field(state.gamma);
  if (aniso.n() != grid.n()) throw ConfigError("anisotropy and grid dimensions differ");
  const int n = grid.n(), count = grid.count();
  GraphGeometry geo;
  geo.n = n;
  geo.rho.resize(count);
  geo.omega.resize(count);
  geo.sigma_f.resize(count);
  geo.f_nu.resize(count);
  geo.sigma_iso.resize(count);
  geo.det_w.resize(count);
  geo.nu.resize(count);
  geo.nu_f.resize(count);
  geo.hhat.resize(count);
  geo.kappa.resize(count);
  geo.area_el.resize(count);
  geo.a_max.resize(count);
  std::vector<int> bad(count, 0);

  Padded pg = grid.pad(state.gamma);
  const bool full = grid.mode() == GridMode::Full2D;

  parallel_for(count, [&](std::size_t a0, std::size_t a1) {
    for (std::size_t a = a0; a < a1; ++a) {
      int i = grid.ring_of((int)a), j = grid.col_of((int)a);
      double th = grid.theta(i);
      double rho = std::exp(state.gamma[a]);

      VecT t(n);
      MatT C(n, n);
      VecA x = grid.direction((int)a);
      MatA P(aniso.dim(), n);  // tangent frame columns e_a (orthonormal on S^n)

      if (full) {
        double st = std::sin(th), ct = std::cos(th);
        double gt = grid.d_theta(pg, i, j), gp = grid.d_phi(pg, i, j);
        double gtt = grid.d_theta2(pg, i, j), gtp = grid.d_thetaphi(pg, i, j),
               gpp = grid.d_phi2(pg, i, j);
        t << gt, gp / st;
        C(0, 0) = gtt;
        C(0, 1) = C(1, 0) = (gtp - ct / st * gp) / st;
        C(1, 1) = gpp / (st * st) + ct / st * gt;
        double ph = grid.phi(j);
        Eigen::Vector3d et = s2_dtheta(th, ph), ep = s2_dphi(th, ph);
        P.col(0) << et.x(), et.y(), et.z();
        P.col(1) << ep.x() / st, ep.y() / st, ep.z() / st;
      } else {
        double gt = grid.d_theta(pg, i, 0), gtt = grid.d_theta2(pg, i, 0);
        double ct = std::cos(th), st = std::sin(th);
        t.setZero();
        t[0] = gt;
        C.setZero();
        C(0, 0) = gtt;
        for (int q = 1; q < n; ++q) C(q, q) = ct / st * gt;
        P.setZero();
        P(0, 0) = -st;
        P(1, 0) = ct;
        for (int q = 1; q < n; ++q) P(q + 1, q) = 1.0;
      }

      double omega = std::sqrt(1.0 + t.squaredNorm());
      VecA t_amb = P * t;
      VecA nu = (x - t_amb) / omega;

      MatT gram = MatT::Identity(n, n) + t * t.transpose();
      Eigen::LLT<MatT> llt(gram);
      MatT w_raw = gram - C;
      // W_U = L^{-1} (Gram - C) L^{-T} / (rho omega), symmetric
      MatT tmp = llt.matrixL().solve(w_raw);
      MatT w_lower = llt.matrixL().solve(tmp.transpose()).transpose();
      MatT w = 0.5 * (w_lower + w_lower.transpose()) / (rho * omega);

      MatT linv = llt.matrixL().solve(MatT::Identity(n, n));
      MatA p_graph = P + x * t.transpose();  // graph tangent frame e_a + t_a x
      MatA u_frame = p_graph * linv.transpose();
      MatT a_raw = u_frame.transpose() * aniso.hess(nu) * u_frame;
      MatT a_nu = 0.5 * (a_raw + a_raw.transpose());

      Eigen::SelfAdjointEigenSolver<MatT> ea(a_nu);
      geo.a_max[a] = ea.eigenvalues().maxCoeff();
      if (!(ea.eigenvalues().minCoeff() > 0.0)) {
        bad[a] = 1;
        geo.kappa[a] = VecT::Zero(n);
        geo.hhat[a] = MatT::Zero(n, n);
      } else {
        MatT sq = ea.operatorSqrt();
        MatT b = sq * w * sq;
        geo.hhat[a] = b;
        Eigen::SelfAdjointEigenSolver<MatT> eb(0.5 * (b + b.transpose()));
        geo.kappa[a] = eb.eigenvalues();
        if (!(geo.kappa[a][0] > 0.0)) bad[a] = 1;
      }

      double fn = aniso.value(nu);
      geo.rho[a] = rho;
      geo.omega[a] = omega;
      geo.nu[a] = nu;
      geo.nu_f[a] = aniso.wulff_point(nu);
      geo.f_nu[a] = fn;
      geo.sigma_iso[a] = rho / omega;
      geo.sigma_f[a] = rho / (omega * fn);
      geo.det_w[a] = w.determinant();
      geo.area_el[a] = std::pow(rho, n) * omega;
    }
  });
  for (int a = 0; a < count; ++a)
    if (bad[a]) {
      geo.convex = false;
      geo.bad_node = a;
      break;
    }
  return geo;
}

// ---------------------------------------------------------------------------
// Support-function curvature pipeline.

struct TauField {
  std::vector<MatT> tau;   // chart components (full2d: 2x2; axisym: diag n x n)
  std::vector<VecT> eigs;  // generalized eigenvalues against g-bar, ascending
  bool convex = true;
  int bad_node = -1;
};

// tau_ij = (nabla-bar)^2_ij s + gbar_ij s - (1/2) Q_ijk gbar^{kl} d_l s,
// the anisotropic principal radii matrix; eigenvalues against the pencil
// (tau, gbar).
inline TauField tau_matrix(const WulffChart& chart, const SupportState& state) {
  const SphereGrid& grid = chart.grid();
  grid.check_field(state.s);
  const int n = grid.n(), count = grid.count();
  TauField out;
  out.tau.resize(count);
  out.eigs.resize(count);
  std::vector<int> bad(count, 0);
  Padded ps = grid.pad(state.s);

  if (grid.mode() == GridMode::Full2D) {
    parallel_for(count, [&](std::size_t a0, std::size_t a1) {
      for (std::size_t a = a0; a < a1; ++a) {
        int i = grid.ring_of((int)a), j = grid.col_of((int)a);
        double st_ = grid.d_theta(ps, i, j), sp = grid.d_phi(ps, i, j);
        double stt = grid.d_theta2(ps, i, j), stp = grid.d_thetaphi(ps, i, j),
               spp = grid.d_phi2(ps, i, j);
        double s = state.s[a];
        // raised gradient
        double gu_t = chart.gi11[a] * st_ + chart.gi12[a] * sp;
        double gu_p = chart.gi12[a] * st_ + chart.gi22[a] * sp;
        MatT tau(2, 2);
        tau(0, 0) = stt - chart.gam_t_tt[a] * st_ - chart.gam_p_tt[a] * sp + chart.g11[a] * s -
                    0.5 * (chart.q111[a] * gu_t + chart.q112[a] * gu_p);
        tau(0, 1) = stp - chart.gam_t_tp[a] * st_ - chart.gam_p_tp[a] * sp + chart.g12[a] * s -
                    0.5 * (chart.q112[a] * gu_t + chart.q122[a] * gu_p);
        tau(1, 0) = tau(0, 1);
        tau(1, 1) = spp - chart.gam_t_pp[a] * st_ - chart.gam_p_pp[a] * sp + chart.g22[a] * s -
                    0.5 * (chart.q122[a] * gu_t + chart.q222[a] * gu_p);
        out.tau[a] = tau;

        MatT g(2, 2);
        g << chart.g11[a], chart.g12[a], chart.g12[a], chart.g22[a];
        Eigen::LLT<MatT> llt(g);
        MatT tmp = llt.matrixL().solve(tau);
        MatT b = llt.matrixL().solve(tmp.transpose()).transpose();
        Eigen::SelfAdjointEigenSolver<MatT> eb(0.5 * (b + b.transpose()));
        out.eigs[a] = eb.eigenvalues();
        if (!(out.eigs[a][0] > 0.0)) bad[a] = 1;
      }
    });
  } else {
    for (int i = 0; i < count; ++i) {
      double st_ = grid.d_theta(ps, i, 0), stt = grid.d_theta2(ps, i, 0);
      double s = state.s[i];
      double tau_m =
          stt - chart.dgm[i] / (2.0 * chart.gm[i]) * st_ + chart.gm[i] * s -
          0.5 * chart.qm[i] * st_ / chart.gm[i];
      double tau_o = chart.dgo[i] / (2.0 * chart.gm[i]) * st_ + chart.go[i] * s -
                     0.5 * chart.qo[i] * st_ / chart.gm[i];
      MatT tau = MatT::Zero(n, n);
      tau(0, 0) = tau_m;
      for (int q = 1; q < n; ++q) tau(q, q) = tau_o;
      out.tau[i] = tau;
      VecT ev(n);
      ev[0] = tau_m / chart.gm[i];
      for (int q = 1; q < n; ++q) ev[q] = tau_o / chart.go[i];
      std::sort(ev.data(), ev.data() + n);
      out.eigs[i] = ev;
      if (!(ev[0] > 0.0)) bad[i] = 1;
    }
  }
  for (int a = 0; a < count; ++a)
    if (bad[a]) {
      out.convex = false;
      out.bad_node = a;
      break;
    }
  return out;
}

// Surface point reconstruction from the support function:
// X = s z + gbar^{ab} d_b s d_a z.
inline std::vector<VecA> support_positions(const WulffChart& chart, const ScalarField& s) {
  const SphereGrid& grid = chart.grid();
  grid.check_field(s);
  Padded ps = grid.pad(s);
  std::vector<VecA> pos(grid.count());
  for (int a = 0; a < grid.count(); ++a) {
    int i = grid.ring_of(a), j = grid.col_of(a);
    double st_ = grid.d_theta(ps, i, j);
    if (grid.mode() == GridMode::Full2D) {
      double sp = grid.d_phi(ps, i, j);
      double gu_t = chart.gi11[a] * st_ + chart.gi12[a] * sp;
      double gu_p = chart.gi12[a] * st_ + chart.gi22[a] * sp;
      pos[a] = s[a] * chart.z[a] + gu_t * chart.dz_t[a] + gu_p * chart.dz_p[a];
    } else {
      pos[a] = s[a] * chart.z[a] + st_ / chart.gm[a] * chart.dz_t[a];
    }
  }
  return pos;
}

// Euclidean support function of a star-shaped body given by its radial
// function: h(x) = max_{u in S^n} rho(u) <x, u>, by multistart projected
// ascent (the maximizer is unique for convex bodies).
inline double support_of_radial(const std::function<double(const VecA&)>& rho, int n,
                                const VecA& x, VecA* argmax = nullptr) {
  auto value = [&](const VecA& u) { return rho(u) * u.dot(x); };
  std::vector<VecA> seeds = sphere_sample(n, 8);
  seeds.push_back(x / x.norm());
  double best = -1e300;
  VecA ubest;
  for (const VecA& s : seeds) {
    VecA u = s;
    double v = value(u);
    for (int it = 0; it < 300; ++it) {
      // central-difference surface gradient in an orthonormal tangent frame
      const double h = 1e-6;
      VecA g = VecA::Zero(n + 1);
      for (int c = 0; c <= n; ++c) {
        VecA e = VecA::Zero(n + 1);
        e[c] = 1.0;
        VecA up = (u + h * e).normalized(), um = (u - h * e).normalized();
        g[c] = (value(up) - value(um)) / (2 * h);
      }
      g -= g.dot(u) * u;
      if (g.norm() < 1e-12 * (std::abs(v) + 1.0)) break;
      double step = 0.5;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls) {
        VecA un = (u + step * g).normalized();
        double vn = value(un);
        if (vn > v) {
          u = un;
          v = vn;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (v > best) {
      best = v;
      ubest = u;
    }
  }
  if (argmax) *argmax = ubest;
  return best;
}

// Sample an analytically known Euclidean support function h onto a Wulff
// chart as the anisotropic support s = h/F.
inline ScalarField sample_support_from_h(const WulffChart& chart,
                                         const std::function<double(const VecA&)>& h) {
  const SphereGrid& grid = chart.grid();
  ScalarField s(grid.count());
  for (int a = 0; a < grid.count(); ++a) {
    VecA x = grid.direction(a);
    s[a] = h(x) / chart.aniso().value(x);
  }
  return s;
}

// Sample the anisotropic support function of a radially-described convex body
// onto a Wulff chart: s(node) = h(x_node)/F(x_node).
inline ScalarField sample_support(const WulffChart& chart,
                                  const std::function<double(const VecA&)>& rho) {
  const SphereGrid& grid = chart.grid();
  ScalarField s(grid.count());
  parallel_for(grid.count(), [&](std::size_t a0, std::size_t a1) {
    for (std::size_t a = a0; a < a1; ++a) {
      VecA x = grid.direction((int)a);
      s[a] = support_of_radial(rho, grid.n(), x) / chart.aniso().value(x);
    }
  });
  return s;
}

// Sup norm of the Codazzi-type residual of tau: the cubic-form-corrected
// covariant curl of each row of tau must vanish for a genuine support field.
// Full 2d charts only; vanishes under refinement at the stencil order.
inline double codazzi_residual(const WulffChart& chart, const TauField& tf) {
  const SphereGrid& g = chart.grid();
  if (g.mode() != GridMode::Full2D)
    throw DomainError("codazzi residual needs a full 2d chart");
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
    // raised components: tau^p_j = gbar^{pq} tau_{jq}
    double ht_t = chart.gi11[a] * t11[a] + chart.gi12[a] * t12[a];
    double hp_t = chart.gi12[a] * t11[a] + chart.gi22[a] * t12[a];
    double ht_p = chart.gi11[a] * t12[a] + chart.gi12[a] * t22[a];
    double hp_p = chart.gi12[a] * t12[a] + chart.gi22[a] * t22[a];
    double rt = g.d_theta(p12, i, j) - g.d_phi(p11, i, j) -
                (chart.gam_t_tt[a] * t12[a] + chart.gam_p_tt[a] * t22[a]) +
                (chart.gam_t_tp[a] * t11[a] + chart.gam_p_tp[a] * t12[a]) +
                0.5 * (chart.q112[a] * ht_t + chart.q122[a] * hp_t) -
                0.5 * (chart.q111[a] * ht_p + chart.q112[a] * hp_p);
    double rp = g.d_theta(p22, i, j) - g.d_phi(p12, i, j) -
                (chart.gam_t_tp[a] * t12[a] + chart.gam_p_tp[a] * t22[a]) +
                (chart.gam_t_pp[a] * t11[a] + chart.gam_p_pp[a] * t12[a]) +
                0.5 * (chart.q122[a] * ht_t + chart.q222[a] * hp_t) -
                0.5 * (chart.q112[a] * ht_p + chart.q122[a] * hp_p);
    w = std::max(w, std::max(std::abs(rt), std::abs(rp)));
  }
  return w;
}

}  // namespace wulff

#endif
