#ifndef WULFF_CHART_HPP
#define WULFF_CHART_HPP

#include "anisotropy.hpp"
#include "core.hpp"
#include "grid.hpp"
#include "sphere.hpp"

#include <cmath>
#include <vector>

namespace wulff {

// Chart of the unit Wulff surface pulled back through the map x -> grad F(x),
// with the dual metric g-bar, its Christoffel symbols, the cubic tensor Q in
// chart indices, and anisotropic area weights.  Everything that involves
// derivatives of the metric is closed-form: d_c gbar_ab = Q[dz_a, dz_b, dz_c]
// + G[dz_ac, dz_b] + G[dz_a, dz_bc], since dG = 2Q by definition of Q; stencil
// differentiation of gbar would cap the achievable chart accuracy at O(h^2).
//
// Full2D charts (n = 2) index symbols by (theta, phi); axisymmetric charts
// carry one meridian component and one orbit component per ring.
class WulffChart {
 public:
  WulffChart(const Anisotropy& aniso, const SphereGrid& grid)
      : aniso_(aniso), grid_(grid) {
    if (aniso_.n() != grid_.n()) throw ConfigError("anisotropy and grid dimensions differ");
    if (grid_.mode() == GridMode::Full2D)
      build_full2d();
    else
      build_axisym();
  }

  const SphereGrid& grid() const { return grid_; }
  const Anisotropy& aniso() const { return aniso_; }
  int n() const { return grid_.n(); }

  // --- full2d per-node chart data -----------------------------------------
  // metric (g11 = theta-theta, g12 = theta-phi, g22 = phi-phi), inverse,
  // Christoffels gamma[c][ab] with ab in {tt, tp, pp}, chart Q components.
  std::vector<double> g11, g12, g22;
  std::vector<double> gi11, gi12, gi22;
  std::vector<double> gam_t_tt, gam_t_tp, gam_t_pp;
  std::vector<double> gam_p_tt, gam_p_tp, gam_p_pp;
  std::vector<double> q111, q112, q122, q222;

  // --- axisym per-ring chart data ------------------------------------------
  std::vector<double> gm, go, dgm, dgo;  // meridian/orbit metric and theta-derivatives
  std::vector<double> qm, qo;            // Q_{mmm}, Q_{m oo} per orbit pair

  // shared: embedding point and its chart derivatives, area weights
  std::vector<VecA> z, dz_t, dz_p;
  std::vector<double> wf;  // anisotropic area weights, sum = (n+1)|W_F|

  double total_measure() const {
    return chunked_sum(wf.size(), [&](std::size_t i) { return wf[i]; });
  }

  // Covariant Hessian of a scalar: (nabla-bar)_ij f = d_i d_j f - Gamma^k_ij d_k f.
  // Full2D returns 2x2 blocks; axisymmetric returns n x n diagonal blocks
  // (meridian value first, then n-1 equal orbit values).
  std::vector<MatT> covariant_hessian(const ScalarField& f) const {
    grid_.check_field(f);
    std::vector<MatT> out(grid_.count());
    Padded p = grid_.pad(f);
    if (grid_.mode() == GridMode::Full2D) {
      parallel_for(grid_.count(), [&](std::size_t a0, std::size_t a1) {
        for (std::size_t a = a0; a < a1; ++a) {
          int i = grid_.ring_of((int)a), j = grid_.col_of((int)a);
          double ft = grid_.d_theta(p, i, j), fp = grid_.d_phi(p, i, j);
          MatT m(2, 2);
          m(0, 0) = grid_.d_theta2(p, i, j) - gam_t_tt[a] * ft - gam_p_tt[a] * fp;
          m(0, 1) = m(1, 0) = grid_.d_thetaphi(p, i, j) - gam_t_tp[a] * ft - gam_p_tp[a] * fp;
          m(1, 1) = grid_.d_phi2(p, i, j) - gam_t_pp[a] * ft - gam_p_pp[a] * fp;
          out[a] = m;
        }
      });
    } else {
      int n = grid_.n();
      for (int i = 0; i < grid_.n_theta(); ++i) {
        double ft = grid_.d_theta(p, i, 0);
        MatT m = MatT::Zero(n, n);
        m(0, 0) = grid_.d_theta2(p, i, 0) - dgm[i] / (2.0 * gm[i]) * ft;
        for (int q = 1; q < n; ++q) m(q, q) = dgo[i] / (2.0 * gm[i]) * ft;  // -Gamma^m_oo f'
        out[i] = m;
      }
    }
    return out;
  }

  // Laplace-Beltrami of a scalar on the chart (trace of the covariant Hessian).
  ScalarField laplacian(const ScalarField& f) const {
    std::vector<MatT> h = covariant_hessian(f);
    ScalarField out(grid_.count());
    if (grid_.mode() == GridMode::Full2D) {
      for (int a = 0; a < grid_.count(); ++a)
        out[a] = gi11[a] * h[a](0, 0) + 2.0 * gi12[a] * h[a](0, 1) + gi22[a] * h[a](1, 1);
    } else {
      for (int a = 0; a < grid_.count(); ++a) {
        out[a] = h[a](0, 0) / gm[a];
        for (int q = 1; q < grid_.n(); ++q) out[a] += h[a](q, q) / go[a];
      }
    }
    return out;
  }

 private:
  void build_full2d() {
    int count = grid_.count();
    for (auto* a : {&g11, &g12, &g22, &gi11, &gi12, &gi22, &gam_t_tt, &gam_t_tp, &gam_t_pp,
                    &gam_p_tt, &gam_p_tp, &gam_p_pp, &q111, &q112, &q122, &q222, &wf})
      a->resize(count);
    z.resize(count);
    dz_t.resize(count);
    dz_p.resize(count);

    parallel_for(count, [&](std::size_t a0, std::size_t a1) {
      for (std::size_t a = a0; a < a1; ++a) {
        int i = grid_.ring_of((int)a), j = grid_.col_of((int)a);
        double th = grid_.theta(i), ph = grid_.phi(j);
        VecA x = to_vec(s2_point(th, ph));
        VecA xt = to_vec(s2_dtheta(th, ph)), xp = to_vec(s2_dphi(th, ph));
        VecA xtt = to_vec(s2_dtheta2(th, ph)), xtp = to_vec(s2_dthetaphi(th, ph)),
             xpp = to_vec(s2_dphi2(th, ph));

        WulffPointFrame fr = aniso_.frame_at(x);
        MatA hf = aniso_.hess(x);
        Ten3 d3 = aniso_.third(x);

        VecA zt = hf * xt, zp = hf * xp;
        VecA ztt = d3.contract(xt) * xt + hf * xtt;
        VecA ztp = d3.contract(xt) * xp + hf * xtp;
        VecA zpp = d3.contract(xp) * xp + hf * xpp;

        z[a] = fr.z;
        dz_t[a] = zt;
        dz_p[a] = zp;

        auto gdot = [&](const VecA& u, const VecA& v) { return (double)(u.transpose() * fr.G * v); };
        double m11 = gdot(zt, zt), m12 = gdot(zt, zp), m22 = gdot(zp, zp);
        double det = m11 * m22 - m12 * m12;
        if (!(det > 0.0) || !(m11 > 0.0))
          throw NumericalError("chart metric lost positive definiteness");
        g11[a] = m11;
        g12[a] = m12;
        g22[a] = m22;
        gi11[a] = m22 / det;
        gi12[a] = -m12 / det;
        gi22[a] = m11 / det;

        // chart Q and closed-form metric derivatives
        double Qttt = fr.Q.apply(zt, zt, zt), Qttp = fr.Q.apply(zt, zt, zp);
        double Qtpp = fr.Q.apply(zt, zp, zp), Qppp = fr.Q.apply(zp, zp, zp);
        q111[a] = Qttt;
        q112[a] = Qttp;
        q122[a] = Qtpp;
        q222[a] = Qppp;

        // d_c g_ab = 2 Q[z_a, z_b, z_c]/2... (dG = 2Q with Q = D^3(F0)^2/2)
        double d_t_g11 = Qttt + 2.0 * gdot(ztt, zt);
        double d_p_g11 = Qttp + 2.0 * gdot(ztp, zt);
        double d_t_g12 = Qttp + gdot(ztt, zp) + gdot(zt, ztp);
        double d_p_g12 = Qtpp + gdot(ztp, zp) + gdot(zt, zpp);
        double d_t_g22 = Qtpp + 2.0 * gdot(ztp, zp);
        double d_p_g22 = Qppp + 2.0 * gdot(zpp, zp);

        // Gamma_{c,ab} = (d_a g_cb + d_b g_ca - d_c g_ab)/2
        double l_t_tt = 0.5 * d_t_g11;
        double l_p_tt = d_t_g12 - 0.5 * d_p_g11;
        double l_t_tp = 0.5 * d_p_g11;
        double l_p_tp = 0.5 * d_t_g22;
        double l_t_pp = d_p_g12 - 0.5 * d_t_g22;
        double l_p_pp = 0.5 * d_p_g22;

        gam_t_tt[a] = gi11[a] * l_t_tt + gi12[a] * l_p_tt;
        gam_p_tt[a] = gi12[a] * l_t_tt + gi22[a] * l_p_tt;
        gam_t_tp[a] = gi11[a] * l_t_tp + gi12[a] * l_p_tp;
        gam_p_tp[a] = gi12[a] * l_t_tp + gi22[a] * l_p_tp;
        gam_t_pp[a] = gi11[a] * l_t_pp + gi12[a] * l_p_pp;
        gam_p_pp[a] = gi12[a] * l_t_pp + gi22[a] * l_p_pp;
      }
    });
    build_weights_full2d();
  }

  void build_weights_full2d() {
    // anisotropic area density F det(A_F) integrated per cell with 4x4 Gauss,
    // so the total matches (n+1)|W_F| far below any flow-level tolerance
    std::vector<double> gn, gw;
    gauss_legendre(4, gn, gw);
    double ht = grid_.h_theta(), hp = grid_.h_phi();
    parallel_for(grid_.count(), [&](std::size_t a0, std::size_t a1) {
      for (std::size_t a = a0; a < a1; ++a) {
        int i = grid_.ring_of((int)a), j = grid_.col_of((int)a);
        double t0 = grid_.theta(i) - 0.5 * ht, p0 = grid_.phi(j) - 0.5 * hp;
        double acc = 0.0;
        for (int u = 0; u < 4; ++u)
          for (int v = 0; v < 4; ++v) {
            double th = t0 + 0.5 * ht * (1.0 + gn[u]);
            double ph = p0 + 0.5 * hp * (1.0 + gn[v]);
            VecA x = to_vec(s2_point(th, ph));
            acc += gw[u] * gw[v] * mu_density(x) * std::sin(th);
          }
        wf[a] = acc * 0.25 * ht * hp;
      }
    });
  }

  void build_axisym() {
    check_axisymmetric();
    int nt = grid_.n_theta(), n = grid_.n(), d = grid_.dim();
    for (auto* a : {&gm, &go, &dgm, &dgo, &qm, &qo, &wf}) a->resize(nt);
    z.resize(nt);
    dz_t.resize(nt);

    std::vector<double> gn, gw;
    gauss_legendre(8, gn, gw);
    double orbit_area = sphere_area(n - 1);
    double ht = grid_.h_theta();

    for (int i = 0; i < nt; ++i) {
      double th = grid_.theta(i);
      VecA x = VecA::Zero(d), xt = VecA::Zero(d), xtt;
      x[0] = std::cos(th);
      x[1] = std::sin(th);
      xt[0] = -std::sin(th);
      xt[1] = std::cos(th);
      xtt = -x;

      WulffPointFrame fr = aniso_.frame_at(x);
      MatA hf = aniso_.hess(x);
      Ten3 d3 = aniso_.third(x);
      VecA zt = hf * xt;
      VecA ztt = d3.contract(xt) * xt + hf * xtt;
      z[i] = fr.z;
      dz_t[i] = zt;
      for (int q = 2; q < d; ++q)
        if (std::abs(fr.z[q]) > 1e-10 * fr.z.norm())
          throw NumericalError("Wulff point left the axisymmetric slice plane");

      double zeta = fr.z[1];  // orbit radius of the surface of revolution
      double zeta_t = zt[1];
      VecA eo = VecA::Zero(d);
      eo[2] = 1.0;  // representative orbit direction at the slice
      double goo = (double)(eo.transpose() * fr.G * eo);

      gm[i] = (double)(zt.transpose() * fr.G * zt);
      go[i] = zeta * zeta * goo;
      if (!(gm[i] > 0.0) || !(go[i] > 0.0))
        throw NumericalError("chart metric lost positive definiteness");
      dgm[i] = fr.Q.apply(zt, zt, zt) + 2.0 * (double)(ztt.transpose() * fr.G * zt);
      dgo[i] = 2.0 * zeta * zeta_t * goo + zeta * zeta * fr.Q.apply(eo, eo, zt);
      qm[i] = fr.Q.apply(zt, zt, zt);
      qo[i] = zeta * zeta * fr.Q.apply(zt, eo, eo);

      // band-integrated anisotropic weight
      double a = i * ht, b = (i + 1) * ht;
      double acc = 0.0;
      for (int q = 0; q < 8; ++q) {
        double t = 0.5 * (a + b) + 0.5 * (b - a) * gn[q];
        VecA xs = VecA::Zero(d);
        xs[0] = std::cos(t);
        xs[1] = std::sin(t);
        acc += 0.5 * (b - a) * gw[q] * mu_density(xs) * std::pow(std::sin(t), n - 1);
      }
      wf[i] = orbit_area * acc;
    }
  }

  void check_axisymmetric() const {
    // F must be invariant under rotations about e_1 for the reduction to hold
    Rng rng(2718, 11);
    int d = grid_.dim();
    for (int trial = 0; trial < 64; ++trial) {
      VecA x(d);
      for (int i = 0; i < d; ++i) x[i] = rng.normal();
      x /= x.norm();
      double ang = rng.uniform(0.0, 2.0 * kPi);
      // rotation plane spanned by two of the coordinates orthogonal to e_1
      int p = 1 + (trial % (d - 1)), q = 1 + ((trial + 1) % (d - 1));
      VecA y = x;
      y[p] = std::cos(ang) * x[p] - std::sin(ang) * x[q];
      y[q] = std::sin(ang) * x[p] + std::cos(ang) * x[q];
      if (std::abs(aniso_.value(y) - aniso_.value(x)) > 1e-10)
        throw ConfigError("axisymmetric mode requires an anisotropy invariant about e_1");
    }
  }

  double mu_density(const VecA& x) const {
    MatA u = aniso_.tangent_basis(x);
    MatA a = u.transpose() * aniso_.hess(x) * u;
    return aniso_.value(x) * a.determinant();
  }

  static VecA to_vec(const Eigen::Vector3d& p) {
    VecA v(3);
    v << p.x(), p.y(), p.z();
    return v;
  }

  Anisotropy aniso_;
  SphereGrid grid_;
};

}  // namespace wulff

#endif
