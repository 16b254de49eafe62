#ifndef WULFF_FUNCTIONALS_HPP
#define WULFF_FUNCTIONALS_HPP

#include "anisotropy.hpp"
#include "chart.hpp"
#include "core.hpp"
#include "curvature.hpp"
#include "grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace wulff {

// ---------------------------------------------------------------------------
// Deterministic chunked accumulation of a small vector of integrands; the
// pattern mirrors chunked_sum so totals are independent of the thread count.

template <typename F>
inline std::vector<double> chunked_vec_sum(std::int64_t count, int dim, F&& term,
                                           std::int64_t chunk = 1024) {
  std::vector<double> total(dim, 0.0);
  if (count <= 0) return total;
  std::int64_t nchunks = (count + chunk - 1) / chunk;
  std::vector<double> partial((std::size_t)nchunks * dim, 0.0);
  parallel_for(
      count,
      [&](std::int64_t i0, std::int64_t i1) {
        double* acc = partial.data() + (std::size_t)(i0 / chunk) * dim;
        std::vector<double> buf(dim);
        for (std::int64_t i = i0; i < i1; ++i) {
          term(i, buf);
          for (int d = 0; d < dim; ++d) acc[d] += buf[d];
        }
      },
      chunk);
  for (std::int64_t c = 0; c < nchunks; ++c)
    for (int d = 0; d < dim; ++d) total[d] += partial[(std::size_t)c * dim + d];
  return total;
}

// ---------------------------------------------------------------------------
// Mixed volumes V_m(body, W_F) for m = 0..n+1 from surface integrals.
//
// Radial route over the unit sphere:  V_{n-k} = int E_k(kappa) dmu_F with
// dmu_F = F(nu) rho^n omega d(sphere), and the volume anchor
// V_{n+1} = (n+1) Vol = int sigma_F dmu_F = int rho^{n+1} d(sphere), the two
// integrands being identical pointwise (sigma_F F rho^n omega = rho^{n+1}).

inline std::vector<double> mixed_volumes_radial(const SphereGrid& grid,
                                                const GraphGeometry& geo) {
  const int n = geo.n;
  if (!geo.convex) throw DomainError("mixed volumes need a convex state (kappa > 0)");
  const std::vector<double>& w = grid.weights();
  std::vector<double> v = chunked_vec_sum(grid.count(), n + 2, [&](std::int64_t a, std::vector<double>& out) {
    std::vector<double> e = elementary_all(geo.kappa[a]);
    double common = geo.f_nu[a] * geo.area_el[a] * w[a];
    for (int m = 0; m <= n; ++m) out[m] = e[n - m] / binomial(n, n - m) * common;
    out[n + 1] = std::pow(geo.rho[a], n + 1) * w[a];
  });
  return v;
}

// Support route over the Wulff chart: the inverse Gauss map pulls dmu_F of the
// body back to E_n(tau) dmu_F^Sigma, so E_k(kappa) dmu_F = E_{n-k}(tau) wf and
// sigma_F E_k(kappa) dmu_F = s E_{n-k-1}(tau) wf.  V_m for m <= n uses the
// curvature form; the top volume uses the support form (the anchor
// V_{n+1} = (n+1) Vol is then definitional).

inline std::vector<double> mixed_volumes_support(const WulffChart& chart, const TauField& tau,
                                                 const ScalarField& s) {
  const int n = chart.n();
  if (!tau.convex) throw DomainError("mixed volumes need a convex state (tau > 0)");
  chart.grid().check_field(s);
  std::vector<double> v =
      chunked_vec_sum(chart.grid().count(), n + 2, [&](std::int64_t a, std::vector<double>& out) {
        std::vector<double> e = elementary_all(tau.eigs[a]);
        for (int m = 0; m <= n; ++m) out[m] = chart.wf[a] * e[m] / binomial(n, m);
        out[n + 1] = chart.wf[a] * s[a] * e[n];
      });
  return v;
}

// Spec-shaped scalar accessor.
inline double mixed_volume_surface(const SphereGrid& grid, const GraphGeometry& geo, int m) {
  if (m < 0 || m > geo.n + 1) throw ConfigError("mixed volume index out of range");
  return mixed_volumes_radial(grid, geo)[m];
}

// ---------------------------------------------------------------------------
// Minkowski identity residuals eps_k = int E_{k+1} sigma_F dmu_F - int E_k dmu_F
// for k = 0..n-1 (all analytically zero on closed convex hypersurfaces).

inline std::vector<double> minkowski_residuals_radial(const SphereGrid& grid,
                                                      const GraphGeometry& geo) {
  const int n = geo.n;
  if (!geo.convex) throw DomainError("Minkowski residuals need a convex state");
  const std::vector<double>& w = grid.weights();
  return chunked_vec_sum(grid.count(), n, [&](std::int64_t a, std::vector<double>& out) {
    std::vector<double> e = elementary_all(geo.kappa[a]);
    double rpow = std::pow(geo.rho[a], n + 1) * w[a];           // sigma_F dmu_F
    double area = geo.f_nu[a] * geo.area_el[a] * w[a];          // dmu_F
    for (int k = 0; k < n; ++k)
      out[k] = e[k + 1] / binomial(n, k + 1) * rpow - e[k] / binomial(n, k) * area;
  });
}

// Support-route residuals are exactly the gap between the two integral
// representations of the same mixed volume: eps_k = V_{n-k}[support form] -
// V_{n-k}[curvature form].
inline std::vector<double> minkowski_residuals_support(const WulffChart& chart,
                                                       const TauField& tau,
                                                       const ScalarField& s) {
  const int n = chart.n();
  if (!tau.convex) throw DomainError("Minkowski residuals need a convex state");
  chart.grid().check_field(s);
  return chunked_vec_sum(chart.grid().count(), n, [&](std::int64_t a, std::vector<double>& out) {
    std::vector<double> e = elementary_all(tau.eigs[a]);
    for (int k = 0; k < n; ++k) {
      int m = n - k;
      out[k] = chart.wf[a] * (s[a] * e[m - 1] / binomial(n, m - 1) - e[m] / binomial(n, m));
    }
  });
}

inline double minkowski_residual(const SphereGrid& grid, const GraphGeometry& geo, int k) {
  if (k < 0 || k > geo.n - 1) throw ConfigError("Minkowski residual index out of range");
  return minkowski_residuals_radial(grid, geo)[k];
}

// The volume-anchor residual int sigma_F dmu_F - (n+1) Vol.  Both sides are
// the same analytic quantity; here they are evaluated through their two
// distinct factorizations (sigma_F * F * rho^n * omega vs rho^{n+1}) as a
// regression guard against indexing or normalization drift.
inline double volume_anchor_residual(const SphereGrid& grid, const GraphGeometry& geo) {
  const std::vector<double>& w = grid.weights();
  double sigma_int = chunked_sum(grid.count(), [&](std::int64_t a) {
    return geo.sigma_f[a] * geo.f_nu[a] * geo.area_el[a] * w[a];
  });
  double vol_form = chunked_sum(grid.count(), [&](std::int64_t a) {
    return std::pow(geo.rho[a], geo.n + 1) * w[a];
  });
  return sigma_int - vol_form;
}

// ---------------------------------------------------------------------------
// Wulff-shape volume |W_F| from the chart measure: total mu_F mass of Sigma_F
// equals (n+1)|W_F|.

inline double wulff_volume(const WulffChart& chart) {
  return chart.total_measure() / (chart.n() + 1);
}

// ---------------------------------------------------------------------------
// Alexandrov-Fenchel-type slack  int E_k dmu_F - (n+1) Vol^{(n-k)/(n+1)} |W_F|^{(k+1)/(n+1)},
// nonnegative for every convex body, zero exactly on scaled Wulff shapes.

inline double af_check(const std::vector<double>& v, int n, int k, double wulff_vol) {
  if (k < 0 || k > n - 2) throw ConfigError("AF slack index must satisfy 0 <= k <= n-2");
  double vol = v[n + 1] / (n + 1);
  return v[n - k] - (n + 1) * std::pow(vol, (n - k) / (n + 1.0)) *
                        std::pow(wulff_vol, (k + 1) / (n + 1.0));
}

inline double af_check(const SphereGrid& grid, const GraphGeometry& geo, int k,
                       double wulff_vol) {
  return af_check(mixed_volumes_radial(grid, geo), geo.n, k, wulff_vol);
}

// ---------------------------------------------------------------------------
// Isoperimetric ratio I_k = V_{n+2-k} / V_{n+1}^{(n+2-k)/(n+1)}, scale
// invariant; equals ((n+1)|W_F|)^{(k-1)/(n+1)} exactly on scaled Wulff shapes.

inline double isoperimetric_ratio(const std::vector<double>& v, int n, int k) {
  if (k < 2 || k > n) throw ConfigError("isoperimetric exponent k must satisfy 2 <= k <= n");
  return v[n + 2 - k] / std::pow(v[n + 1], (n + 2 - k) / (n + 1.0));
}

inline double wulff_isoperimetric_value(int n, int k, double wulff_vol) {
  return std::pow((n + 1) * wulff_vol, (k - 1) / (n + 1.0));
}

// ---------------------------------------------------------------------------
// Bundled diagnostics for one state; the rows a flow run records over time.

struct FunctionalReport {
  int n = 0;
  int k = 2;                     // flow exponent the ratio column refers to
  double vol = 0.0;              // enclosed volume
  std::vector<double> v;         // V_0 .. V_{n+1}
  double area_f = 0.0;           // anisotropic area |M|_F = V_n
  double i_k = 0.0;              // isoperimetric ratio I_k
  std::vector<double> mink_res;  // Minkowski residuals eps_0 .. eps_{n-1}
  std::vector<double> af;        // AF slack for 0..n-2 (filled when |W_F| known)
  double s_min = 0.0, s_max = 0.0;
  double kappa_min = 0.0, kappa_max = 0.0;
  double umbilicity = 0.0;
};

namespace detail {
inline double umbilicity_from_kappa(const VecT& kappa) {
  double acc = 0.0;
  for (int i = 0; i < kappa.size(); ++i)
    for (int j = i + 1; j < kappa.size(); ++j) acc += sqr(kappa[i] - kappa[j]);
  return acc;
}

inline void fill_common(FunctionalReport& r, int n, int k, double wulff_vol) {
  r.n = n;
  r.k = k;
  r.vol = r.v[n + 1] / (n + 1);
  r.area_f = r.v[n];
  r.i_k = isoperimetric_ratio(r.v, n, k);
  if (wulff_vol > 0.0)
    for (int kk = 0; kk <= n - 2; ++kk) r.af.push_back(af_check(r.v, n, kk, wulff_vol));
}
}  // namespace detail

inline FunctionalReport report_radial(const SphereGrid& grid, const GraphGeometry& geo, int k,
                                      double wulff_vol = -1.0) {
  if (!geo.convex) throw DomainError("functional report needs a convex state");
  FunctionalReport r;
  r.v = mixed_volumes_radial(grid, geo);
  r.mink_res = minkowski_residuals_radial(grid, geo);
  r.s_min = r.s_max = geo.sigma_f[0];
  r.kappa_min = r.kappa_max = geo.kappa[0][0];
  for (int a = 0; a < grid.count(); ++a) {
    r.s_min = std::min(r.s_min, geo.sigma_f[a]);
    r.s_max = std::max(r.s_max, geo.sigma_f[a]);
    r.kappa_min = std::min(r.kappa_min, geo.kappa[a][0]);
    r.kappa_max = std::max(r.kappa_max, geo.kappa[a][geo.n - 1]);
  }
  r.umbilicity = geo.umbilicity_defect();
  detail::fill_common(r, geo.n, k, wulff_vol);
  return r;
}

inline FunctionalReport report_support(const WulffChart& chart, const TauField& tau,
                                       const ScalarField& s, int k, double wulff_vol = -1.0) {
  if (!tau.convex) throw DomainError("functional report needs a convex state");
  const int n = chart.n();
  FunctionalReport r;
  r.v = mixed_volumes_support(chart, tau, s);
  r.mink_res = minkowski_residuals_support(chart, tau, s);
  r.s_min = r.s_max = s[0];
  r.kappa_min = 1.0 / tau.eigs[0][n - 1];
  r.kappa_max = 1.0 / tau.eigs[0][0];
  r.umbilicity = 0.0;
  for (int a = 0; a < chart.grid().count(); ++a) {
    r.s_min = std::min(r.s_min, s[a]);
    r.s_max = std::max(r.s_max, s[a]);
    r.kappa_min = std::min(r.kappa_min, 1.0 / tau.eigs[a][n - 1]);
    r.kappa_max = std::max(r.kappa_max, 1.0 / tau.eigs[a][0]);
    VecT kap(n);
    for (int i = 0; i < n; ++i) kap[i] = 1.0 / tau.eigs[a][n - 1 - i];
    r.umbilicity = std::max(r.umbilicity, detail::umbilicity_from_kappa(kap));
  }
  detail::fill_common(r, n, k, wulff_vol);
  return r;
}

// ---------------------------------------------------------------------------
// Monte-Carlo Minkowski-sum oracle.  Estimates Vol(body + eps W_F) by
// hit-or-miss sampling at eps in {0, 0.1, ..., 0.5} * scale, fits the exact
// degree-(n+1) polynomial in eps, and converts coefficients to mixed volumes
// via Vol(body + eps W_F) = sum_m C(n+1,m) eps^m V_{n+1-m} / (n+1).
//
// Membership x in body + eps W_F is decided against the support-function sum
// h_body + eps F on a fixed direction set (a circumscribed polytope; its
// relative volume excess with ~2e3 tangent planes sits far below the MC error
// bar).  Sampling is stratified into equal-volume slabs, each fed by its own
// seeded stream, so totals are bit-identical for any thread count.

struct McMixedVolumes {
  std::vector<double> eps;     // Minkowski offsets sampled
  std::vector<double> vol;     // hit-or-miss volume estimates per offset
  std::vector<double> vol_se;  // binomial standard errors of vol
  std::vector<double> v;       // V_0 .. V_{n+1}
  std::vector<double> v_se;    // 1-sigma errors propagated through the fit
};

inline McMixedVolumes mc_mixed_volume(const Anisotropy& aniso,
                                      const std::function<double(const VecA&)>& support_body,
                                      double scale, std::uint64_t seed,
                                      std::int64_t samples_per_eps = 2000000,
                                      int n_dirs = 2000) {
  const int d = aniso.dim(), n = aniso.n();
  if (!(scale > 0.0)) throw ConfigError("Minkowski-sum scale must be positive");

  // Fixed direction set: Fibonacci lattice on S^2, seeded uniform otherwise.
  std::vector<VecA> dirs;
  dirs.reserve(n_dirs);
  if (d == 3) {
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < n_dirs; ++i) {
      double zc = 1.0 - (2.0 * i + 1.0) / n_dirs;
      double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      double ph = 2.0 * kPi * i / golden;
      VecA u(3);
      u << rr * std::cos(ph), rr * std::sin(ph), zc;
      dirs.push_back(u);
    }
  } else {
    Rng rng(seed, 0xd1ec7105);
    for (int i = 0; i < n_dirs; ++i) {
      VecA u(d);
      for (int c = 0; c < d; ++c) u[c] = rng.normal();
      dirs.push_back(u / u.norm());
    }
  }
  std::vector<double> dird((std::size_t)n_dirs * d), hb(n_dirs), fw(n_dirs);
  for (int i = 0; i < n_dirs; ++i) {
    for (int c = 0; c < d; ++c) dird[(std::size_t)i * d + c] = dirs[i][c];
    hb[i] = support_body(dirs[i]);
    fw[i] = aniso.value(dirs[i]);
  }

  McMixedVolumes out;
  for (int e = 0; e <= 5; ++e) out.eps.push_back(0.1 * e * scale);
  double eps_max = out.eps.back();

  // Bounding box from the axis support values at the largest offset.
  std::vector<double> lo(d), hi(d);
  int axis_long = 0;
  for (int c = 0; c < d; ++c) {
    VecA ep = VecA::Zero(d), em = VecA::Zero(d);
    ep[c] = 1.0;
    em[c] = -1.0;
    hi[c] = support_body(ep) + eps_max * aniso.value(ep) + 1e-9 * scale;
    lo[c] = -(support_body(em) + eps_max * aniso.value(em)) - 1e-9 * scale;
    if (hi[c] - lo[c] > hi[axis_long] - lo[axis_long]) axis_long = c;
  }
  double box_vol = 1.0;
  for (int c = 0; c < d; ++c) box_vol *= hi[c] - lo[c];

  const std::int64_t pts_per_chunk = 1000;
  int slabs = 50;
  if (samples_per_eps < slabs * pts_per_chunk) slabs = 1;
  std::int64_t chunks_per_slab =
      std::max<std::int64_t>(1, samples_per_eps / (slabs * pts_per_chunk));
  std::int64_t nchunks = (std::int64_t)slabs * chunks_per_slab;
  std::int64_t n_slab = chunks_per_slab * pts_per_chunk;  // samples per slab
  double slab_vol = box_vol / slabs;
  double slab_h = (hi[axis_long] - lo[axis_long]) / slabs;

  for (std::size_t e = 0; e < out.eps.size(); ++e) {
    double eps = out.eps[e];
    std::vector<double> thr(n_dirs);
    for (int i = 0; i < n_dirs; ++i) thr[i] = hb[i] + eps * fw[i];
    std::vector<std::int64_t> hits(nchunks, 0);
    parallel_for(
        nchunks,
        [&](std::int64_t c0, std::int64_t c1) {
          std::vector<double> x(d);
          for (std::int64_t c = c0; c < c1; ++c) {
            int slab = (int)(c / chunks_per_slab);
            Rng rng(seed, (std::uint64_t)(e + 1) * 0x100000000ULL + (std::uint64_t)c);
            double s_lo = lo[axis_long] + slab * slab_h;
            std::int64_t acc = 0;
            for (std::int64_t p = 0; p < pts_per_chunk; ++p) {
              for (int cc = 0; cc < d; ++cc)
                x[cc] = cc == axis_long ? s_lo + slab_h * rng.uniform()
                                        : lo[cc] + (hi[cc] - lo[cc]) * rng.uniform();
              bool inside = true;
              const double* dp = dird.data();
              for (int i = 0; i < n_dirs; ++i, dp += d) {
                double dot = 0.0;
                for (int cc = 0; cc < d; ++cc) dot += x[cc] * dp[cc];
                if (dot > thr[i]) {
                  inside = false;
                  break;
                }
              }
              if (inside) ++acc;
            }
            hits[c] = acc;
          }
        },
        1);
    double vol = 0.0, var = 0.0;
    for (int s = 0; s < slabs; ++s) {
      std::int64_t h = 0;
      for (std::int64_t c = 0; c < chunks_per_slab; ++c) h += hits[s * chunks_per_slab + c];
      double p = (double)h / (double)n_slab;
      vol += slab_vol * p;
      var += sqr(slab_vol) * p * (1.0 - p) / (double)n_slab;
    }
    out.vol.push_back(vol);
    out.vol_se.push_back(std::sqrt(var));
  }

  // Weighted polynomial fit in t = eps/eps_max (conditioning), then unscale.
  const int ncoef = n + 2;
  Eigen::MatrixXd a(6, ncoef);
  Eigen::VectorXd y(6), wgt(6);
  double se_floor = 1e-12 * out.vol.back();
  for (int r = 0; r < 6; ++r) {
    double t = out.eps[r] / eps_max, tp = 1.0;
    for (int m = 0; m < ncoef; ++m) {
      a(r, m) = tp;
      tp *= t;
    }
    y[r] = out.vol[r];
    wgt[r] = 1.0 / sqr(std::max(out.vol_se[r], se_floor));
  }
  Eigen::MatrixXd g = a.transpose() * wgt.asDiagonal() * a;
  Eigen::VectorXd rhs = a.transpose() * wgt.asDiagonal() * y;
  Eigen::VectorXd dg = g.diagonal().cwiseSqrt();
  Eigen::MatrixXd gn = dg.cwiseInverse().asDiagonal() * g * dg.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gn);
  if (svd.singularValues()(ncoef - 1) < 1e-10 * svd.singularValues()(0))
    throw NumericalError("mixed-volume fit ill-conditioned; increase the epsilon spread");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  Eigen::VectorXd coef = ldlt.solve(rhs);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(ncoef, ncoef));

  out.v.resize(ncoef);
  out.v_se.resize(ncoef);
  for (int m = 0; m <= n + 1; ++m) {
    int j = n + 1 - m;  // power of eps carrying V_m
    double unscale = std::pow(eps_max, -j);
    double norm = (n + 1) / (double)binomial(n + 1, j);
    out.v[m] = norm * coef[j] * unscale;
    out.v_se[m] = norm * std::sqrt(std::max(0.0, cov(j, j))) * unscale;
  }
  return out;
}

}  // namespace wulff

#endif
