#ifndef WULFF_SPECTRAL_HPP
#define WULFF_SPECTRAL_HPP

// Discretization of the linearized flow operator
//
//   L h = lap-bar h - 1/2 g-bar^{ij} Q_{ijk} (grad-bar h)^k
//
// on the Wulff shape Sigma_F, its first nonzero eigenvalue, and least-squares
// fitting of exponential decay rates from flow diagnostics.
//
// The key structural fact (checked numerically in the test suite) is that L
// is a weighted Laplacian: the mu_F density w in chart coordinates satisfies
// d_i log(w / sqrt(det g-bar)) = -1/2 g-bar^{kl} Q_{kli}, hence
//
//   L h = (1/w) d_i ( w g-bar^{ij} d_j h ).
//
// We therefore assemble the weak form  a(u,v) = -int w g^{ij} d_i u d_j v
// with bilinear elements on the latitude-longitude cells (linear elements on
// the meridian in the axisymmetric reduction) and a lumped mu_F mass matrix.
// This makes the weighted matrix symmetric and the spectrum non-positive by
// construction, with constants exactly in the kernel.  The polar caps (half a
// band at each pole) are not covered by cells; the resulting natural boundary
// condition perturbs eigenvalues at O(h^2), the order of the scheme.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "anisotropy.hpp"
#include "chart.hpp"
#include "core.hpp"
#include "grid.hpp"

namespace wulff {

struct LinearizedOperator {
  const WulffChart* chart = nullptr;
  Eigen::SparseMatrix<double> a;  // symmetric stiffness, negative semidefinite
  Eigen::VectorXd mass;           // lumped mu_F masses (diagonal inner product)
  int count = 0;

  // L h at the nodes: M^{-1} A h.
  ScalarField apply(const ScalarField& h) const {
    Eigen::Map<const Eigen::VectorXd> hv(h.data(), h.size());
    Eigen::VectorXd r = a * hv;
    ScalarField out(count);
    for (int i = 0; i < count; ++i) out[i] = r[i] / mass[i];
    return out;
  }
};

namespace detail {

// mu_F density in chart coordinates: dmu_F = F(x) det A_F(x) dsigma_{S^n}.
inline double mu_density_at(const Anisotropy& aniso, const VecA& x) {
  return aniso.value(x) * aniso.a_matrix(x).determinant();
}

}  // namespace detail

inline LinearizedOperator build_operator(const WulffChart& chart) {
  const SphereGrid& grid = chart.grid();
  const Anisotropy& aniso = chart.aniso();
  const int count = grid.count();
  LinearizedOperator op;
  op.chart = &chart;
  op.count = count;
  op.mass = Eigen::VectorXd::Zero(count);

  // nodal values of the density and of the flux coefficients w * g^{ij}
  std::vector<double> w(count), c11(count), c12(count), c22(count);
  if (grid.mode() == GridMode::Full2D) {
    parallel_for(count, [&](int a0, int a1) {
      for (int a = a0; a < a1; ++a) {
        double wa = detail::mu_density_at(aniso, grid.direction(a)) *
                    std::sin(grid.theta(grid.ring_of(a)));
        w[a] = wa;
        c11[a] = wa * chart.gi11[a];
        c12[a] = wa * chart.gi12[a];
        c22[a] = wa * chart.gi22[a];
      }
    });
  } else {
    // meridian density from the exact band masses; w g^{tt} with g^{tt}=1/gm
    for (int i = 0; i < count; ++i) {
      w[i] = chart.wf[i] / grid.h_theta();
      c11[i] = w[i] / chart.gm[i];
    }
  }
  for (int a = 0; a < count; ++a)
    if (!(w[a] > 0.0)) throw NumericalError("degenerate chart density in operator assembly");

  std::vector<Eigen::Triplet<double>> trip;
  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

  if (grid.mode() == GridMode::Full2D) {
    const int nt = grid.n_theta();
    const int np = grid.n_phi();
    const double ht = grid.h_theta();
    const double hp = grid.h_phi();
    trip.reserve((std::size_t)(nt - 1) * np * 16);
    for (int i = 0; i + 1 < nt; ++i) {
      for (int j = 0; j < np; ++j) {
        int jn = (j + 1) % np;
        int nd[4] = {grid.id(i, j), grid.id(i, jn), grid.id(i + 1, j), grid.id(i + 1, jn)};
        double aloc[4][4] = {};
        double mloc[4] = {};
        for (int gt = 0; gt < 2; ++gt) {
          for (int gq = 0; gq < 2; ++gq) {
            double xi = gp[gt], eta = gp[gq];  // xi along theta, eta along phi
            // bilinear shapes in node order (i,j), (i,jn), (i+1,j), (i+1,jn)
            double sh[4] = {(1 - xi) * (1 - eta), (1 - xi) * eta, xi * (1 - eta), xi * eta};
            double dt[4] = {-(1 - eta) / ht, -eta / ht, (1 - eta) / ht, eta / ht};
            double dp[4] = {-(1 - xi) / hp, (1 - xi) / hp, -xi / hp, xi / hp};
            double jw = 0.25 * ht * hp;  // gauss weight (1/4) times cell jacobian
            double g11 = 0, g12 = 0, g22 = 0, gw = 0;
            for (int p = 0; p < 4; ++p) {
              g11 += sh[p] * c11[nd[p]];
              g12 += sh[p] * c12[nd[p]];
              g22 += sh[p] * c22[nd[p]];
              gw += sh[p] * w[nd[p]];
            }
            for (int p = 0; p < 4; ++p) {
              mloc[p] += jw * gw * sh[p];
              for (int q = 0; q < 4; ++q)
                aloc[p][q] -= jw * (g11 * dt[p] * dt[q] + g22 * dp[p] * dp[q] +
                                    g12 * (dt[p] * dp[q] + dp[p] * dt[q]));
            }
          }
        }
        for (int p = 0; p < 4; ++p) {
          op.mass[nd[p]] += mloc[p];
          for (int q = 0; q < 4; ++q) trip.emplace_back(nd[p], nd[q], aloc[p][q]);
        }
      }
    }
  } else {
    const double ht = grid.h_theta();
    trip.reserve((std::size_t)(count - 1) * 4);
    for (int i = 0; i + 1 < count; ++i) {
      double aloc[2][2] = {};
      double mloc[2] = {};
      for (int gt = 0; gt < 2; ++gt) {
        double xi = gp[gt];
        double sh[2] = {1 - xi, xi};
        double dt[2] = {-1.0 / ht, 1.0 / ht};
        double jw = 0.5 * ht;
        double gc = sh[0] * c11[i] + sh[1] * c11[i + 1];
        double gw = sh[0] * w[i] + sh[1] * w[i + 1];
        for (int p = 0; p < 2; ++p) {
          mloc[p] += jw * gw * sh[p];
          for (int q = 0; q < 2; ++q) aloc[p][q] -= jw * gc * dt[p] * dt[q];
        }
      }
      for (int p = 0; p < 2; ++p) {
        op.mass[i + p] += mloc[p];
        for (int q = 0; q < 2; ++q) trip.emplace_back(i + p, i + q, aloc[p][q]);
      }
    }
  }

  op.a.resize(count, count);
  op.a.setFromTriplets(trip.begin(), trip.end());
  for (int i = 0; i < count; ++i)
    if (!(op.mass[i] > 0.0)) throw NumericalError("degenerate lumped mass in operator assembly");
  return op;
}

// Collocation form of L from the chart's covariant calculus, kept as an
// independent cross-check of the variational assembly.
inline ScalarField apply_collocation(const WulffChart& chart, const ScalarField& f) {
  const SphereGrid& grid = chart.grid();
  const int count = grid.count();
  ScalarField lap = chart.laplacian(f);
  FieldDerivs d = grid.derivatives(f);
  ScalarField out(count);
  if (grid.mode() == GridMode::Full2D) {
    for (int a = 0; a < count; ++a) {
      // c_k = g^{ij} Q_{ijk}, then drift = -1/2 c_k g^{km} d_m f
      double c1 = chart.gi11[a] * chart.q111[a] + 2.0 * chart.gi12[a] * chart.q112[a] +
                  chart.gi22[a] * chart.q122[a];
      double c2 = chart.gi11[a] * chart.q112[a] + 2.0 * chart.gi12[a] * chart.q122[a] +
                  chart.gi22[a] * chart.q222[a];
      double up1 = chart.gi11[a] * d.dt[a] + chart.gi12[a] * d.dp[a];
      double up2 = chart.gi12[a] * d.dt[a] + chart.gi22[a] * d.dp[a];
      out[a] = lap[a] - 0.5 * (c1 * up1 + c2 * up2);
    }
  } else {
    const int n = chart.n();
    for (int a = 0; a < count; ++a) {
      double c1 = chart.qm[a] / chart.gm[a] + (n - 1) * chart.qo[a] / chart.go[a];
      out[a] = lap[a] - 0.5 * c1 * d.dt[a] / chart.gm[a];
    }
  }
  return out;
}

// Sup norm of the residual of d_i log(w / sqrt(det g)) = -1/2 g^{kl} Q_{kli},
// the identity that lets the drift operator be assembled as a weighted
// Laplacian.  Differentiation uses the grid's high-order stencils.
inline double divergence_identity_residual(const WulffChart& chart) {
  const SphereGrid& g = chart.grid();
  const Anisotropy& f = chart.aniso();
  ScalarField lg(g.count());
  if (g.mode() == GridMode::Full2D) {
    for (int a = 0; a < g.count(); ++a) {
      double w = detail::mu_density_at(f, g.direction(a)) *
                 std::sin(g.theta(g.ring_of(a)));
      double det = chart.g11[a] * chart.g22[a] - sqr(chart.g12[a]);
      lg[a] = std::log(w / std::sqrt(det));
    }
    FieldDerivs d = g.derivatives(lg);
    double m = 0;
    for (int a = 0; a < g.count(); ++a) {
      double c1 = chart.gi11[a] * chart.q111[a] + 2.0 * chart.gi12[a] * chart.q112[a] +
                  chart.gi22[a] * chart.q122[a];
      double c2 = chart.gi11[a] * chart.q112[a] + 2.0 * chart.gi12[a] * chart.q122[a] +
                  chart.gi22[a] * chart.q222[a];
      m = std::max(m, std::abs(d.dt[a] + 0.5 * c1));
      m = std::max(m, std::abs(d.dp[a] + 0.5 * c2));
    }
    return m;
  }
  const int n = g.n();
  for (int a = 0; a < g.count(); ++a) {
    double w = detail::mu_density_at(f, g.direction(a)) *
               std::pow(std::sin(g.theta(g.ring_of(a))), n - 1);
    double det = chart.gm[a] * std::pow(chart.go[a], n - 1);
    lg[a] = std::log(w / std::sqrt(det));
  }
  FieldDerivs d = g.derivatives(lg);
  double m = 0;
  for (int a = 0; a < g.count(); ++a) {
    double c1 = chart.qm[a] / chart.gm[a] + (n - 1) * chart.qo[a] / chart.go[a];
    m = std::max(m, std::abs(d.dt[a] + 0.5 * c1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// First nonzero eigenvalue of -L.

namespace detail {

inline double lambda1_dense(const LinearizedOperator& op) {
  const int n = op.count;
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(op.mass[i]);
  Eigen::MatrixXd b = Eigen::MatrixXd(op.a);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) b(i, j) *= dinv[i] * dinv[j];
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
  // ascending; the top of the spectrum is the constant mode at zero
  return -es.eigenvalues()[n - 2];
}

// Block subspace iteration with Rayleigh-Ritz extraction. The lowest
// eigenvalue can be (nearly) degenerate -- on a round chart it is a triple
// split only by the grid -- so a single-vector iteration stalls inside the
// cluster; a four-column block resolves the whole cluster variationally.
inline double lambda1_iterative(const LinearizedOperator& op) {
  const int n = op.count;
  const int block = 4;
  Eigen::SparseMatrix<double> k = -op.a;  // positive semidefinite
  // small mass shift keeps the factorization definite; Ritz values below use
  // the unshifted matrix, so the shift only affects iteration speed
  Eigen::SparseMatrix<double> shifted = k;
  double mscale = op.mass.mean();
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += 1e-9 * mscale;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("sparse factorization failed in eigensolve");

  double mtot = op.mass.sum();
  auto project = [&](Eigen::MatrixXd& x) {  // deflate the constant mode
    for (int j = 0; j < x.cols(); ++j)
      x.col(j).array() -= op.mass.dot(x.col(j)) / mtot;
  };
  Rng rng(0x5eedbeefULL, 97);
  Eigen::MatrixXd x(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
  double theta = 0.0;
  for (int it = 0; it < 100; ++it) {
    if (it > 0) x = ldlt.solve(op.mass.asDiagonal() * x).eval();
    project(x);
    // mass-orthonormalize the block
    Eigen::MatrixXd s = x.transpose() * (op.mass.asDiagonal() * x);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (s + s.transpose()));
    if (llt.info() != Eigen::Success)
      throw NumericalError("block lost rank in eigensolve");
    x = llt.matrixL().solve(x.transpose()).transpose().eval();
    // Ritz values of the pencil (K, M) on the block
    Eigen::MatrixXd h = x.transpose() * (k.selfadjointView<Eigen::Lower>() * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("ritz solve failed");
    double theta_new = es.eigenvalues()[0];
    x = (x * es.eigenvectors()).eval();
    // 1e-9 sits well above the rounding floor of the quotients while staying
    // far below the spatial discretization error
    if (it > 2 && std::abs(theta_new - theta) <= 1e-9 * std::max(theta_new, 1e-30))
      return theta_new;
    theta = theta_new;
  }
  throw NumericalError("subspace iteration did not converge for lambda_1");
}

}  // namespace detail

// Grids up to this node count take the dense symmetric eigensolver; larger
// ones use deflated inverse iteration with a sparse factorization.
inline constexpr int kDenseEigLimit = 2500;

inline double lambda1(const LinearizedOperator& op) {
  if (op.count <= kDenseEigLimit) return detail::lambda1_dense(op);
  return detail::lambda1_iterative(op);
}

// ---------------------------------------------------------------------------
// Exponential decay fit of flow deviations.

struct DecayFit {
  double rate = 0.0;       // fitted decay rate (positive for decaying series)
  double r2 = 0.0;         // coefficient of determination of the log-linear fit
  double intercept = 0.0;  // fitted log-amplitude at t = 0
  int n_used = 0;          // number of records in the tail window
  bool quality_warning = false;  // set when r2 < 0.99
};

// Least-squares slope of log(deviation) vs t over the asymptotic tail, which
// starts once the deviation first drops below 10% of its initial value.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& series,
                          double dev_floor = 0.0) {
  if (series.size() < 2) throw DomainError("decay fit needs a deviation series");
  double dev0 = series.front().second;
  if (!(dev0 > 0.0)) throw DomainError("decay fit needs a positive initial deviation");
  std::vector<std::pair<double, double>> tail;
  bool in_tail = false;
  for (const auto& [t, dev] : series) {
    if (!in_tail && dev < 0.1 * dev0) in_tail = true;
    if (in_tail && dev > dev_floor && dev > 0.0) tail.emplace_back(t, std::log(dev));
  }
  if ((int)tail.size() < 20)
    throw DomainError("decay fit needs at least 20 records in the asymptotic tail, got " +
                      std::to_string(tail.size()));
  double n = (double)tail.size();
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  for (const auto& [t, y] : tail) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    syy += y * y;
  }
  double det = n * stt - st * st;
  if (!(det > 0.0)) throw DomainError("degenerate time axis in decay fit");
  double slope = (n * sty - st * sy) / det;
  double inter = (sy * stt - st * sty) / det;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (const auto& [t, y] : tail) ss_res += sqr(y - (inter + slope * t));
  DecayFit fit;
  fit.rate = -slope;
  fit.intercept = inter;
  fit.n_used = (int)tail.size();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  fit.quality_warning = fit.r2 < 0.99;
  return fit;
}

}  // namespace wulff

#endif  // WULFF_SPECTRAL_HPP
