#ifndef WULFF_GRID_HPP
#define WULFF_GRID_HPP

#include "core.hpp"
#include "sphere.hpp"

#include <cmath>
#include <vector>

namespace wulff {

using ScalarField = std::vector<double>;

enum class GridMode { Full2D, Axisym };

// Scalar field with two ghost rings past each pole.  The grid is offset
// (theta_i = (i+1/2) h, no node sits on a pole), and ghosts are filled by the
// pole-crossing rule f(-theta, phi) = f(theta, phi + pi), which is exact for
// any single-valued function on the sphere; axisymmetric grids reduce to an
// even reflection.  Every interior node then has a full-width stencil.
struct Padded {
  int nt = 0, np = 0;
  std::vector<double> v;  // (nt + 4) rows of np values

  double at(int i, int j) const {
    if (j < 0)
      j += np;
    else if (j >= np)
      j -= np;
    return v[(std::size_t)(i + 2) * np + j];
  }
  double& raw(int i, int j) { return v[(std::size_t)(i + 2) * np + j]; }
};

// Bundle of the five stencil outputs used by the evolution equations.
struct FieldDerivs {
  std::vector<double> dt, dp, dtt, dtp, dpp;
};

class SphereGrid {
 public:
  static SphereGrid full2d(int n_theta, int n_phi) {
    if (n_theta < 16) throw ConfigError("Full2D grid needs N_theta >= 16");
    if (n_phi < 32 || n_phi % 2 != 0) throw ConfigError("Full2D grid needs even N_phi >= 32");
    return SphereGrid(GridMode::Full2D, 2, n_theta, n_phi);
  }
  static SphereGrid axisym(int n, int n_theta) {
    if (n_theta < 16) throw ConfigError("axisymmetric grid needs N_theta >= 16");
    if (n < 2 || n > 5) throw ConfigError("dimension n must be in [2, 5]");
    return SphereGrid(GridMode::Axisym, n, n_theta, 1);
  }

  GridMode mode() const { return mode_; }
  int n() const { return n_; }
  int dim() const { return n_ + 1; }
  int n_theta() const { return nt_; }
  int n_phi() const { return np_; }
  double h_theta() const { return ht_; }
  double h_phi() const { return hp_; }
  int count() const { return nt_ * np_; }
  int id(int i, int j) const { return i * np_ + j; }
  int ring_of(int node) const { return node / np_; }
  int col_of(int node) const { return node % np_; }
  double theta(int ring) const { return theta_[ring]; }
  double phi(int col) const { return hp_ * col; }
  const std::vector<double>& weights() const { return weights_; }

  // Unit direction of a node.  Full2D uses the z-axis pole convention of S^2;
  // axisymmetric grids measure theta from the symmetry axis e_1.
  VecA direction(int node) const {
    int i = ring_of(node), j = col_of(node);
    VecA x(dim());
    if (mode_ == GridMode::Full2D) {
      Eigen::Vector3d p = s2_point(theta_[i], phi(j));
      x << p.x(), p.y(), p.z();
    } else {
      x.setZero();
      x[0] = std::cos(theta_[i]);
      x[1] = std::sin(theta_[i]);
    }
    return x;
  }

  void check_field(const ScalarField& f) const {
    if ((int)f.size() != count()) throw ConfigError("field size does not match grid node count");
  }

  double integrate(const ScalarField& f) const {
    check_field(f);
    return chunked_sum(f.size(), [&](std::size_t i) { return weights_[i] * f[i]; });
  }

  // Ghost rows continue the field across the poles via the antipodal column:
  // scalars satisfy f(-theta, phi) = f(theta, phi + pi); tensor components
  // with a single theta index flip sign as d/dtheta reverses (odd = true).
  Padded pad(const ScalarField& f, bool odd = false) const {
    check_field(f);
    Padded p;
    p.nt = nt_;
    p.np = np_;
    p.v.resize((std::size_t)(nt_ + 4) * np_);
    for (int i = 0; i < nt_; ++i)
      for (int j = 0; j < np_; ++j) p.raw(i, j) = f[id(i, j)];
    int shift = np_ / 2;  // identity when np_ == 1
    double sign = odd ? -1.0 : 1.0;
    for (int gi : {-2, -1, nt_, nt_ + 1}) {
      int mi = gi < 0 ? -1 - gi : 2 * nt_ - 1 - gi;
      for (int j = 0; j < np_; ++j) p.raw(gi, j) = sign * f[id(mi, (j + shift) % np_)];
    }
    return p;
  }

  // 4th-order centered stencils.
  double d_theta(const Padded& p, int i, int j) const {
    return (-p.at(i + 2, j) + 8 * p.at(i + 1, j) - 8 * p.at(i - 1, j) + p.at(i - 2, j)) /
           (12 * ht_);
  }
  double d_theta2(const Padded& p, int i, int j) const {
    return (-p.at(i + 2, j) + 16 * p.at(i + 1, j) - 30 * p.at(i, j) + 16 * p.at(i - 1, j) -
            p.at(i - 2, j)) /
           (12 * ht_ * ht_);
  }
  double d_phi(const Padded& p, int i, int j) const {
    if (np_ == 1) return 0.0;
    return (-p.at(i, j + 2) + 8 * p.at(i, j + 1) - 8 * p.at(i, j - 1) + p.at(i, j - 2)) /
           (12 * hp_);
  }
  double d_phi2(const Padded& p, int i, int j) const {
    if (np_ == 1) return 0.0;
    return (-p.at(i, j + 2) + 16 * p.at(i, j + 1) - 30 * p.at(i, j) + 16 * p.at(i, j - 1) -
            p.at(i, j - 2)) /
           (12 * hp_ * hp_);
  }
  double d_thetaphi(const Padded& p, int i, int j) const {
    if (np_ == 1) return 0.0;
    static const int off[4] = {-2, -1, 1, 2};
    static const double cf[4] = {1.0, -8.0, 8.0, -1.0};
    double acc = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) acc += cf[a] * cf[b] * p.at(i + off[a], j + off[b]);
    return acc / (144 * ht_ * hp_);
  }

  FieldDerivs derivatives(const ScalarField& f) const {
    Padded p = pad(f);
    FieldDerivs d;
    d.dt.resize(count());
    d.dp.resize(count());
    d.dtt.resize(count());
    d.dtp.resize(count());
    d.dpp.resize(count());
    parallel_for(count(), [&](std::size_t a0, std::size_t a1) {
      for (std::size_t a = a0; a < a1; ++a) {
        int i = ring_of((int)a), j = col_of((int)a);
        d.dt[a] = d_theta(p, i, j);
        d.dp[a] = d_phi(p, i, j);
        d.dtt[a] = d_theta2(p, i, j);
        d.dtp[a] = d_thetaphi(p, i, j);
        d.dpp[a] = d_phi2(p, i, j);
      }
    });
    return d;
  }

  // Ambient tangential gradient of a scalar on the sphere (orthonormal-frame
  // assembly of the stencil derivatives).
  std::vector<VecA> surface_gradient(const ScalarField& f) const {
    Padded p = pad(f);
    std::vector<VecA> g(count());
    for (int i = 0; i < nt_; ++i)
      for (int j = 0; j < np_; ++j) {
        double ft = d_theta(p, i, j);
        VecA v(dim());
        if (mode_ == GridMode::Full2D) {
          double fp = d_phi(p, i, j);
          double st = std::sin(theta_[i]);
          Eigen::Vector3d amb =
              s2_dtheta(theta_[i], phi(j)) * ft + s2_dphi(theta_[i], phi(j)) * (fp / (st * st));
          v << amb.x(), amb.y(), amb.z();
        } else {
          v.setZero();
          v[0] = -std::sin(theta_[i]) * ft;
          v[1] = std::cos(theta_[i]) * ft;
        }
        g[id(i, j)] = v;
      }
    return g;
  }

  // Azimuthal spectral cap.  Near the poles a latitude-longitude grid carries
  // azimuthal modes far beyond what the meridional resolution supports; any
  // smooth field's ring spectrum decays like sin(theta)^m there, so projecting
  // ring i onto modes m <= m_max(theta_i) ~ 1.2 pi sin(theta)/h_theta only
  // removes content below the scheme's truncation error while letting explicit
  // steps scale with h_theta^2 instead of the polar h_phi sin(theta_0).
  void polar_filter(ScalarField& f) const {
    if (mode_ != GridMode::Full2D) return;
    check_field(f);
    parallel_for(filter_rings_.size(), [&](std::size_t r0, std::size_t r1) {
      std::vector<double> am(np_ / 2 + 1), bm(np_ / 2 + 1);
      for (std::size_t r = r0; r < r1; ++r) {
        int i = filter_rings_[r];
        int mmax = mmax_[i];
        double* row = f.data() + (std::size_t)i * np_;
        for (int m = 0; m <= mmax; ++m) {
          const double* c = trig_cos_.data() + (std::size_t)m * np_;
          const double* s = trig_sin_.data() + (std::size_t)m * np_;
          double a = 0.0, b = 0.0;
          for (int j = 0; j < np_; ++j) {
            a += row[j] * c[j];
            b += row[j] * s[j];
          }
          am[m] = a;
          bm[m] = b;
        }
        for (int j = 0; j < np_; ++j) {
          double acc = am[0] / np_;
          for (int m = 1; m <= mmax; ++m)
            acc += 2.0 / np_ *
                   (am[m] * trig_cos_[(std::size_t)m * np_ + j] +
                    bm[m] * trig_sin_[(std::size_t)m * np_ + j]);
          row[j] = acc;
        }
      }
    }, 1);
  }

  int filter_mmax(int ring) const { return mmax_[ring]; }

 private:
  SphereGrid(GridMode mode, int n, int nt, int np)
      : mode_(mode), n_(n), nt_(nt), np_(np) {
    ht_ = kPi / nt_;
    hp_ = 2.0 * kPi / np_;
    theta_.resize(nt_);
    for (int i = 0; i < nt_; ++i) theta_[i] = (i + 0.5) * ht_;
    weights_.resize(count());
    if (mode_ == GridMode::Full2D) {
      // exact band areas: the column sums telescope to 4 pi in floating point
      for (int i = 0; i < nt_; ++i) {
        double w = hp_ * (std::cos(i * ht_) - std::cos((i + 1) * ht_));
        for (int j = 0; j < np_; ++j) weights_[id(i, j)] = w;
      }
      build_filter_tables();
    } else {
      // band integrals of |S^{n-1}| sin^{n-1}(theta) by Gauss-Legendre
      std::vector<double> gn, gw;
      gauss_legendre(8, gn, gw);
      double orbit = sphere_area(n_ - 1);
      for (int i = 0; i < nt_; ++i) {
        double a = i * ht_, b = (i + 1) * ht_;
        double acc = 0.0;
        for (int q = 0; q < 8; ++q) {
          double t = 0.5 * (a + b) + 0.5 * (b - a) * gn[q];
          acc += 0.5 * (b - a) * gw[q] * std::pow(std::sin(t), n_ - 1);
        }
        weights_[i] = orbit * acc;
      }
    }
  }

  void build_filter_tables() {
    mmax_.resize(nt_);
    for (int i = 0; i < nt_; ++i) {
      int m = std::max(2, (int)std::ceil(1.2 * kPi * std::sin(theta_[i]) / ht_));
      if (m < np_ / 2) {
        mmax_[i] = m;
        filter_rings_.push_back(i);
      } else {
        mmax_[i] = -1;  // ring already resolved; filter is a no-op
      }
    }
    int mtop = 0;
    for (int i : filter_rings_) mtop = std::max(mtop, mmax_[i]);
    trig_cos_.resize((std::size_t)(mtop + 1) * np_);
    trig_sin_.resize((std::size_t)(mtop + 1) * np_);
    for (int m = 0; m <= mtop; ++m)
      for (int j = 0; j < np_; ++j) {
        trig_cos_[(std::size_t)m * np_ + j] = std::cos(2.0 * kPi * m * j / np_);
        trig_sin_[(std::size_t)m * np_ + j] = std::sin(2.0 * kPi * m * j / np_);
      }
  }

  GridMode mode_;
  int n_, nt_, np_;
  double ht_, hp_;
  std::vector<double> theta_;
  std::vector<double> weights_;
  std::vector<int> mmax_;
  std::vector<int> filter_rings_;
  std::vector<double> trig_cos_, trig_sin_;
};

}  // namespace wulff

#endif
