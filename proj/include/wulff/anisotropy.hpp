#ifndef WULFF_ANISOTROPY_HPP
#define WULFF_ANISOTROPY_HPP

#include "core.hpp"
#include "sphere.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace wulff {

// Symmetric rank-3 tensor on R^d, d <= 6.  s[i](j,k) stores T_ijk.
struct Ten3 {
  int d = 0;
  std::array<MatA, 6> s;

  explicit Ten3(int dim = 0) : d(dim) {
    for (int i = 0; i < d; ++i) s[i] = MatA::Zero(d, d);
  }
  double operator()(int i, int j, int k) const { return s[i](j, k); }
  double& at(int i, int j, int k) { return s[i](j, k); }

  double apply(const VecA& u, const VecA& v, const VecA& w) const {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += u[i] * (v.transpose() * s[i] * w)(0);
    return acc;
  }
  // T[u, ., .] as a matrix
  MatA contract(const VecA& u) const {
    MatA m = MatA::Zero(d, d);
    for (int i = 0; i < d; ++i) m += u[i] * s[i];
    return m;
  }
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < d; ++i) m = std::max(m, s[i].cwiseAbs().maxCoeff());
    return m;
  }
};

enum class Family { Round, Ellipsoid, Harmonic };
enum class DerivativeMode { ClosedForm, FiniteDifference };

struct HarmonicTerm {
  int l = 2;
  int m = 0;
  double coeff = 1.0;
};

// Geometry of the unit Wulff surface at one point: z = grad F(x), the dual
// metric G = D^2 (F0)^2/2 and cubic tensor Q = D^3 (F0)^2/2 at z, and a
// G-orthonormal basis of the tangent space T_z (which equals the Euclidean
// orthogonal complement of x).
struct WulffPointFrame {
  VecA x;
  VecA z;
  MatA G;
  Ten3 Q;
  MatA basis;  // (n+1) x n, columns G-orthonormal, span = x-perp
};

// Minkowski norm F on R^{n+1}: positively 1-homogeneous, smooth away from 0,
// with uniformly convex unit ball of the dual norm (admission test in the
// constructor).  Values are always closed-form; derivatives are closed-form
// per family or 4th-order central differences of the homogeneous extension.
class Anisotropy {
 public:
  Anisotropy(Family family, int n, std::vector<double> semi_axes = {},
             double eps = 0.0, std::vector<HarmonicTerm> terms = {},
             DerivativeMode mode = DerivativeMode::ClosedForm, double h_fd = 1e-4)
      : family_(family), n_(n), d_(n + 1), axes_(std::move(semi_axes)), eps_(eps),
        terms_(std::move(terms)), mode_(mode), h_fd_(h_fd) {
    if (n_ < 2 || n_ > 5) throw ConfigError("dimension n must be in [2, 5]");
    if (family_ == Family::Ellipsoid) {
      if ((int)axes_.size() != d_) throw ConfigError("ellipsoid needs n+1 semi-axes");
      for (double a : axes_)
        if (!(a > 0.0)) throw ConfigError("ellipsoid semi-axes must be positive");
      M_ = MatA::Zero(d_, d_);
      for (int i = 0; i < d_; ++i) M_(i, i) = axes_[i] * axes_[i];
    }
    if (family_ == Family::Harmonic) {
      if (terms_.empty()) throw ConfigError("harmonic family needs at least one term");
      for (const HarmonicTerm& t : terms_) {
        if (t.l < 1 || t.l > 4) throw ConfigError("harmonic degree must be in [1, 4]");
        if (n_ == 2) {
          if (std::abs(t.m) > t.l) throw ConfigError("harmonic order |m| must be <= l");
          jets_.emplace_back(solid_harmonic_s2(t.l, t.m));
        } else {
          if (t.m != 0) throw ConfigError("for n >= 3 only zonal harmonics (m = 0) are supported");
          jets_.emplace_back(solid_zonal(t.l, d_));
        }
        degrees_.push_back(t.l);
        coeffs_.push_back(t.coeff);
      }
    }
    check_admission();
  }

  static Anisotropy round(int n) { return Anisotropy(Family::Round, n); }
  static Anisotropy ellipsoid(std::vector<double> axes,
                              DerivativeMode mode = DerivativeMode::ClosedForm) {
    int d = (int)axes.size();
    return Anisotropy(Family::Ellipsoid, d - 1, std::move(axes), 0.0, {}, mode);
  }
  static Anisotropy harmonic(int n, double eps, std::vector<HarmonicTerm> terms,
                             DerivativeMode mode = DerivativeMode::ClosedForm) {
    return Anisotropy(Family::Harmonic, n, {}, eps, std::move(terms), mode);
  }

  int n() const { return n_; }
  int dim() const { return d_; }
  Family family() const { return family_; }

  // --- homogeneous extension and its ambient derivatives -------------------

  double value(const VecA& x) const {
    double r = x.norm();
    if (!(r > 0.0)) throw DomainError("F evaluated at the origin");
    switch (family_) {
      case Family::Round:
        return r;
      case Family::Ellipsoid:
        return std::sqrt((double)(x.transpose() * M_ * x));
      case Family::Harmonic: {
        double v = r;
        for (std::size_t q = 0; q < jets_.size(); ++q)
          v += eps_ * coeffs_[q] * std::pow(r, 1.0 - degrees_[q]) * jets_[q].p.eval(x);
        return v;
      }
    }
    throw ConfigError("unknown family");
  }

  VecA grad(const VecA& x) const {
    if (mode_ == DerivativeMode::FiniteDifference) return grad_fd(x);
    double r = x.norm();
    switch (family_) {
      case Family::Round:
        return x / r;
      case Family::Ellipsoid: {
        VecA mx = M_ * x;
        return mx / std::sqrt(x.dot(mx));
      }
      case Family::Harmonic: {
        VecA g = x / r;
        for (std::size_t q = 0; q < jets_.size(); ++q) {
          double m = 1.0 - degrees_[q];
          double u = std::pow(r, m), p = jets_[q].p.eval(x);
          VecA du = m * std::pow(r, m - 2.0) * x;
          VecA dp(d_);
          for (int i = 0; i < d_; ++i) dp[i] = jets_[q].d1[i].eval(x);
          g += eps_ * coeffs_[q] * (du * p + u * dp);
        }
        return g;
      }
    }
    throw ConfigError("unknown family");
  }

  MatA hess(const VecA& x) const {
    if (mode_ == DerivativeMode::FiniteDifference) return hess_fd(x);
    double r = x.norm();
    switch (family_) {
      case Family::Round: {
        VecA xh = x / r;
        return (MatA::Identity(d_, d_) - xh * xh.transpose()) / r;
      }
      case Family::Ellipsoid: {
        VecA mx = M_ * x;
        double f = std::sqrt(x.dot(mx));
        return M_ / f - mx * mx.transpose() / (f * f * f);
      }
      case Family::Harmonic: {
        VecA xh = x / r;
        MatA h = (MatA::Identity(d_, d_) - xh * xh.transpose()) / r;
        for (std::size_t q = 0; q < jets_.size(); ++q) {
          double m = 1.0 - degrees_[q];
          double u = std::pow(r, m), p = jets_[q].p.eval(x);
          VecA du = m * std::pow(r, m - 2.0) * x;
          MatA duu = m * std::pow(r, m - 2.0) * MatA::Identity(d_, d_) +
                     m * (m - 2.0) * std::pow(r, m - 4.0) * x * x.transpose();
          VecA dp(d_);
          for (int i = 0; i < d_; ++i) dp[i] = jets_[q].d1[i].eval(x);
          MatA dpp(d_, d_);
          for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) dpp(i, j) = jets_[q].d2[i][j].eval(x);
          h += eps_ * coeffs_[q] *
               (duu * p + du * dp.transpose() + dp * du.transpose() + u * dpp);
        }
        return h;
      }
    }
    throw ConfigError("unknown family");
  }

  Ten3 third(const VecA& x) const {
    if (mode_ == DerivativeMode::FiniteDifference) return third_fd(x);
    double r = x.norm();
    Ten3 t(d_);
    auto add_radial_third = [&](double scale, double m) {
      // D^3 |x|^m, scaled
      double c1 = scale * m * (m - 2.0) * std::pow(r, m - 4.0);
      double c2 = scale * m * (m - 2.0) * (m - 4.0) * std::pow(r, m - 6.0);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
          for (int k = 0; k < d_; ++k) {
            double v = c2 * x[i] * x[j] * x[k];
            if (i == j) v += c1 * x[k];
            if (i == k) v += c1 * x[j];
            if (j == k) v += c1 * x[i];
            t.at(i, j, k) += v;
          }
    };
    switch (family_) {
      case Family::Round:
        add_radial_third(1.0, 1.0);
        return t;
      case Family::Ellipsoid: {
        VecA mx = M_ * x;
        double f = std::sqrt(x.dot(mx));
        double f3 = f * f * f, f5 = f3 * f * f;
        for (int i = 0; i < d_; ++i)
          for (int j = 0; j < d_; ++j)
            for (int k = 0; k < d_; ++k)
              t.at(i, j, k) = -(M_(i, j) * mx[k] + M_(i, k) * mx[j] + M_(j, k) * mx[i]) / f3 +
                              3.0 * mx[i] * mx[j] * mx[k] / f5;
        return t;
      }
      case Family::Harmonic: {
        add_radial_third(1.0, 1.0);
        for (std::size_t q = 0; q < jets_.size(); ++q) {
          double m = 1.0 - degrees_[q];
          double c = eps_ * coeffs_[q];
          double u = std::pow(r, m), p = jets_[q].p.eval(x);
          double rm2 = m * std::pow(r, m - 2.0);
          double rm4 = m * (m - 2.0) * std::pow(r, m - 4.0);
          VecA dp(d_);
          for (int i = 0; i < d_; ++i) dp[i] = jets_[q].d1[i].eval(x);
          MatA dpp(d_, d_);
          for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) dpp(i, j) = jets_[q].d2[i][j].eval(x);
          add_radial_third(c * p, m);
          for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
              for (int k = 0; k < d_; ++k) {
                double duu_ij = rm4 * x[i] * x[j] + (i == j ? rm2 : 0.0);
                double duu_ik = rm4 * x[i] * x[k] + (i == k ? rm2 : 0.0);
                double duu_jk = rm4 * x[j] * x[k] + (j == k ? rm2 : 0.0);
                double v = duu_ij * dp[k] + duu_ik * dp[j] + duu_jk * dp[i];
                v += rm2 * (x[i] * dpp(j, k) + x[j] * dpp(i, k) + x[k] * dpp(i, j));
                v += u * jets_[q].d3[i][j][k].eval(x);
                t.at(i, j, k) += c * v;
              }
        }
        return t;
      }
    }
    throw ConfigError("unknown family");
  }

  // --- spec surface: support values, dual norm, Wulff map ------------------

  double eval_support(const VecA& x) const {
    if (std::abs(x.norm() - 1.0) > 1e-12) throw DomainError("eval_support expects a unit vector");
    return value(x);
  }

  // Wulff map phi(x) = F(x) x + grad_S F(x) = grad F(x) by 1-homogeneity.
  VecA wulff_point(const VecA& x) const { return grad(x); }

  // F0(z) = sup_x <x,z>/F(x).  Closed form for Round/Ellipsoid; multistart
  // projected ascent + ambient Newton polish otherwise.
  double dual_norm(const VecA& z) const {
    VecA dir;
    return dual_norm_impl(z, &dir);
  }

  // grad F0(z); the Wulff-normal direction map.  Satisfies F(grad F0(z)) = 1.
  VecA dual_gradient(const VecA& z) const {
    VecA xt;
    double f0 = dual_norm_impl(z, &xt);
    return xt / f0;
  }

  // A_F(x) in an orthonormal tangent frame at x: equals the ambient Hessian
  // of the extension restricted to tangent directions.
  MatA a_matrix(const VecA& x, MatA* frame_out = nullptr) const {
    MatA u = tangent_basis(x);
    MatA a = u.transpose() * hess(x) * u;
    a = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<MatA> es(a);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > kAdmissionTol * hi))
      throw AdmissibilityError("A_F not uniformly positive definite at a queried direction");
    if (frame_out) *frame_out = u;
    return a;
  }

  // Euclidean-orthonormal basis of the tangent space x-perp (Householder).
  MatA tangent_basis(const VecA& x) const {
    VecA xh = x / x.norm();
    VecA v = xh;
    int piv = 0;
    xh.cwiseAbs().maxCoeff(&piv);
    v[piv] += (xh[piv] >= 0.0 ? 1.0 : -1.0);
    MatA h = MatA::Identity(d_, d_) - 2.0 * v * v.transpose() / v.squaredNorm();
    // column piv of h is +-xh; the others form an orthonormal basis of x-perp
    MatA u(d_, n_);
    int c = 0;
    for (int j = 0; j < d_; ++j)
      if (j != piv) u.col(c++) = h.col(j);
    return u;
  }

  // G, Q and the tangent frame at z = phi(x), via Legendre duality: with
  // g = F^2/2 and g* = (F0)^2/2 conjugate, the dual point of z is exactly
  // xt = x/F(x), so H = D^2 g(xt) = DF DF^T + F D^2 F (all at x), G = H^{-1},
  // and Q_abc = -(D^3 g)(xt)[G e_a, G e_b, G e_c] with
  // D^3 g(xt) = F * sym(DF (x) D^2 F) + F^2 D^3 F.
  WulffPointFrame frame_at(const VecA& x) const {
    WulffPointFrame fr;
    fr.x = x / x.norm();
    double f = value(fr.x);
    VecA df = grad(fr.x);
    MatA d2f = hess(fr.x);
    Ten3 d3f = third(fr.x);
    fr.z = df;
    MatA h = df * df.transpose() + f * d2f;
    h = 0.5 * (h + h.transpose());
    Eigen::LDLT<MatA> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("dual Hessian not positive definite");
    fr.G = ldlt.solve(MatA::Identity(d_, d_));
    fr.G = 0.5 * (fr.G + fr.G.transpose());

    Ten3 g3(d_);  // D^3 g at the dual point
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k)
          g3.at(i, j, k) = f * (d2f(i, j) * df[k] + d2f(i, k) * df[j] + d2f(j, k) * df[i]) +
                           f * f * d3f(i, j, k);
    fr.Q = Ten3(d_);
    // Q_abc = -g3_ijk G_ia G_jb G_kc
    std::vector<MatA> gg(d_);  // gg[i] = G^T g3.s[i] G
    for (int i = 0; i < d_; ++i) gg[i] = fr.G * g3.s[i] * fr.G;
    for (int a = 0; a < d_; ++a) {
      MatA acc = MatA::Zero(d_, d_);
      for (int i = 0; i < d_; ++i) acc += fr.G(i, a) * gg[i];
      fr.Q.s[a] = -acc;
    }

    // G-orthonormal basis of T_z Sigma_F = x-perp
    MatA u = tangent_basis(fr.x);
    MatA m = u.transpose() * fr.G * u;
    Eigen::LLT<MatA> llt(0.5 * (m + m.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("tangent Gram matrix not positive definite");
    fr.basis = llt.matrixL().solve(u.transpose()).transpose();
    return fr;
  }

  // Admission margins over the constructor sample: (min, max) eigenvalue of
  // A_F and the minimum of F.
  double admission_min_eig() const { return adm_min_; }
  double admission_max_eig() const { return adm_max_; }
  double min_support_sampled() const { return fmin_; }

  static constexpr double kAdmissionTol = 1e-6;

 private:
  void check_admission() {
    const int count = 10000;
    std::vector<VecA> xs = sphere_sample(n_, count);
    std::vector<double> lo(xs.size()), hi(xs.size()), fv(xs.size());
    parallel_for(xs.size(), [&](std::size_t i0, std::size_t i1) {
      for (std::size_t i = i0; i < i1; ++i) {
        MatA u = tangent_basis(xs[i]);
        MatA a = u.transpose() * hess(xs[i]) * u;
        Eigen::SelfAdjointEigenSolver<MatA> es(0.5 * (a + a.transpose()));
        lo[i] = es.eigenvalues().minCoeff();
        hi[i] = es.eigenvalues().maxCoeff();
        fv[i] = value(xs[i]);
      }
    });
    adm_min_ = *std::min_element(lo.begin(), lo.end());
    adm_max_ = *std::max_element(hi.begin(), hi.end());
    fmin_ = *std::min_element(fv.begin(), fv.end());
    if (!(fmin_ > 0.0)) throw AdmissibilityError("support function is not positive on S^n");
    if (!(adm_min_ > kAdmissionTol * adm_max_))
      throw AdmissibilityError("A_F fails the uniform convexity admission test");
  }

  double dual_norm_impl(const VecA& z, VecA* dual_point) const {
    double zn = z.norm();
    if (!(zn > 0.0)) throw DomainError("dual norm of the zero vector");
    if (family_ == Family::Round) {
      if (dual_point) *dual_point = z;  // xt = z for the round norm
      return zn;
    }
    if (family_ == Family::Ellipsoid) {
      double s = 0.0;
      for (int i = 0; i < d_; ++i) s += z[i] * z[i] / (axes_[i] * axes_[i]);
      double f0 = std::sqrt(s);
      if (dual_point) {
        // xt solves F(xt) DF(xt) = z, i.e. M xt = z for the quadratic norm
        VecA xt(d_);
        for (int i = 0; i < d_; ++i) xt[i] = z[i] / (axes_[i] * axes_[i]);
        *dual_point = xt;
      }
      return f0;
    }
    // multistart projected gradient ascent of q(x) = <x,z>/F(x) over S^n
    const int starts = 32;
    std::vector<VecA> seeds = sphere_sample(n_, starts);
    VecA best;
    double qbest = -1.0;
    for (const VecA& s : seeds) {
      VecA x = s;
      double q = x.dot(z) / value(x);
      for (int it = 0; it < 200; ++it) {
        double f = value(x);
        VecA df = grad(x);
        VecA gq = (z - (x.dot(z) / f) * df) / f;
        VecA pg = gq - gq.dot(x) * x;
        if (pg.norm() <= 1e-10 * zn) break;
        double step = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
          VecA xn = (x + step * pg).normalized();
          double qn = xn.dot(z) / value(xn);
          if (qn > q + 1e-4 * step * pg.squaredNorm()) {
            x = xn;
            q = qn;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      if (q > qbest) {
        qbest = q;
        best = x;
      }
    }
    if (!(qbest > 0.0)) throw NumericalError("dual norm maximization failed");
    // Newton polish in the ambient: solve F(x) DF(x) = z; Jacobian is the
    // dual Hessian H = DF DF^T + F D^2 F, positive definite under admission.
    VecA xt = (qbest / value(best)) * best;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      double f = value(xt);
      VecA df = grad(xt);
      VecA res = f * df - z;
      if (res.norm() <= 1e-12 * zn) {
        ok = true;
        break;
      }
      MatA h = df * df.transpose() + f * hess(xt);
      VecA dx = h.ldlt().solve(res);
      double damp = 1.0;
      while (damp > 1e-4 && (xt - damp * dx).norm() < 0.1 * xt.norm()) damp *= 0.5;
      xt -= damp * dx;
    }
    if (!ok) {
      double f = value(xt);
      if ((f * grad(xt) - z).norm() > 1e-8 * zn)
        throw NumericalError("dual norm Newton polish failed to converge");
    }
    if (dual_point) *dual_point = xt;
    return value(xt);
  }

  // --- finite-difference derivative mode ------------------------------------

  VecA grad_fd(const VecA& x) const {
    const double h = h_fd_;
    VecA g(d_);
    for (int i = 0; i < d_; ++i) {
      VecA e = VecA::Zero(d_);
      e[i] = 1.0;
      g[i] = (-value(x + 2 * h * e) + 8 * value(x + h * e) - 8 * value(x - h * e) +
              value(x - 2 * h * e)) /
             (12 * h);
    }
    return g;
  }

  MatA hess_fd(const VecA& x) const {
    const double h = h_fd_;
    static const int off[4] = {-2, -1, 1, 2};
    static const double cf[4] = {1.0, -8.0, 8.0, -1.0};
    MatA m(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            VecA p = x;
            p[i] += off[a] * h;
            p[j] += off[b] * h;
            acc += cf[a] * cf[b] * value(p);
          }
        m(i, j) = m(j, i) = acc / (144 * h * h);
      }
    return m;
  }

  Ten3 third_fd(const VecA& x) const {
    const double h = std::max(h_fd_, 5e-3);
    static const int off[4] = {-2, -1, 1, 2};
    static const double cf[4] = {1.0, -8.0, 8.0, -1.0};
    Ten3 t(d_);
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j)
        for (int k = j; k < d_; ++k) {
          double acc = 0.0;
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              for (int c = 0; c < 4; ++c) {
                VecA p = x;
                p[i] += off[a] * h;
                p[j] += off[b] * h;
                p[k] += off[c] * h;
                acc += cf[a] * cf[b] * cf[c] * value(p);
              }
          double v = acc / (1728 * h * h * h);
          t.at(i, j, k) = t.at(i, k, j) = t.at(j, i, k) = v;
          t.at(j, k, i) = t.at(k, i, j) = t.at(k, j, i) = v;
        }
    return t;
  }

  Family family_;
  int n_, d_;
  std::vector<double> axes_;
  MatA M_;  // diag(a_i^2) for the ellipsoid
  double eps_;
  std::vector<HarmonicTerm> terms_;
  std::vector<PolyJet> jets_;
  std::vector<int> degrees_;
  std::vector<double> coeffs_;
  DerivativeMode mode_;
  double h_fd_;
  double adm_min_ = 0.0, adm_max_ = 0.0, fmin_ = 0.0;
};

}  // namespace wulff

#endif
