#ifndef WULFF_FLOW_HPP
#define WULFF_FLOW_HPP

// Time stepping for the locally constrained anisotropic curvature flow
//
//   dX/dt = (1 - E_k(kappa)^{1/k} sigma_F) nu_F,
//
// which contracts convex bodies to scaled Wulff shapes while preserving the
// mixed volume V_{n+1-k}.  Two scalar parametrizations are supported:
//
//  * radial graph  gamma = log rho over the unit sphere,
//      d(gamma)/dt = omega F(nu)/rho - E_k(kappa)^{1/k},
//    with kappa the anisotropic principal curvatures of the graph;
//  * support function s = h/F sampled on the Wulff chart,
//      ds/dt = 1 - s / Phi_k(tau),
//    with tau the anisotropic radii-of-curvature tensor and
//    Phi_k = (E_n(tau)/E_{n-k}(tau) * binom)^{1/k} the dual speed.
//
// Both right-hand sides vanish exactly on the stationary family r W_F + const.
// Integration is explicit Heun (RK2) with a per-step parabolic CFL bound
// derived from the frozen-coefficient symbol of the fourth-order stencils.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anisotropy.hpp"
#include "chart.hpp"
#include "core.hpp"
#include "curvature.hpp"
#include "functionals.hpp"
#include "grid.hpp"

namespace wulff {

enum class Parametrization { RadialGraph, Support };
enum class FlowStatus { Converged, Timeout, ConvexityLost };

struct FlowRecord {
  double t = 0.0;
  double sup_speed = 0.0;
  double rbar = 0.0;    // mu_F-weighted mean of the anisotropic support
  double dev_l2 = 0.0;  // || s - rbar ||_{L^2(mu_F)}
  double dev_sup = 0.0; // sup |s - rbar| / rbar
  FunctionalReport report;
};

struct FlowConfig {
  Parametrization parametrization = Parametrization::Support;
  int k = 2;                       // curvature exponent, 2 <= k <= n
  double t_max = 20.0;             // horizon in flow time
  double stop_speed = 1e-6;        // finish once sup |speed| drops below this
  std::int64_t max_steps = 4000000;
  double cfl = 0.8;                // safety factor in (0,1) on the stability bound
  std::int64_t record_stride = 50; // steps between diagnostic records
  double wulff_vol = -1.0;         // |W_F|; fills the deficit columns when > 0
  // optional observer invoked with each record and the state it describes
  std::function<void(const FlowRecord&, const ScalarField&)> on_record;
};

struct FlowResult {
  FlowStatus status = FlowStatus::Timeout;
  std::vector<FlowRecord> records;
  ScalarField final_field;  // gamma or s, per parametrization
  double t_end = 0.0;
  std::int64_t steps = 0;
  double rbar = 0.0;        // fitted Wulff radius of the final recorded state
  double shape_dev = 0.0;   // sup-norm deviation of the final recorded state
  int bad_node = -1;        // node at which convexity failed
  double bad_time = 0.0;
};

// Speed field together with the data the integrator needs from one evaluation.
struct RhsEval {
  ScalarField rhs;
  double sup_speed = 0.0;
  double lambda_max = 0.0;  // parabolic symbol bound; stable dt = 2 cfl / lambda_max
  bool convex = true;
  int bad_node = -1;
};

namespace detail {

// Largest modulus of the 4th-order second-derivative symbol
//   S(xi) = (30 - 32 cos xi + 2 cos 2xi) / 12
// over frequencies |m h| <= xi.  Increasing on [0, pi], max 16/3.
inline double fd2_symbol(double xi) {
  double x = std::min(std::abs(xi), kPi);
  return (30.0 - 32.0 * std::cos(x) + 2.0 * std::cos(2.0 * x)) / 12.0;
}

// Per-ring azimuthal symbol bound S_phi / h_phi^2.  The polar filter caps the
// surviving azimuthal frequencies at m_max(theta), so only those enter the
// stability bound; unfiltered rings run up to Nyquist.
inline std::vector<double> phi_symbol_by_ring(const SphereGrid& grid) {
  std::vector<double> sym;
  if (grid.mode() != GridMode::Full2D) return sym;
  double hp = grid.h_phi();
  int nt = grid.n_theta();
  sym.resize(nt);
  for (int i = 0; i < nt; ++i) {
    int mmax = grid.filter_mmax(i);
    double xi = (mmax < 0) ? kPi : std::min(kPi, mmax * hp);
    sym[i] = fd2_symbol(xi) / (hp * hp);
  }
  return sym;
}

}  // namespace detail

// Speed of the support-function formulation, 1 - s / Phi_k(tau), together
// with the stability bound.  The linearization of the rhs in s has principal
// part (s/Phi^2) Phi'^{ij} (d^2 s)_{ij} with Phi'^{ij} <= max_a Phi'_a g^{ij}.
inline RhsEval rhs_support(const WulffChart& chart, const SupportState& state,
                           int k, TauField* tau_out = nullptr) {
  const SphereGrid& grid = chart.grid();
  const int count = grid.count();
  RhsEval ev;
  TauField tau = tau_matrix(chart, state);
  if (!tau.convex) {
    ev.convex = false;
    ev.bad_node = tau.bad_node;
    if (tau_out) *tau_out = std::move(tau);
    return ev;
  }
  ev.rhs.resize(count);
  std::vector<double> lam(count);
  double st2 = detail::fd2_symbol(kPi) / sqr(grid.h_theta());
  std::vector<double> sp2 = detail::phi_symbol_by_ring(grid);
  parallel_for(count, [&](int a0, int a1) {
    for (int a = a0; a < a1; ++a) {
      double s = state.s[a];
      double phi = phi_dual(tau.eigs[a], k);
      ev.rhs[a] = 1.0 - s / phi;
      double dmax = phi_dual_gradient(tau.eigs[a], k).maxCoeff();
      double diff = std::abs(s) / (phi * phi) * dmax;
      if (grid.mode() == GridMode::Full2D) {
        int i = grid.ring_of(a);
        lam[a] = diff * (chart.gi11[a] * st2 + chart.gi22[a] * sp2[i] +
                         2.0 * std::abs(chart.gi12[a]) * std::sqrt(st2 * sp2[i]));
      } else {
        // axisymmetric states only vary in theta
        lam[a] = diff * st2 / chart.gm[a];
      }
    }
  });
  for (int a = 0; a < count; ++a) {
    ev.sup_speed = std::max(ev.sup_speed, std::abs(ev.rhs[a]));
    ev.lambda_max = std::max(ev.lambda_max, lam[a]);
  }
  if (tau_out) *tau_out = std::move(tau);
  return ev;
}

// Speed of the radial-graph formulation, omega F(nu)/rho - E_k(kappa)^{1/k}.
// Its linearization in gamma has principal part
//   Psi'[ A^{1/2} L^{-1} (d^2 gamma) L^{-T} A^{1/2} ] / (rho omega),
// bounded by max Psi'_a * lambda_max(A_F) / (rho omega) times the frame
// symbol (sqrt(S_theta) + sqrt(S_phi)/sin theta)^2, using Gram^{-1} <= Id.
inline RhsEval rhs_radial(const Anisotropy& aniso, const SphereGrid& grid,
                          const RadialGraphState& state, int k,
                          GraphGeometry* geo_out = nullptr) {
  const int count = grid.count();
  RhsEval ev;
  GraphGeometry geo = graph_geometry(aniso, grid, state);
  if (!geo.convex) {
    ev.convex = false;
    ev.bad_node = geo.bad_node;
    if (geo_out) *geo_out = std::move(geo);
    return ev;
  }
  ev.rhs.resize(count);
  std::vector<double> lam(count);
  double st2 = detail::fd2_symbol(kPi) / sqr(grid.h_theta());
  std::vector<double> sp2 = detail::phi_symbol_by_ring(grid);
  parallel_for(count, [&](int a0, int a1) {
    for (int a = a0; a < a1; ++a) {
      ev.rhs[a] = geo.omega[a] * geo.f_nu[a] / geo.rho[a] - psi_speed(geo.kappa[a], k);
      double dmax = psi_gradient(geo.kappa[a], k).maxCoeff();
      double diff = dmax * geo.a_max[a] / (geo.rho[a] * geo.omega[a]);
      if (grid.mode() == GridMode::Full2D) {
        int i = grid.ring_of(a);
        double sn = std::sin(grid.theta(i));
        lam[a] = diff * sqr(std::sqrt(st2) + std::sqrt(sp2[i]) / sn);
      } else {
        lam[a] = diff * st2;
      }
    }
  });
  for (int a = 0; a < count; ++a) {
    ev.sup_speed = std::max(ev.sup_speed, std::abs(ev.rhs[a]));
    ev.lambda_max = std::max(ev.lambda_max, lam[a]);
  }
  if (geo_out) *geo_out = std::move(geo);
  return ev;
}

namespace detail {

struct SupportProblem {
  const WulffChart& chart;
  int k;
  using Aux = TauField;

  const SphereGrid& grid() const { return chart.grid(); }
  RhsEval eval(const ScalarField& f, Aux* aux) const {
    return rhs_support(chart, SupportState{f, 0.0}, k, aux);
  }
  void filter(ScalarField& f) const { chart.grid().polar_filter(f); }
  FunctionalReport report(const Aux& aux, const ScalarField& f, double wv) const {
    return report_support(chart, aux, f, k, wv);
  }
  void fit(const Aux&, const ScalarField& f, double& rbar, double& dev_l2,
           double& dev_sup) const {
    double wsum = 0.0, ssum = 0.0;
    for (int a = 0; a < (int)f.size(); ++a) {
      wsum += chart.wf[a];
      ssum += chart.wf[a] * f[a];
    }
    rbar = ssum / wsum;
    double l2 = 0.0, sup = 0.0;
    for (int a = 0; a < (int)f.size(); ++a) {
      l2 += chart.wf[a] * sqr(f[a] - rbar);
      sup = std::max(sup, std::abs(f[a] - rbar));
    }
    dev_l2 = std::sqrt(l2);
    dev_sup = sup / rbar;
  }
};

struct RadialProblem {
  const Anisotropy& aniso;
  const SphereGrid& grid_;
  int k;
  using Aux = GraphGeometry;

  const SphereGrid& grid() const { return grid_; }
  RhsEval eval(const ScalarField& f, Aux* aux) const {
    return rhs_radial(aniso, grid_, RadialGraphState{f, 0.0}, k, aux);
  }
  void filter(ScalarField& f) const { grid_.polar_filter(f); }
  FunctionalReport report(const Aux& aux, const ScalarField&, double wv) const {
    return report_radial(grid_, aux, k, wv);
  }
  // mu_F-weighted statistics of the anisotropic support sigma_F of the graph
  void fit(const Aux& geo, const ScalarField&, double& rbar, double& dev_l2,
           double& dev_sup) const {
    double wsum = 0.0, ssum = 0.0;
    for (int a = 0; a < grid_.count(); ++a) {
      double w = grid_.weights()[a] * geo.f_nu[a] * geo.area_el[a];
      wsum += w;
      ssum += w * geo.sigma_f[a];
    }
    rbar = ssum / wsum;
    double l2 = 0.0, sup = 0.0;
    for (int a = 0; a < grid_.count(); ++a) {
      double w = grid_.weights()[a] * geo.f_nu[a] * geo.area_el[a];
      l2 += w * sqr(geo.sigma_f[a] - rbar);
      sup = std::max(sup, std::abs(geo.sigma_f[a] - rbar));
    }
    dev_l2 = std::sqrt(l2);
    dev_sup = sup / rbar;
  }
};

inline void validate_flow_config(const FlowConfig& cfg, int n) {
  if (cfg.k < 2 || cfg.k > n)
    throw ConfigError("flow exponent k must satisfy 2 <= k <= n, got k=" +
                      std::to_string(cfg.k) + " with n=" + std::to_string(n));
  if (!(cfg.cfl > 0.0 && cfg.cfl < 1.0))
    throw ConfigError("CFL safety factor must lie in (0,1)");
  if (!(cfg.t_max > 0.0)) throw ConfigError("flow horizon t_max must be positive");
  if (!(cfg.stop_speed > 0.0)) throw ConfigError("stop tolerance must be positive");
  if (cfg.record_stride < 1) throw ConfigError("record stride must be >= 1");
  if (cfg.max_steps < 1) throw ConfigError("max step count must be >= 1");
}

template <class Problem>
FlowResult run_loop(const Problem& prob, ScalarField field, const FlowConfig& cfg) {
  FlowResult res;
  double t = 0.0;
  std::int64_t step = 0;
  const double t_floor = 1e-12 * std::max(cfg.t_max, 1.0);
  typename Problem::Aux aux;
  ScalarField stage(field.size());
  while (true) {
    RhsEval ev = prob.eval(field, &aux);
    if (!ev.convex) {
      res.status = FlowStatus::ConvexityLost;
      res.bad_node = ev.bad_node;
      res.bad_time = t;
      break;
    }
    bool stop_conv = ev.sup_speed < cfg.stop_speed;
    bool stop_time = t >= cfg.t_max * (1.0 - 1e-14) || step >= cfg.max_steps;
    if (step % cfg.record_stride == 0 || stop_conv || stop_time) {
      FlowRecord rec;
      rec.t = t;
      rec.sup_speed = ev.sup_speed;
      prob.fit(aux, field, rec.rbar, rec.dev_l2, rec.dev_sup);
      rec.report = prob.report(aux, field, cfg.wulff_vol);
      res.records.push_back(std::move(rec));
      if (cfg.on_record) cfg.on_record(res.records.back(), field);
    }
    if (stop_conv) {
      res.status = FlowStatus::Converged;
      break;
    }
    if (stop_time) {
      res.status = FlowStatus::Timeout;
      break;
    }
    double dt = 2.0 * cfg.cfl / ev.lambda_max;
    if (t + dt > cfg.t_max) dt = cfg.t_max - t;
    if (dt < t_floor)
      throw NumericalError("flow step size underflow (stiff state) at t=" +
                           std::to_string(t));
    for (int a = 0; a < (int)field.size(); ++a) stage[a] = field[a] + dt * ev.rhs[a];
    prob.filter(stage);
    RhsEval ev2 = prob.eval(stage, nullptr);
    if (!ev2.convex) {
      res.status = FlowStatus::ConvexityLost;
      res.bad_node = ev2.bad_node;
      res.bad_time = t + dt;
      break;
    }
    for (int a = 0; a < (int)field.size(); ++a)
      field[a] += 0.5 * dt * (ev.rhs[a] + ev2.rhs[a]);
    prob.filter(field);
    t += dt;
    ++step;
  }
  res.final_field = std::move(field);
  res.t_end = t;
  res.steps = step;
  if (!res.records.empty()) {
    res.rbar = res.records.back().rbar;
    res.shape_dev = res.records.back().dev_sup;
  }
  return res;
}

}  // namespace detail

inline FlowResult run_flow(const WulffChart& chart, const SupportState& init,
                           const FlowConfig& cfg) {
  detail::validate_flow_config(cfg, chart.n());
  if ((int)init.s.size() != chart.grid().count())
    throw ConfigError("initial support field size does not match the grid");
  return detail::run_loop(detail::SupportProblem{chart, cfg.k}, init.s, cfg);
}

inline FlowResult run_flow(const Anisotropy& aniso, const SphereGrid& grid,
                           const RadialGraphState& init, const FlowConfig& cfg) {
  detail::validate_flow_config(cfg, grid.dim());
  if ((int)init.gamma.size() != grid.count())
    throw ConfigError("initial radial field size does not match the grid");
  return detail::run_loop(detail::RadialProblem{aniso, grid, cfg.k}, init.gamma, cfg);
}

// Single Heun step, mainly for step-size and order studies.  A negative dt
// requests the CFL-admissible step.
struct StepResult {
  ScalarField field;
  double dt = 0.0;
  double sup_speed = 0.0;
  bool convex = true;
  int bad_node = -1;
};

namespace detail {

template <class Problem>
StepResult step_once(const Problem& prob, const ScalarField& f0, double cfl, double dt) {
  StepResult out;
  RhsEval ev = prob.eval(f0, nullptr);
  if (!ev.convex) {
    out.convex = false;
    out.bad_node = ev.bad_node;
    return out;
  }
  if (dt <= 0.0) dt = 2.0 * cfl / ev.lambda_max;
  out.dt = dt;
  out.sup_speed = ev.sup_speed;
  ScalarField stage(f0.size());
  for (int a = 0; a < (int)f0.size(); ++a) stage[a] = f0[a] + dt * ev.rhs[a];
  prob.filter(stage);
  RhsEval ev2 = prob.eval(stage, nullptr);
  if (!ev2.convex) {
    out.convex = false;
    out.bad_node = ev2.bad_node;
    return out;
  }
  out.field.resize(f0.size());
  for (int a = 0; a < (int)f0.size(); ++a)
    out.field[a] = f0[a] + 0.5 * dt * (ev.rhs[a] + ev2.rhs[a]);
  prob.filter(out.field);
  return out;
}

}  // namespace detail

inline StepResult flow_step(const WulffChart& chart, const SupportState& st, int k,
                            double cfl = 0.8, double dt = -1.0) {
  return detail::step_once(detail::SupportProblem{chart, k}, st.s, cfl, dt);
}

inline StepResult flow_step(const Anisotropy& aniso, const SphereGrid& grid,
                            const RadialGraphState& st, int k, double cfl = 0.8,
                            double dt = -1.0) {
  return detail::step_once(detail::RadialProblem{aniso, grid, k}, st.gamma, cfl, dt);
}

// ---------------------------------------------------------------------------
// Monotonicity audit.  Along the flow the enclosed volume grows, the mixed
// volume V_{n+2-k} and the isoperimetric ratio I_k shrink, and the extremal
// Wulff radii s_min / s_max are squeezed together (comparison principle).
// Discretization and time-stepping allow a small relative slack per pair.

struct MonotonicityCheck {
  int violations = 0;
  double worst = 0.0;    // largest relative violation seen
  std::string detail;    // description of the first violation
};

inline MonotonicityCheck check_monotonicity(const std::vector<FlowRecord>& recs,
                                            int n, int k, double slack = 1e-8) {
  MonotonicityCheck out;
  auto flag = [&](double drop, double scale, const char* what, double t0, double t1) {
    if (drop < -slack * scale) {
      ++out.violations;
      double rel = -drop / std::max(scale, 1e-300);
      if (rel > out.worst) out.worst = rel;
      if (out.detail.empty())
        out.detail = std::string(what) + " moved the wrong way between t=" +
                     std::to_string(t0) + " and t=" + std::to_string(t1);
    }
  };
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const FlowRecord& a = recs[i - 1];
    const FlowRecord& b = recs[i];
    int m = n + 2 - k;
    auto sc = [](double x, double y) { return std::max(std::abs(x), std::abs(y)); };
    flag(b.report.vol - a.report.vol, sc(a.report.vol, b.report.vol), "volume", a.t, b.t);
    flag(a.report.v[m] - b.report.v[m], sc(a.report.v[m], b.report.v[m]),
         "constrained mixed volume", a.t, b.t);
    flag(a.report.i_k - b.report.i_k, sc(a.report.i_k, b.report.i_k),
         "isoperimetric ratio", a.t, b.t);
    flag(a.report.s_max - b.report.s_max, sc(a.report.s_max, b.report.s_max),
         "outer Wulff radius", a.t, b.t);
    flag(b.report.s_min - a.report.s_min, sc(a.report.s_min, b.report.s_min),
         "inner Wulff radius", a.t, b.t);
  }
  return out;
}

}  // namespace wulff

#endif  // WULFF_FLOW_HPP
