#pragma once

// Command implementations behind the command-line front-end.  Each command
// loads a RunConfig, orchestrates the library, writes its artifacts into the
// output directory, and returns a process exit code:
//   0  success / converged
//   1  configuration or numerical failure
//   2  flow ran out of time budget
//   3  flow left the convex cone
// Every command writes summary.txt describing how it exited.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <wulff/functionals.hpp>
#include <wulff/io.hpp>
#include <wulff/spectral.hpp>

namespace wulff {

struct CliOptions {
  std::string config;
  std::string out = "out";
  bool quiet = false;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

namespace cli_detail {

inline RunConfig load_config(const CliOptions& opt) {
  KeyValues kv = KeyValues::parse_file(opt.config);
  RunConfig cfg = parse_run_config(kv);
  if (opt.has_seed) cfg.seed = opt.seed;
  return cfg;
}

inline void say(const CliOptions& opt, const std::string& line) {
  if (!opt.quiet) std::fputs((line + "\n").c_str(), stdout);
}

using Summary = std::vector<std::pair<std::string, std::string>>;

// writes summary.txt on every exit path and echoes the verdict
inline int finish(const CliOptions& opt, Summary sum, int code, const std::string& status,
                  const std::string& reason) {
  Summary head{{"status", status}, {"reason", reason}, {"exit_code", std::to_string(code)}};
  head.insert(head.end(), sum.begin(), sum.end());
  write_file(std::filesystem::path(opt.out) / "summary.txt", summary_text(head));
  if (code == 0)
    say(opt, status + ": " + reason);
  else
    std::fprintf(stderr, "%s: %s\n", status.c_str(), reason.c_str());
  return code;
}

inline void describe_config(Summary& sum, const CliOptions& opt, const RunConfig& cfg) {
  sum.emplace_back("config", opt.config);
  sum.emplace_back("family", cfg.family);
  sum.emplace_back("n", std::to_string(cfg.n));
  sum.emplace_back("k", std::to_string(cfg.flow.k));
  sum.emplace_back("parametrization",
                   cfg.parametrization == Parametrization::Support ? "support" : "radial");
  sum.emplace_back("grid", cfg.grid_mode + " " + std::to_string(cfg.n_theta) +
                               (cfg.grid_mode == "full2d"
                                    ? "x" + std::to_string(cfg.n_phi > 0 ? cfg.n_phi
                                                                         : 2 * cfg.n_theta)
                                    : ""));
  sum.emplace_back("seed", std::to_string(cfg.seed));
}

// initial support field of the configured body on a chart
inline ScalarField initial_support(const RunConfig& cfg, const Anisotropy& aniso,
                                   const WulffChart& chart) {
  switch (cfg.body_kind) {
    case BodyKind::Constant:
      return sample_support_from_h(chart, support_ball(cfg.body_radius));
    case BodyKind::Ellipsoid:
      return sample_support_from_h(chart, support_ellipsoid(cfg.body_axes));
    case BodyKind::Wulff:
      return ScalarField(chart.grid().count(), cfg.body_radius);
    case BodyKind::Random:
      return sample_support(
          chart,
          random_convex_body(aniso, chart.grid(), cfg.seed, cfg.body_amplitude).radial());
    default:
      return sample_support(chart, body_radial_fn(cfg, aniso));
  }
}

inline ScalarField initial_gamma(const RunConfig& cfg, const Anisotropy& aniso,
                                 const SphereGrid& grid) {
  if (cfg.body_kind == BodyKind::Random)
    return random_convex_graph(aniso, grid, cfg.seed, cfg.body_amplitude).gamma;
  return sample_gamma(grid, body_radial_fn(cfg, aniso));
}

inline std::string fmt(double x) { return iofmt::num(x); }

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// run: integrate the flow, write flow.csv / decay.csv / final_state.csv,
// optional meshes, and a summary with the fitted decay rate.

inline int cmd_run(const CliOptions& opt) {
  namespace fs = std::filesystem;
  using namespace cli_detail;
  fs::create_directories(opt.out);
  Summary sum;
  try {
    RunConfig cfg = load_config(opt);
    describe_config(sum, opt, cfg);
    Anisotropy aniso = make_anisotropy(cfg);
    SphereGrid grid = make_grid(cfg);
    WulffChart chart(aniso, grid);
    cfg.flow.wulff_vol = wulff_volume(chart);

    fs::path snapdir = fs::path(opt.out) / "snapshots";
    if (cfg.snapshot_stride > 0) fs::create_directories(snapdir);
    std::int64_t rec_index = 0;
    const bool support = cfg.parametrization == Parametrization::Support;
    cfg.flow.on_record = [&](const FlowRecord&, const ScalarField& f) {
      if (cfg.snapshot_stride > 0 && rec_index % cfg.snapshot_stride == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "%06lld.obj", (long long)rec_index);
        write_file(snapdir / name,
                   obj_text(grid, support ? support_positions(chart, f)
                                          : radial_positions(grid, f)));
      }
      ++rec_index;
    };

    FlowResult res;
    if (support) {
      ScalarField s = initial_support(cfg, aniso, chart);
      res = run_flow(chart, SupportState{s, 0.0}, cfg.flow);
    } else {
      ScalarField gam = initial_gamma(cfg, aniso, grid);
      res = run_flow(aniso, grid, RadialGraphState{gam, 0.0}, cfg.flow);
    }

    write_file(fs::path(opt.out) / "flow.csv", flow_csv_text(res.records, cfg.n));
    write_file(fs::path(opt.out) / "decay.csv", decay_csv_text(res.records));
    write_file(fs::path(opt.out) / "final_state.csv",
               final_state_csv_text(grid, res.final_field, support ? "s" : "gamma"));
    if (cfg.write_obj)
      write_file(fs::path(opt.out) / "final.obj",
                 obj_text(grid, support ? support_positions(chart, res.final_field)
                                        : radial_positions(grid, res.final_field)));

    sum.emplace_back("t_end", fmt(res.t_end));
    sum.emplace_back("steps", std::to_string(res.steps));
    sum.emplace_back("records", std::to_string(res.records.size()));
    if (!res.records.empty()) {
      sum.emplace_back("rbar", fmt(res.rbar));
      sum.emplace_back("shape_dev", fmt(res.shape_dev));
      sum.emplace_back("vol_initial", fmt(res.records.front().report.vol));
      sum.emplace_back("vol_final", fmt(res.records.back().report.vol));
      sum.emplace_back("i_k_initial", fmt(res.records.front().report.i_k));
      sum.emplace_back("i_k_final", fmt(res.records.back().report.i_k));
      sum.emplace_back("sup_speed_final", fmt(res.records.back().sup_speed));
    }
    try {
      std::vector<std::pair<double, double>> series;
      for (const FlowRecord& r : res.records) series.emplace_back(r.t, r.dev_l2);
      DecayFit fit = fit_decay(series);
      sum.emplace_back("fitted_rate", fmt(fit.rate));
      sum.emplace_back("fit_r2", fmt(fit.r2));
      sum.emplace_back("fit_records", std::to_string(fit.n_used));
      if (fit.quality_warning) sum.emplace_back("fit_warning", "r2 below 0.99");
    } catch (const DomainError&) {
      sum.emplace_back("fitted_rate", "unavailable (no asymptotic tail)");
    }

    switch (res.status) {
      case FlowStatus::Converged:
        return finish(opt, sum, 0, "converged", "flow speed below stop threshold");
      case FlowStatus::Timeout:
        return finish(opt, sum, 2, "timeout",
                      "time or step budget exhausted before convergence");
      case FlowStatus::ConvexityLost: {
        int a = res.bad_node;
        std::string where = "node " + std::to_string(a);
        if (a >= 0) {
          where += " (ring " + std::to_string(grid.ring_of(a)) + ", col " +
                   std::to_string(grid.col_of(a)) + ", theta " +
                   fmt(grid.theta(grid.ring_of(a))) + ")";
        }
        sum.emplace_back("bad_node", std::to_string(a));
        sum.emplace_back("bad_time", fmt(res.bad_time));
        return finish(opt, sum, 3, "convexity_lost",
                      "tau lost positive definiteness at " + where);
      }
    }
    return finish(opt, sum, 1, "numerical_error", "unreachable flow status");
  } catch (const ConfigError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const AdmissibilityError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const DomainError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  } catch (const NumericalError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  }
}

// ---------------------------------------------------------------------------
// check: batch invariant suite on the configured energy and body at the
// configured resolution and its refinement.

namespace cli_detail {

struct CheckLine {
  std::string name;
  std::string observed;
  std::string criterion;
  bool pass = false;
  bool skipped = false;
};

inline std::string check_report_text(const std::vector<CheckLine>& lines) {
  std::ostringstream out;
  out << "# wulff invariant check report v1\n";
  for (const CheckLine& c : lines) {
    out << (c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL")) << "  " << c.name
        << "  observed=" << c.observed << "  criterion=" << c.criterion << '\n';
  }
  return out.str();
}

}  // namespace cli_detail

inline int cmd_check(const CliOptions& opt) {
  namespace fs = std::filesystem;
  using namespace cli_detail;
  fs::create_directories(opt.out);
  Summary sum;
  std::vector<CheckLine> lines;
  auto emit = [&](CheckLine c) {
    say(opt, std::string(c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL")) + "  " + c.name +
                 "  observed=" + c.observed + "  criterion=" + c.criterion);
    lines.push_back(std::move(c));
  };

  try {
    RunConfig cfg = load_config(opt);
    describe_config(sum, opt, cfg);
    Anisotropy aniso = make_anisotropy(cfg);
    emit({"admission (A_F positive definite on samples)", fmt(aniso.admission_min_eig()),
          "> 0", aniso.admission_min_eig() > 0.0, false});

    const int nt_f = cfg.n_theta;
    const int nt_c = nt_f / 2 >= 16 ? nt_f / 2 : nt_f * 2;
    const int nt_lo = std::min(nt_c, nt_f), nt_hi = std::max(nt_c, nt_f);
    auto grid_at = [&](int nt) {
      return cfg.grid_mode == "axisym" ? SphereGrid::axisym(cfg.n, nt)
                                       : SphereGrid::full2d(nt, 2 * nt);
    };

    // geometry of the configured body at two resolutions
    double mink[2] = {0, 0}, ident[2] = {0, 0}, codaz[2] = {0, 0};
    double newton_worst = -1e300, maclaurin_worst = -1e300;
    bool codazzi_ok = cfg.grid_mode == "full2d";
    for (int pass = 0; pass < 2; ++pass) {
      SphereGrid grid = grid_at(pass == 0 ? nt_lo : nt_hi);
      WulffChart chart(aniso, grid);
      ScalarField gam = initial_gamma(cfg, aniso, grid);
      GraphGeometry geo = graph_geometry(aniso, grid, RadialGraphState{gam, 0.0});
      if (!geo.convex)
        throw NumericalError("configured body is not convex at N_theta = " +
                             std::to_string(grid.n_theta()));
      std::vector<double> mres = minkowski_residuals_radial(grid, geo);
      for (double r : mres) mink[pass] = std::max(mink[pass], std::abs(r));
      ident[pass] = divergence_identity_residual(chart);
      if (codazzi_ok) {
        ScalarField s = initial_support(cfg, aniso, chart);
        TauField tau = tau_matrix(chart, SupportState{s, 0.0});
        if (tau.convex) codaz[pass] = codazzi_residual(chart, tau);
        else codazzi_ok = false;
      }
      if (pass == 1) {
        // Newton and MacLaurin inequality chains for the principal curvatures
        const int n = grid.n();
        for (int a = 0; a < grid.count(); ++a) {
          const VecT& kap = geo.kappa[a];
          std::vector<double> e = elementary_all(kap);
          std::vector<double> p(n + 1);
          for (int k = 0; k <= n; ++k) p[k] = e[k] / binomial(n, k);
          for (int k = 1; k + 1 <= n; ++k)
            newton_worst = std::max(
                newton_worst, (p[k - 1] * p[k + 1] - p[k] * p[k]) / std::max(p[k] * p[k], 1e-300));
          for (int k = 1; k + 1 <= n; ++k) {
            double a1 = std::pow(p[k], 1.0 / k), a2 = std::pow(p[k + 1], 1.0 / (k + 1));
            maclaurin_worst = std::max(maclaurin_worst, (a2 - a1) / std::max(a1, 1e-300));
          }
        }
      }
    }

    {
      double order = std::log2(std::max(mink[0], 1e-300) / std::max(mink[1], 1e-300));
      bool ok = mink[1] < 1e-10 || (order >= 1.0 && mink[1] < 0.05);
      emit({"minkowski residuals vanish under refinement",
            fmt(mink[0]) + " -> " + fmt(mink[1]) + " (order " + fmt(order) + ")",
            "order >= 1 or below 1e-10", ok, false});
    }
    emit({"newton inequalities for principal curvatures", fmt(newton_worst), "<= 1e-10",
          newton_worst <= 1e-10, false});
    emit({"maclaurin chain for principal curvatures", fmt(maclaurin_worst), "<= 1e-10",
          maclaurin_worst <= 1e-10, false});
    {
      double order = std::log2(std::max(ident[0], 1e-300) / std::max(ident[1], 1e-300));
      bool ok = ident[1] < 1e-8 || (order >= 1.0 && ident[1] < 0.05);
      emit({"cubic-form divergence identity", fmt(ident[0]) + " -> " + fmt(ident[1]),
            "order >= 1 or below 1e-8", ok, false});
    }
    if (cfg.grid_mode == "full2d") {
      double order = std::log2(std::max(codaz[0], 1e-300) / std::max(codaz[1], 1e-300));
      bool ok = codazzi_ok && (codaz[1] < 1e-8 || (order >= 1.0 && codaz[1] < 0.05));
      emit({"codazzi-type residual of tau",
            codazzi_ok ? fmt(codaz[0]) + " -> " + fmt(codaz[1]) : "support sample not convex",
            "order >= 1 or below 1e-8", ok, false});
    } else {
      emit({"codazzi-type residual of tau", "-", "full2d only", true, true});
    }

    if (cfg.family == "round") {
      SphereGrid grid = grid_at(nt_hi);
      WulffChart chart(aniso, grid);
      ScalarField s = sample_support_from_h(chart, support_ball(1.0));
      TauField tau = tau_matrix(chart, SupportState{s, 0.0});
      FunctionalReport rep = report_support(chart, tau, s, cfg.flow.k, wulff_volume(chart));
      double istar = wulff_isoperimetric_value(grid.n(), cfg.flow.k, wulff_volume(chart));
      double err = std::abs(rep.i_k / istar - 1.0);
      emit({"round reduction: unit ball is the exact Wulff shape",
            "i_k rel err " + fmt(err) + ", umbilicity " + fmt(rep.umbilicity),
            "both <= 1e-9", err <= 1e-9 && rep.umbilicity <= 1e-9, false});
    } else {
      emit({"round reduction: unit ball is the exact Wulff shape", "-", "round family only",
            true, true});
    }

    write_file(fs::path(opt.out) / "check_report.txt", check_report_text(lines));
    int failed = 0;
    for (const CheckLine& c : lines)
      if (!c.skipped && !c.pass) ++failed;
    sum.emplace_back("checks", std::to_string(lines.size()));
    sum.emplace_back("failed", std::to_string(failed));
    if (failed)
      return finish(opt, sum, 1, "check_failed", std::to_string(failed) + " check(s) failed");
    return finish(opt, sum, 0, "ok", "all invariant checks passed");
  } catch (const ConfigError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const AdmissibilityError& e) {
    // an inadmissible energy is itself a failed admission check
    lines.push_back({"admission (A_F positive definite on samples)", e.what(), "> 0", false,
                     false});
    write_file(fs::path(opt.out) / "check_report.txt", check_report_text(lines));
    return finish(opt, sum, 1, "check_failed", std::string("admission failed: ") + e.what());
  } catch (const DomainError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  } catch (const NumericalError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  }
}

// ---------------------------------------------------------------------------
// af: sample seeded random convex bodies and tabulate the constrained
// isoperimetric deficit slack for every admissible exponent.

inline int cmd_af(const CliOptions& opt) {
  namespace fs = std::filesystem;
  using namespace cli_detail;
  fs::create_directories(opt.out);
  Summary sum;
  try {
    RunConfig cfg = load_config(opt);
    describe_config(sum, opt, cfg);
    if (cfg.af_bodies < 1) throw ConfigError("af.bodies must be >= 1");
    Anisotropy aniso = make_anisotropy(cfg);
    SphereGrid grid = make_grid(cfg);
    WulffChart chart(aniso, grid);
    double wv = wulff_volume(chart);
    const int n = grid.n();

    std::ostringstream csv;
    csv << "# wulff af csv v1\n";
    csv << "body,seed,slack_index,slack,scale\n";
    double worst = 1e300;
    for (int b = 0; b < cfg.af_bodies; ++b) {
      std::uint64_t seed = cfg.seed + (std::uint64_t)b;
      RadialGraphState st = random_convex_graph(aniso, grid, seed, cfg.af_amplitude);
      GraphGeometry geo = graph_geometry(aniso, grid, st);
      std::vector<double> v = mixed_volumes_radial(grid, geo);
      for (int kk = 0; kk <= n - 2; ++kk) {
        double slack = af_check(v, n, kk, wv);
        double scale = std::abs(v[n - kk]);
        worst = std::min(worst, slack / std::max(scale, 1e-300));
        csv << b << ',' << seed << ',' << kk << ',' << iofmt::num(slack) << ','
            << iofmt::num(scale) << '\n';
      }
    }
    write_file(fs::path(opt.out) / "af.csv", csv.str());
    sum.emplace_back("bodies", std::to_string(cfg.af_bodies));
    sum.emplace_back("worst_relative_slack", fmt(worst));
    if (worst < -1e-9)
      return finish(opt, sum, 1, "af_violated",
                    "negative deficit slack " + fmt(worst) + " beyond tolerance");
    return finish(opt, sum, 0, "ok", "deficit nonnegative for all bodies and exponents");
  } catch (const ConfigError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const AdmissibilityError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const DomainError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  } catch (const NumericalError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  }
}

// ---------------------------------------------------------------------------
// spectrum: assemble the linearized operator, report lambda_1 and the decay
// rate it predicts for a given mean radius.

inline int cmd_spectrum(const CliOptions& opt) {
  namespace fs = std::filesystem;
  using namespace cli_detail;
  fs::create_directories(opt.out);
  Summary sum;
  try {
    RunConfig cfg = load_config(opt);
    describe_config(sum, opt, cfg);
    if (!(cfg.spectrum_rbar > 0.0)) throw ConfigError("spectrum.rbar must be positive");
    Anisotropy aniso = make_anisotropy(cfg);
    SphereGrid grid = make_grid(cfg);
    WulffChart chart(aniso, grid);
    LinearizedOperator op = build_operator(chart);
    double lam = lambda1(op);
    double rate = lam / (grid.n() * cfg.spectrum_rbar);
    sum.emplace_back("nodes", std::to_string(op.count));
    sum.emplace_back("method", op.count <= kDenseEigLimit ? "dense" : "iterative");
    sum.emplace_back("lambda1", fmt(lam));
    sum.emplace_back("rbar", fmt(cfg.spectrum_rbar));
    sum.emplace_back("predicted_rate", fmt(rate));
    sum.emplace_back("identity_residual", fmt(divergence_identity_residual(chart)));
    say(opt, "lambda1: " + fmt(lam));
    say(opt, "predicted_rate: " + fmt(rate));
    return finish(opt, sum, 0, "ok", "spectral gap computed");
  } catch (const ConfigError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const AdmissibilityError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const DomainError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  } catch (const NumericalError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  }
}

// ---------------------------------------------------------------------------
// oracle: Monte-Carlo mixed volumes of the configured body against the
// surface-integral pipeline, with combined error bars.

inline int cmd_oracle(const CliOptions& opt) {
  namespace fs = std::filesystem;
  using namespace cli_detail;
  fs::create_directories(opt.out);
  Summary sum;
  try {
    RunConfig cfg = load_config(opt);
    describe_config(sum, opt, cfg);
    Anisotropy aniso = make_anisotropy(cfg);
    if (cfg.grid_mode != "full2d")
      throw ConfigError("the mixed-volume oracle runs on full2d grids");
    if (cfg.body_kind == BodyKind::Random)
      throw ConfigError("the oracle needs a closed-form body "
                        "(constant|ellipsoid|harmonic|zonal|wulff)");

    // surface pipeline at the configured resolution and its coarsening
    RadialFn rho = body_radial_fn(cfg, aniso);
    const int nt_f = cfg.n_theta, nt_c = nt_f / 2 >= 16 ? nt_f / 2 : nt_f * 2;
    std::vector<double> vs_f, vs_c;
    for (int pass = 0; pass < 2; ++pass) {
      SphereGrid grid = SphereGrid::full2d(pass ? nt_f : nt_c, 2 * (pass ? nt_f : nt_c));
      RadialGraphState st{sample_gamma(grid, rho), 0.0};
      GraphGeometry geo = graph_geometry(aniso, grid, st);
      if (!geo.convex) throw NumericalError("configured body is not convex on the grid");
      (pass ? vs_f : vs_c) = mixed_volumes_radial(grid, geo);
    }

    // Monte-Carlo side with the body's support function
    SupportFn h;
    switch (cfg.body_kind) {
      case BodyKind::Constant:
        h = support_ball(cfg.body_radius);
        break;
      case BodyKind::Ellipsoid:
        h = support_ellipsoid(cfg.body_axes);
        break;
      default:
        h = support_of_body(rho, cfg.n);
        break;
    }
    double scale = 0.0;
    {
      SphereGrid probe = SphereGrid::full2d(16, 32);
      for (int a = 0; a < probe.count(); ++a)
        scale = std::max(scale, rho(probe.direction(a)));
    }
    McMixedVolumes mc =
        mc_mixed_volume(aniso, h, scale, cfg.seed, cfg.oracle_samples, cfg.oracle_dirs);

    std::ostringstream csv;
    csv << "# wulff oracle csv v1\n";
    csv << "m,v_surface,surface_bar,v_mc,mc_se,diff,combined_bar\n";
    const int n = cfg.n;
    bool ok = true;
    for (int m = 0; m <= n + 1; ++m) {
      double sbar = std::abs(vs_f[m] - vs_c[m]);
      double diff = std::abs(mc.v[m] - vs_f[m]);
      double bar = std::max(0.02 * std::abs(vs_f[m]), 3.0 * mc.v_se[m] + 2.0 * sbar);
      if (diff > bar) ok = false;
      csv << m << ',' << iofmt::num(vs_f[m]) << ',' << iofmt::num(sbar) << ','
          << iofmt::num(mc.v[m]) << ',' << iofmt::num(mc.v_se[m]) << ','
          << iofmt::num(diff) << ',' << iofmt::num(bar) << '\n';
      say(opt, "m=" + std::to_string(m) + " surface=" + fmt(vs_f[m]) + " mc=" +
                   fmt(mc.v[m]) + " diff=" + fmt(diff) + " bar=" + fmt(bar));
    }
    write_file(fs::path(opt.out) / "oracle.csv", csv.str());
    sum.emplace_back("samples", std::to_string(cfg.oracle_samples));
    if (!ok)
      return finish(opt, sum, 1, "oracle_disagreement",
                    "Monte-Carlo and surface mixed volumes disagree beyond bars");
    return finish(opt, sum, 0, "ok", "mixed volumes agree within combined error bars");
  } catch (const ConfigError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const AdmissibilityError& e) {
    return finish(opt, sum, 1, "config_error", e.what());
  } catch (const DomainError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  } catch (const NumericalError& e) {
    return finish(opt, sum, 1, "numerical_error", e.what());
  }
}

}  // namespace wulff
