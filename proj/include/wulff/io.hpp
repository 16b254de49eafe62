#pragma once

// Config-file parsing and artifact writers for the command-line front-end:
// flat key=value configs, versioned CSV emitters, OBJ meshes, and the
// key: value summary report.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <wulff/anisotropy.hpp>
#include <wulff/bodies.hpp>
#include <wulff/flow.hpp>

namespace wulff {

// ---------------------------------------------------------------------------
// Flat key=value configuration text.
//
// One `key = value` pair per line; `#` starts a comment; blank lines are
// ignored.  Keys are dotted to form sections (grid.n_theta, flow.k, ...).
// Every key must be consumed by the parser, so typos fail loudly.

class KeyValues {
 public:
  static KeyValues parse_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          " is not a key = value pair: '" + t + "'");
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
      if (!kv.values_.emplace(key, val).second)
        throw ConfigError("duplicate config key '" + key + "'");
    }
    return kv;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return (int)parse_ll(key, it->second);
  }

  std::int64_t get_i64(const std::string& key, std::int64_t fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_ll(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      std::uint64_t v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an unsigned integer: '" +
                        it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: '" + it->second + "'");
  }

  // comma-separated doubles, e.g. "2, 1, 1"
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& piece : split(it->second, ','))
      out.push_back(parse_double(key, trim(piece)));
    return out;
  }

  // semicolon-separated triples "l,m,coeff; l,m,coeff"
  std::vector<HarmonicTerm> get_terms(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    std::vector<HarmonicTerm> out;
    if (it == values_.end()) return out;
    for (const std::string& piece : split(it->second, ';')) {
      std::vector<std::string> f = split(piece, ',');
      if (f.size() != 3)
        throw ConfigError("config key '" + key + "': each term needs l,m,coeff");
      out.push_back(HarmonicTerm{(int)parse_ll(key, trim(f[0])),
                                 (int)parse_ll(key, trim(f[1])),
                                 parse_double(key, trim(f[2]))});
    }
    return out;
  }

  // call after parsing a config: rejects keys nothing consumed
  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not a number: '" + v + "'");
    }
  }

  static long long parse_ll(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer: '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Run configuration.

enum class BodyKind { Constant, Ellipsoid, Harmonic, Zonal, Random, Wulff };

struct RunConfig {
  // anisotropy.*
  std::string family = "round";  // round | ellipsoid | harmonic
  int n = 2;
  std::vector<double> axes;          // ellipsoid semi-axes (n+1 entries)
  double eps = 0.0;                  // harmonic family amplitude
  std::vector<HarmonicTerm> terms;   // harmonic family terms

  // grid.*
  std::string grid_mode = "full2d";  // full2d | axisym
  int n_theta = 32;
  int n_phi = 0;  // 0 -> 2 * n_theta

  // body.*
  BodyKind body_kind = BodyKind::Constant;
  double body_radius = 1.0;          // constant / wulff scale / harmonic base
  std::vector<double> body_axes;     // ellipsoid body semi-axes
  double body_eps = 0.2;             // harmonic / zonal perturbation size
  int body_l = 2, body_m = 0;        // harmonic indices
  double body_amplitude = 0.3;       // random body amplitude

  // flow.*
  Parametrization parametrization = Parametrization::Support;
  FlowConfig flow;

  // spectrum.* / af.* / oracle.*
  double spectrum_rbar = 1.0;
  int af_bodies = 20;
  double af_amplitude = 0.3;
  std::int64_t oracle_samples = 2000000;
  int oracle_dirs = 2000;

  // output.*
  bool write_obj = false;
  int snapshot_stride = 0;  // write snapshots/NNNN.obj every Nth record

  std::uint64_t seed = 1;
};

inline RunConfig parse_run_config(const KeyValues& kv) {
  RunConfig c;
  c.family = kv.get_string("anisotropy.family", c.family);
  c.n = kv.get_int("anisotropy.n", c.n);
  c.axes = kv.get_doubles("anisotropy.axes", {});
  c.eps = kv.get_double("anisotropy.eps", c.eps);
  c.terms = kv.get_terms("anisotropy.terms");

  c.grid_mode = kv.get_string("grid.mode", c.grid_mode);
  c.n_theta = kv.get_int("grid.n_theta", c.n_theta);
  c.n_phi = kv.get_int("grid.n_phi", c.n_phi);

  std::string bk = kv.get_string("body.kind", "constant");
  if (bk == "constant")
    c.body_kind = BodyKind::Constant;
  else if (bk == "ellipsoid")
    c.body_kind = BodyKind::Ellipsoid;
  else if (bk == "harmonic")
    c.body_kind = BodyKind::Harmonic;
  else if (bk == "zonal")
    c.body_kind = BodyKind::Zonal;
  else if (bk == "random")
    c.body_kind = BodyKind::Random;
  else if (bk == "wulff")
    c.body_kind = BodyKind::Wulff;
  else
    throw ConfigError("body.kind must be constant|ellipsoid|harmonic|zonal|random|wulff");
  c.body_radius = kv.get_double("body.radius", c.body_radius);
  c.body_axes = kv.get_doubles("body.axes", {});
  c.body_eps = kv.get_double("body.eps", c.body_eps);
  c.body_l = kv.get_int("body.l", c.body_l);
  c.body_m = kv.get_int("body.m", c.body_m);
  c.body_amplitude = kv.get_double("body.amplitude", c.body_amplitude);

  std::string pm = kv.get_string("flow.parametrization", "support");
  if (pm == "support")
    c.parametrization = Parametrization::Support;
  else if (pm == "radial")
    c.parametrization = Parametrization::RadialGraph;
  else
    throw ConfigError("flow.parametrization must be support|radial");
  c.flow.parametrization = c.parametrization;
  c.flow.k = kv.get_int("flow.k", c.flow.k);
  c.flow.t_max = kv.get_double("flow.t_max", c.flow.t_max);
  c.flow.stop_speed = kv.get_double("flow.stop_speed", c.flow.stop_speed);
  c.flow.max_steps = kv.get_i64("flow.max_steps", c.flow.max_steps);
  c.flow.cfl = kv.get_double("flow.cfl", c.flow.cfl);
  c.flow.record_stride = kv.get_i64("flow.record_stride", c.flow.record_stride);

  c.spectrum_rbar = kv.get_double("spectrum.rbar", c.spectrum_rbar);
  c.af_bodies = kv.get_int("af.bodies", c.af_bodies);
  c.af_amplitude = kv.get_double("af.amplitude", c.af_amplitude);
  c.oracle_samples = kv.get_i64("oracle.samples", c.oracle_samples);
  c.oracle_dirs = kv.get_int("oracle.dirs", c.oracle_dirs);

  c.write_obj = kv.get_bool("output.obj", c.write_obj);
  c.snapshot_stride = kv.get_int("output.snapshot_stride", c.snapshot_stride);
  c.seed = kv.get_u64("seed", c.seed);
  kv.reject_unknown();

  // ---- cross-field validation before any compute --------------------------
  if (c.family != "round" && c.family != "ellipsoid" && c.family != "harmonic")
    throw ConfigError("anisotropy.family must be round|ellipsoid|harmonic");
  if (c.n < 2 || c.n > 5) throw ConfigError("anisotropy.n must be in [2, 5]");
  if (c.flow.k < 2 || c.flow.k > c.n)
    throw ConfigError("flow.k must satisfy 2 <= k <= n");
  if (c.grid_mode == "full2d") {
    if (c.n != 2) throw ConfigError("full2d grids require n = 2");
  } else if (c.grid_mode == "axisym") {
    // the reduction assumes symmetry about e_1 for both energy and body
    if (c.family == "harmonic")
      throw ConfigError("axisymmetric runs support round and axisymmetric "
                        "ellipsoid energies only");
    if (c.family == "ellipsoid") {
      if ((int)c.axes.size() != c.n + 1)
        throw ConfigError("anisotropy.axes needs n+1 entries");
      for (std::size_t i = 2; i < c.axes.size(); ++i)
        if (c.axes[i] != c.axes[1])
          throw ConfigError("axisymmetric ellipsoid energies need equal axes "
                            "after the first");
    }
    if (c.body_kind == BodyKind::Harmonic || c.body_kind == BodyKind::Random)
      throw ConfigError("axisymmetric runs need an axisymmetric body "
                        "(constant|zonal|wulff|ellipsoid)");
    if (c.body_kind == BodyKind::Ellipsoid) {
      if ((int)c.body_axes.size() != c.n + 1)
        throw ConfigError("body.axes needs n+1 entries");
      for (std::size_t i = 2; i < c.body_axes.size(); ++i)
        if (c.body_axes[i] != c.body_axes[1])
          throw ConfigError("axisymmetric bodies need equal axes after the first");
    }
  } else {
    throw ConfigError("grid.mode must be full2d|axisym");
  }
  if (c.family == "ellipsoid" && (int)c.axes.size() != c.n + 1)
    throw ConfigError("anisotropy.axes needs n+1 entries");
  if (c.family == "harmonic" && c.terms.empty())
    throw ConfigError("harmonic energies need anisotropy.terms");
  if (c.body_kind == BodyKind::Ellipsoid && (int)c.body_axes.size() != c.n + 1)
    throw ConfigError("body.axes needs n+1 entries");
  if (c.snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be >= 0");
  return c;
}

inline Anisotropy make_anisotropy(const RunConfig& c) {
  if (c.family == "round") return Anisotropy::round(c.n);
  if (c.family == "ellipsoid") return Anisotropy::ellipsoid(c.axes);
  return Anisotropy::harmonic(c.n, c.eps, c.terms);
}

inline SphereGrid make_grid(const RunConfig& c) {
  if (c.grid_mode == "axisym") return SphereGrid::axisym(c.n, c.n_theta);
  return SphereGrid::full2d(c.n_theta, c.n_phi > 0 ? c.n_phi : 2 * c.n_theta);
}

// radial description of the configured initial body (all kinds but Random,
// which is synthesized directly on the grid from its seed)
inline RadialFn body_radial_fn(const RunConfig& c, const Anisotropy& aniso) {
  switch (c.body_kind) {
    case BodyKind::Constant:
      return radial_constant(c.body_radius);
    case BodyKind::Ellipsoid:
      return radial_ellipsoid(c.body_axes);
    case BodyKind::Harmonic:
      return radial_harmonic(c.body_radius, c.body_eps, c.body_l, c.body_m);
    case BodyKind::Zonal:
      return radial_zonal(c.body_radius, c.body_eps, c.body_l);
    case BodyKind::Wulff:
      return radial_wulff(aniso, c.body_radius);
    case BodyKind::Random:
      break;
  }
  throw ConfigError("random bodies have no closed-form radial function");
}

// ---------------------------------------------------------------------------
// Deterministic text formatting: %.17g round-trips doubles bit-exactly and
// never consults the locale, so identical runs give identical bytes.

namespace iofmt {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string num(std::int64_t x) { return std::to_string(x); }

}  // namespace iofmt

// ---------------------------------------------------------------------------
// CSV emitters (pure text builders; single-writer file output below).

inline std::string flow_csv_text(const std::vector<FlowRecord>& recs, int n) {
  std::ostringstream out;
  out << "# wulff flow csv v1\n";
  out << "t,vol";
  for (int m = 0; m <= n + 1; ++m) out << ",v" << m;
  out << ",i_k,s_min,s_max,kappa_min,kappa_max";
  for (int m = 0; m < n; ++m) out << ",mink_res_" << m;
  out << ",umbilicity,sup_speed\n";
  for (const FlowRecord& r : recs) {
    const FunctionalReport& p = r.report;
    out << iofmt::num(r.t) << ',' << iofmt::num(p.vol);
    for (int m = 0; m <= n + 1; ++m) out << ',' << iofmt::num(p.v[m]);
    out << ',' << iofmt::num(p.i_k) << ',' << iofmt::num(p.s_min) << ','
        << iofmt::num(p.s_max) << ',' << iofmt::num(p.kappa_min) << ','
        << iofmt::num(p.kappa_max);
    for (int m = 0; m < n; ++m) out << ',' << iofmt::num(p.mink_res[m]);
    out << ',' << iofmt::num(p.umbilicity) << ',' << iofmt::num(r.sup_speed) << '\n';
  }
  return out.str();
}

inline std::string decay_csv_text(const std::vector<FlowRecord>& recs) {
  std::ostringstream out;
  out << "# wulff decay csv v1\n";
  out << "t,deviation\n";
  for (const FlowRecord& r : recs)
    out << iofmt::num(r.t) << ',' << iofmt::num(r.dev_l2) << '\n';
  return out.str();
}

inline std::string final_state_csv_text(const SphereGrid& grid, const ScalarField& field,
                                        const std::string& field_name) {
  std::ostringstream out;
  out << "# wulff state csv v1\n";
  out << "node,ring,col,theta,phi," << field_name << '\n';
  for (int a = 0; a < grid.count(); ++a) {
    int i = grid.ring_of(a), j = grid.col_of(a);
    out << a << ',' << i << ',' << j << ',' << iofmt::num(grid.theta(i)) << ','
        << iofmt::num(grid.mode() == GridMode::Full2D ? grid.phi(j) : 0.0) << ','
        << iofmt::num(field[a]) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Mesh export.  Full 2d grids become a closed triangulated surface in
// lat-long vertex order with two polar fan centers; axisymmetric grids
// export the meridian cross-section as an OBJ polyline.

inline std::string obj_text(const SphereGrid& grid, const std::vector<VecA>& pos) {
  std::ostringstream out;
  out << "# wulff mesh obj v1\n";
  if (grid.mode() == GridMode::Full2D) {
    const int nt = grid.n_theta(), np = grid.n_phi();
    for (int a = 0; a < grid.count(); ++a)
      out << "v " << iofmt::num(pos[a][0]) << ' ' << iofmt::num(pos[a][1]) << ' '
          << iofmt::num(pos[a][2]) << '\n';
    VecA top = VecA::Zero(3), bot = VecA::Zero(3);
    for (int j = 0; j < np; ++j) {
      top += pos[grid.id(0, j)];
      bot += pos[grid.id(nt - 1, j)];
    }
    top /= np;
    bot /= np;
    out << "v " << iofmt::num(top[0]) << ' ' << iofmt::num(top[1]) << ' '
        << iofmt::num(top[2]) << '\n';
    out << "v " << iofmt::num(bot[0]) << ' ' << iofmt::num(bot[1]) << ' '
        << iofmt::num(bot[2]) << '\n';
    auto vid = [&](int i, int j) { return grid.id(i, (j + np) % np) + 1; };  // 1-based
    const int vtop = nt * np + 1, vbot = nt * np + 2;
    for (int j = 0; j < np; ++j)
      out << "f " << vtop << ' ' << vid(0, j + 1) << ' ' << vid(0, j) << '\n';
    for (int i = 0; i + 1 < nt; ++i)
      for (int j = 0; j < np; ++j) {
        out << "f " << vid(i, j) << ' ' << vid(i + 1, j) << ' ' << vid(i + 1, j + 1)
            << '\n';
        out << "f " << vid(i, j) << ' ' << vid(i + 1, j + 1) << ' ' << vid(i, j + 1)
            << '\n';
      }
    for (int j = 0; j < np; ++j)
      out << "f " << vbot << ' ' << vid(nt - 1, j) << ' ' << vid(nt - 1, j + 1) << '\n';
  } else {
    // meridian curve in the (symmetry axis, orbit radius) plane
    for (int a = 0; a < grid.count(); ++a)
      out << "v " << iofmt::num(pos[a][0]) << ' ' << iofmt::num(pos[a][1]) << " 0\n";
    out << "l";
    for (int a = 0; a < grid.count(); ++a) out << ' ' << a + 1;
    out << '\n';
  }
  return out.str();
}

// node positions of the evolving hypersurface for mesh export
inline std::vector<VecA> radial_positions(const SphereGrid& grid, const ScalarField& gamma) {
  std::vector<VecA> pos(grid.count());
  for (int a = 0; a < grid.count(); ++a)
    pos[a] = std::exp(gamma[a]) * grid.direction(a);
  return pos;
}

// ---------------------------------------------------------------------------
// summary report + single-writer file output

inline std::string summary_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << ": " << v << '\n';
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

}  // namespace wulff
