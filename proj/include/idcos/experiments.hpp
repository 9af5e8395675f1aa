#pragma once

// Batch experiments: convergence tables, stability maps and reaction-diffusion
// runs. Configured from INI-style text ([section] key = value) and written as
// CSV plus a run.json manifest in the output directory.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "idcos/idc.hpp"
#include "idcos/pde/problems.hpp"
#include "idcos/pde/system.hpp"
#include "idcos/stability.hpp"

namespace idcos::experiments {

enum class Kind { Convergence, Stability, Simulate };

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::Convergence: return "convergence";
    case Kind::Stability: return "stability";
    case Kind::Simulate: return "simulate";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  if (s == "convergence") return Kind::Convergence;
  if (s == "stability") return Kind::Stability;
  if (s == "simulate" || s == "simulation") return Kind::Simulate;
  throw UsageError("unknown experiment kind '" + s + "'");
}

inline ResidualMode parse_residual_mode(const std::string& s) {
  if (s == "interpolant-exact" || s == "exact") return ResidualMode::InterpolantExact;
  if (s == "oversampled") return ResidualMode::Oversampled;
  throw UsageError("unknown residual mode '" + s + "'");
}

struct RunConfig {
  Kind kind = Kind::Convergence;
  std::string name;  // artifact prefix, empty means problem (or scheme for stability)
  std::string problem = "example1";
  Scheme scheme = Scheme::LieTrotter;
  std::vector<int> corrections{0, 1, 2};
  int M = 0;  // 0 = auto
  std::vector<int> nt;
  bool nt_substeps = false;  // N_t counts sub-steps instead of macro steps
  int grid = 0;              // 0 = problem default
  double end_time = -1;      // <= 0 = problem default
  int order_space = 6;
  std::optional<ResidualMode> residual_mode;
  int oversample_nodes = 13;
  std::filesystem::path out = "out";

  double dt = 0;  // simulate: sub-step
  std::vector<double> snapshots;

  double re_lo = -20, re_hi = 4, im_lo = -12, im_hi = 12;
  int n_re = 601, n_im = 601;

  pde::FhnParams fhn;
  pde::SchnakenbergParams schnakenberg;
  double custom_diffusion = 1, custom_initial = 0;

  std::string label() const {
    if (!name.empty()) return name;
    return kind == Kind::Stability ? idcos::to_string(scheme) : problem;
  }
};

// ---------------------------------------------------------------------------
// value parsing and formatting

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw UsageError("bad value '" + raw + "' for " + key);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw UsageError("empty list for " + key);
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// Sets one option by its dotted key (section.key).
inline void set_option(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_list;
  using detail::parse_number;
  const std::string v = detail::trim(value);
  if (key == "run.kind") c.kind = parse_kind(v);
  else if (key == "run.name") c.name = v;
  else if (key == "run.problem") c.problem = v;
  else if (key == "run.out") c.out = v;
  else if (key == "method.scheme") c.scheme = parse_scheme(v);
  else if (key == "method.corrections") c.corrections = parse_list<int>(key, v);
  else if (key == "method.M") c.M = v == "auto" ? 0 : parse_number<int>(key, v);
  else if (key == "method.nt") c.nt = parse_list<int>(key, v);
  else if (key == "method.nt_mode") {
    if (v != "macro" && v != "substeps") throw UsageError("method.nt_mode must be macro or substeps");
    c.nt_substeps = v == "substeps";
  } else if (key == "method.residual_mode") {
    if (v == "auto") c.residual_mode.reset();
    else c.residual_mode = parse_residual_mode(v);
  } else if (key == "method.oversample_nodes") c.oversample_nodes = parse_number<int>(key, v);
  else if (key == "space.grid") c.grid = parse_number<int>(key, v);
  else if (key == "space.order") c.order_space = parse_number<int>(key, v);
  else if (key == "time.end") c.end_time = parse_number<double>(key, v);
  else if (key == "time.dt") c.dt = parse_number<double>(key, v);
  else if (key == "time.snapshots") c.snapshots = parse_list<double>(key, v);
  else if (key == "stability.re_lo") c.re_lo = parse_number<double>(key, v);
  else if (key == "stability.re_hi") c.re_hi = parse_number<double>(key, v);
  else if (key == "stability.im_lo") c.im_lo = parse_number<double>(key, v);
  else if (key == "stability.im_hi") c.im_hi = parse_number<double>(key, v);
  else if (key == "stability.n_re") c.n_re = parse_number<int>(key, v);
  else if (key == "stability.n_im") c.n_im = parse_number<int>(key, v);
  else if (key == "fhn.Du") c.fhn.Du = parse_number<double>(key, v);
  else if (key == "fhn.Dv") c.fhn.Dv = parse_number<double>(key, v);
  else if (key == "fhn.a") c.fhn.a = parse_number<double>(key, v);
  else if (key == "fhn.C") c.fhn.C = parse_number<double>(key, v);
  else if (key == "fhn.d") c.fhn.d = parse_number<double>(key, v);
  else if (key == "fhn.delta") c.fhn.delta = parse_number<double>(key, v);
  else if (key == "schnakenberg.kappa") c.schnakenberg.kappa = parse_number<double>(key, v);
  else if (key == "schnakenberg.a") c.schnakenberg.a = parse_number<double>(key, v);
  else if (key == "schnakenberg.b") c.schnakenberg.b = parse_number<double>(key, v);
  else if (key == "schnakenberg.D1") c.schnakenberg.D1 = parse_number<double>(key, v);
  else if (key == "schnakenberg.D2") c.schnakenberg.D2 = parse_number<double>(key, v);
  else if (key == "custom.diffusion") c.custom_diffusion = parse_number<double>(key, v);
  else if (key == "custom.initial") c.custom_initial = parse_number<double>(key, v);
  else throw UsageError("unknown option '" + key + "'");
}

/// Reads INI-style text. Keys outside a section are rejected.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config: key '" + section + "' is outside a section");
    for (const auto& [key, val] : body) set_option(base, section + "." + key, val.data());
  }
  return base;
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

/// Canonical (key, value) echo of every option, in a fixed order.
inline std::vector<std::pair<std::string, std::string>> describe(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> e = {
      {"run.kind", to_string(c.kind)},
      {"run.name", c.label()},
      {"run.problem", c.problem},
      {"method.scheme", idcos::to_string(c.scheme)},
      {"method.corrections", detail::join(c.corrections)},
      {"method.M", c.M > 0 ? std::to_string(c.M) : "auto"},
      {"method.nt", detail::join(c.nt)},
      {"method.nt_mode", c.nt_substeps ? "substeps" : "macro"},
      {"method.residual_mode", c.residual_mode ? idcos::to_string(*c.residual_mode) : "auto"},
      {"method.oversample_nodes", std::to_string(c.oversample_nodes)},
      {"space.grid", std::to_string(c.grid)},
      {"space.order", std::to_string(c.order_space)},
      {"time.end", fmt(c.end_time)},
  };
  if (c.kind == Kind::Simulate) {
    e.push_back({"time.dt", fmt(c.dt)});
    e.push_back({"time.snapshots", detail::join(c.snapshots)});
  }
  if (c.kind == Kind::Stability) {
    e.push_back({"stability.window",
                 fmt(c.re_lo) + "," + fmt(c.re_hi) + "," + fmt(c.im_lo) + "," + fmt(c.im_hi)});
    e.push_back({"stability.resolution", std::to_string(c.n_re) + "," + std::to_string(c.n_im)});
  }
  if (c.problem == "fhn")
    for (auto [k, v] : {std::pair{"Du", c.fhn.Du}, {"Dv", c.fhn.Dv}, {"a", c.fhn.a}, {"C", c.fhn.C},
                        {"d", c.fhn.d}, {"delta", c.fhn.delta}})
      e.push_back({std::string("fhn.") + k, fmt(v)});
  if (c.problem == "schnakenberg")
    for (auto [k, v] : {std::pair{"kappa", c.schnakenberg.kappa}, {"a", c.schnakenberg.a},
                        {"b", c.schnakenberg.b}, {"D1", c.schnakenberg.D1}, {"D2", c.schnakenberg.D2}})
      e.push_back({std::string("schnakenberg.") + k, fmt(v)});
  if (c.problem == "custom") {
    e.push_back({"custom.diffusion", fmt(c.custom_diffusion)});
    e.push_back({"custom.initial", fmt(c.custom_initial)});
  }
  return e;
}

inline std::string config_hash(const RunConfig& c) {
  std::string s;
  for (const auto& [k, v] : describe(c)) s += k + "=" + v + "\n";
  return detail::hex64(detail::fnv1a(s));
}

// ---------------------------------------------------------------------------
// problems and solver settings

/// Periodic scalar heat equation on [0,1]^2 with a constant initial value.
inline pde::ParabolicProblem custom_problem(int n, double diffusion, double initial) {
  pde::ParabolicProblem p;
  p.name = "custom";
  p.grid = {0, 1, 0, 1, n, n, pde::Boundary::Periodic};
  p.diffusion = {diffusion};
  p.initial = [initial](int, double, double, double) { return initial; };
  p.end_time = 1;
  return p;
}

inline pde::ParabolicProblem build_problem(const RunConfig& c) {
  pde::ParabolicProblem p;
  if (c.problem == "fhn")
    p = pde::fhn(c.grid > 0 ? c.grid : 200, c.fhn);
  else if (c.problem == "schnakenberg")
    p = pde::schnakenberg(c.grid > 0 ? c.grid : 200, c.schnakenberg);
  else if (c.problem == "custom")
    p = custom_problem(c.grid > 0 ? c.grid : 32, c.custom_diffusion, c.custom_initial);
  else
    p = pde::make_problem(c.problem, c.grid);
  if (c.end_time > 0) p.end_time = c.end_time;
  return p;
}

/// Formal order of the scheme after `corrections` sweeps.
inline int target_order(Scheme s, int corrections) { return scheme_order(s) * (corrections + 1); }

/// IDC settings for one correction count. Auto M is order - 1 (at least 1).
inline IDCConfig<double> idc_settings(const RunConfig& c, int corrections) {
  if (corrections < 0) throw UsageError("number of corrections must be non-negative");
  const int order = target_order(c.scheme, corrections);
  auto ic = IDCConfig<double>::make(c.scheme, c.M > 0 ? c.M : std::max(order - 1, 1), corrections);
  ic.residual_mode = c.residual_mode.value_or(ResidualMode::InterpolantExact);
  ic.oversample_nodes = c.oversample_nodes;
  return ic;
}

// ---------------------------------------------------------------------------
// artifacts

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, checksum

  void write(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / name, std::ios::binary);
    os << content;
    if (!os) throw Error("cannot write " + (dir / name).string());
    files.push_back({name, detail::hex64(detail::fnv1a(content))});
  }

  void manifest(const RunConfig& c, double wall_seconds, nlohmann::ordered_json extra) const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : describe(c)) cfg[k] = v;
    j["config"] = cfg;
    j["config_hash"] = config_hash(c);
    nlohmann::ordered_json arts = nlohmann::ordered_json::array();
    for (const auto& [f, h] : files) arts.push_back({{"file", f}, {"fnv1a64", h}});
    j["artifacts"] = arts;
    j["wall_time_s"] = wall_seconds;
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "run.json");
    os << j.dump(2) << "\n";
  }
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (std::isnan(d)) return NAN;
    e = std::max(e, d);
  }
  return e;
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  int corrections = 0;
  int nt = 0;
  double error = NAN;
  double order = NAN;  // against the previous row of the same correction count
};

struct ConvergenceReport {
  std::string metric;  // "exact" or "self"
  std::vector<ConvergenceRow> rows;
  std::vector<std::string> log;

  std::vector<ConvergenceRow> level(int corrections) const {
    std::vector<ConvergenceRow> out;
    for (const auto& r : rows)
      if (r.corrections == corrections) out.push_back(r);
    return out;
  }
  double finest_order(int corrections) const {
    auto l = level(corrections);
    return l.empty() ? NAN : l.back().order;
  }

  std::string csv() const {
    std::string s = "correction,Nt,error,order\n";
    for (const auto& r : rows)
      s += std::to_string(r.corrections) + "," + std::to_string(r.nt) + "," + fmt(r.error) + "," +
           (std::isnan(r.order) && r.nt == level(r.corrections).front().nt ? "" : fmt(r.order)) + "\n";
    return s;
  }
};

/// Error against the exact solution when the problem has one, otherwise
/// ||v_{N_t} - v_{N_t/2}||_inf. Rows that fail record nan and a log line.
inline ConvergenceReport run_convergence(const RunConfig& c, bool write = true) {
  const auto t_start = std::chrono::steady_clock::now();
  if (c.nt.empty()) throw UsageError("convergence run needs an N_t list");
  if (c.corrections.empty()) throw UsageError("convergence run needs a corrections list");
  const pde::ParabolicProblem prob = build_problem(c);
  pde::SemiDiscreteSystem sys(prob, c.order_space);
  const auto ivp = sys.ivp(false);
  const auto civp = sys.ivp(true);
  const bool exact = static_cast<bool>(prob.exact);
  if (!exact)
    for (int n : c.nt)
      if (n % 2) throw UsageError("self-convergence needs even N_t values");

  ConvergenceReport rep;
  rep.metric = exact ? "exact" : "self";
  const std::vector<double> ref = exact ? sys.exact(ivp.end_time()) : std::vector<double>{};

  for (int cs : c.corrections) {
    auto ic = idc_settings(c, cs);
    ic.correction_problem = &civp;
    ic.warn = [&rep](const std::string& m) { rep.log.push_back("warning: " + m); };
    std::map<int, std::vector<double>> finals;
    auto solve = [&](int nt) -> const std::vector<double>& {
      auto it = finals.find(nt);
      if (it != finals.end()) return it->second;
      int macro = nt;
      if (c.nt_substeps) {
        if (nt % ic.M) throw UsageError("N_t = " + std::to_string(nt) + " is not a multiple of M");
        macro = nt / ic.M;
      }
      return finals[nt] = idc_solve(ivp, macro, ic).back();
    };
    std::optional<ConvergenceRow> prev;
    for (int nt : c.nt) {
      ConvergenceRow row{cs, nt, NAN, NAN};
      try {
        row.error = exact ? max_abs_diff(solve(nt), ref) : max_abs_diff(solve(nt), solve(nt / 2));
      } catch (const UsageError&) {
        throw;
      } catch (const Error& e) {
        rep.log.push_back("c_s=" + std::to_string(cs) + " N_t=" + std::to_string(nt) + ": " + e.what());
      }
      if (prev && prev->error > 0 && row.error > 0)
        row.order = std::log(prev->error / row.error) / std::log(double(nt) / prev->nt);
      rep.rows.push_back(row);
      prev = row;
    }
  }

  if (write) {
    Artifacts a{c.out, {}};
    a.write(c.label() + "_convergence.csv", rep.csv());
    nlohmann::ordered_json extra;
    extra["metric"] = rep.metric;
    extra["log"] = rep.log;
    a.manifest(c, seconds_since(t_start), extra);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityPanel {
  StabilitySpec spec;
  std::optional<double> real_threshold;  // first unstable real lambda < 0
  int pole_cells = 0;
  std::size_t contour_segments = 0;
};

struct StabilityReport {
  std::vector<StabilityPanel> panels;
};

/// Auto M for scans is the library default for the target order.
inline StabilitySpec stability_spec(const RunConfig& c, int corrections) {
  StabilitySpec s;
  s.scheme = c.scheme;
  s.corrections = corrections;
  s.M = c.M > 0 ? c.M : default_M(target_order(c.scheme, corrections));
  s.residual_mode = c.residual_mode.value_or(ResidualMode::Oversampled);
  s.oversample_nodes = c.oversample_nodes;
  return s;
}

inline StabilityReport run_stability(const RunConfig& c, bool write = true) {
  const auto t_start = std::chrono::steady_clock::now();
  if (c.corrections.empty()) throw UsageError("stability run needs a corrections list");
  StabilityReport rep;
  Artifacts a{c.out, {}};
  nlohmann::ordered_json panels = nlohmann::ordered_json::array();
  for (int cs : c.corrections) {
    StabilityScan scan;
    scan.re_lo = c.re_lo;
    scan.re_hi = c.re_hi;
    scan.im_lo = c.im_lo;
    scan.im_hi = c.im_hi;
    scan.n_re = c.n_re;
    scan.n_im = c.n_im;
    scan.spec = stability_spec(c, cs);
    scan_region(scan);
    const auto lines = level_contour(scan, 1.0);

    StabilityPanel p;
    p.spec = scan.spec;
    p.real_threshold = real_instability_threshold(scan.spec);
    p.pole_cells = static_cast<int>(std::count_if(scan.amp.begin(), scan.amp.end(),
                                                  [](double v) { return !std::isfinite(v); }));
    p.contour_segments = lines.size();
    rep.panels.push_back(p);

    if (write) {
      const std::string stem = c.label() + "_cs" + std::to_string(cs);
      std::ostringstream field, contour;
      write_field_csv(field, scan);
      write_contour_csv(contour, lines);
      a.write(stem + "_field.csv", field.str());
      a.write(stem + "_contour.csv", contour.str());
    }
    panels.push_back({{"corrections", cs},
                      {"M", p.spec.M},
                      {"real_threshold", p.real_threshold ? fmt(*p.real_threshold) : "none"},
                      {"pole_cells", p.pole_cells}});
  }
  if (write) a.manifest(c, seconds_since(t_start), {{"panels", panels}});
  return rep;
}

// ---------------------------------------------------------------------------
// simulation

struct Snapshot {
  double t = 0;
  std::vector<double> field;  // component-major, as SemiDiscreteSystem lays it out
  std::vector<double> min, max;  // per component
};

struct SimulationReport {
  std::vector<Snapshot> snapshots;
  double macro_step = 0;
  int macro_steps = 0;
};

/// Steps IDC macro intervals of length M * dt and records the configured
/// snapshot times, which must be multiples of that length.
inline SimulationReport run_simulation(const RunConfig& c, bool write = true) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!(c.dt > 0)) throw UsageError("simulation needs time.dt > 0");
  if (c.corrections.size() != 1) throw UsageError("simulation takes a single correction count");
  std::vector<double> snaps = c.snapshots;
  if (snaps.empty()) {
    if (c.end_time <= 0) throw UsageError("simulation needs time.snapshots or time.end");
    snaps = {c.end_time};
  }
  std::sort(snaps.begin(), snaps.end());
  if (snaps.front() <= 0) throw UsageError("snapshot times must be positive");

  pde::ParabolicProblem prob = build_problem(c);
  prob.end_time = snaps.back();
  pde::SemiDiscreteSystem sys(prob, c.order_space);
  const auto ivp = sys.ivp(false);
  const auto civp = sys.ivp(true);
  auto ic = idc_settings(c, c.corrections.front());
  ic.correction_problem = &civp;
  ic.warn = [](const std::string&) {};
  ic.validate();

  const double H = ic.M * c.dt;
  std::vector<long> marks;
  for (double t : snaps) {
    const double k = t / H;
    const long r = std::lround(k);
    if (r < 1 || std::abs(k - r) > 1e-9 * std::max(1.0, k))
      throw UsageError("snapshot t = " + fmt(t) + " is not a multiple of the macro step M*dt = " + fmt(H));
    marks.push_back(r);
  }

  const pde::Grid2D& g = sys.grid();
  const int nc = sys.components();
  const std::size_t nodes = g.size();
  SimulationReport rep;
  rep.macro_step = H;
  rep.macro_steps = static_cast<int>(marks.back());

  auto guard = [&](const std::vector<double>& u, double t) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (std::isfinite(u[k])) continue;
      const std::size_t node = k % nodes;
      const int i = static_cast<int>(node % g.nx), j = static_cast<int>(node / g.nx);
      std::ostringstream os;
      os << "non-finite field at t = " << fmt(t) << ", component " << k / nodes << ", node (" << i
         << "," << j << ") = (" << fmt(g.x(i)) << "," << fmt(g.y(j)) << ")";
      throw NumericalError(k / nodes, t, os.str());
    }
  };

  std::vector<double> u = sys.initial_state();
  guard(u, 0.0);
  std::size_t next = 0;
  for (long n = 0; n < marks.back(); ++n) {
    const double t0 = double(n) * H;
    u = idc_macro_step(ivp, t0, H, u, ic).values.back();
    guard(u, t0 + H);
    while (next < marks.size() && marks[next] == n + 1) {
      Snapshot s;
      s.t = snaps[next];
      s.field = u;
      for (int cc = 0; cc < nc; ++cc) {
        auto b = u.begin() + cc * nodes;
        auto [lo, hi] = std::minmax_element(b, b + nodes);
        s.min.push_back(*lo);
        s.max.push_back(*hi);
      }
      rep.snapshots.push_back(std::move(s));
      ++next;
    }
  }

  if (write) {
    Artifacts a{c.out, {}};
    nlohmann::ordered_json snapinfo = nlohmann::ordered_json::array();
    for (const auto& s : rep.snapshots) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "%.6g", s.t);
      std::string csv = nc == 1 ? "x,y,u\n" : "x,y,u,v\n";
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          csv += fmt(g.x(i)) + "," + fmt(g.y(j));
          for (int cc = 0; cc < nc; ++cc) csv += "," + fmt(s.field[cc * nodes + g.index(i, j)]);
          csv += "\n";
        }
      const std::string file = c.label() + "_t" + tag + ".csv";
      a.write(file, csv);
      snapinfo.push_back({{"t", fmt(s.t)}, {"file", file}, {"min", s.min}, {"max", s.max}});
    }
    a.manifest(c, seconds_since(t_start),
               {{"macro_step", fmt(H)}, {"macro_steps", rep.macro_steps}, {"snapshots", snapinfo}});
  }
  return rep;
}

inline void run(const RunConfig& c) {
  switch (c.kind) {
    case Kind::Convergence: run_convergence(c); break;
    case Kind::Stability: run_stability(c); break;
    case Kind::Simulate: run_simulation(c); break;
  }
}

}  // namespace idcos::experiments
