#pragma once

// The casilift command line: run configuration, subcommands, CSV and
// manifest output. Everything here is a pure function of the configuration
// file and the material library it names; workers and caching only change
// how fast the same bytes are produced.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "casilift/brownian.hpp"
#include "casilift/landscape.hpp"
#include "casilift/lifshitz.hpp"
#include "casilift/material_io.hpp"
#include "casilift/parallel.hpp"

namespace casilift::cli {

using nlohmann::json;

enum class ExitCode { ok = 0, config_error = 2, numerical_failure = 3 };

struct TabulateSpec {
  std::vector<std::string> materials;
  std::vector<double> xi_grid;  // rad/s
};

struct BoltzmannSpec {
  std::optional<double> landscape_T;  // K, frozen landscape when set
  BasinPolicy policy = BasinPolicy::suspension_basin;
};

struct RunConfig {
  std::string source;  // path of the config file
  std::string materials_path;
  std::string materials_text;
  MaterialLibrary library;
  std::optional<SuspensionCase> suspension;
  std::optional<std::pair<double, double>> liquid_range;  // K, of the fluid
  std::vector<double> T_grid;
  std::vector<double> d_grid;
  std::optional<TabulateSpec> tabulate;
  BoltzmannSpec boltzmann;
  LandscapeOptions landscape;
  BoltzmannOptions boltzmann_options;
  double T_tol = 1e-3;
  int workers = 1;
  json canonical;  // the parsed file, for hashing
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest-safe round-trip text for a double: 17 significant digits, '.'
/// decimal point whatever the locale.
inline std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  explicit Csv(std::string header) : text_(std::move(header) + "\n") {}

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((text_ += (first ? "" : ","), text_ += cell(cells), first = false), ...);
    text_ += "\n";
  }

  const std::string& text() const { return text_; }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  std::string text_;
};

namespace detail {

using casilift::detail::EntryReader;

inline const json& object_at(const EntryReader& r, const std::string& field) {
  const json& v = r.at(field);
  if (!v.is_object()) r.fail(field, "expected an object");
  return v;
}

inline int integer(const EntryReader& r, const std::string& field) {
  const json& v = r.at(field);
  if (!v.is_number_integer()) r.fail(field, "expected an integer");
  return v.get<int>();
}

inline std::vector<double> number_list(const EntryReader& r, const std::string& field) {
  const json& v = r.at(field);
  if (!v.is_array() || v.empty()) r.fail(field, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) r.fail(field, "expected a nonempty array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline void require_sorted(const EntryReader& r, const std::string& field, const std::vector<double>& g) {
  if (g.empty()) r.fail(field, "grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) r.fail(field, "grid values must be finite");
    if (i > 0 && !(g[i] > g[i - 1])) r.fail(field, "grid must be strictly increasing");
  }
}

/// {"values<suffix>": [...]} or {"min<suffix>", "max<suffix>", "points", "spacing": "log"|"linear"}.
inline std::vector<double> read_grid(const EntryReader& r, const std::string& suffix, const std::string& default_spacing) {
  std::vector<double> g;
  if (r.has("values" + suffix)) {
    g = number_list(r, "values" + suffix);
  } else {
    const double lo = r.number("min" + suffix);
    const double hi = r.number("max" + suffix);
    const int n = integer(r, "points");
    const std::string spacing = r.has("spacing") ? r.string("spacing") : default_spacing;
    if (n < 1) r.fail("points", "must be >= 1");
    if (n == 1) {
      if (lo != hi) r.fail("points", "a single point needs min == max");
      g = {lo};
    } else if (spacing == "linear") {
      for (int i = 0; i < n; ++i) g.push_back(i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
    } else if (spacing == "log") {
      if (!(lo > 0.0)) r.fail("min" + suffix, "log spacing needs a positive minimum");
      g = log_grid(lo, hi, n);
    } else {
      r.fail("spacing", "expected 'log' or 'linear'");
    }
  }
  require_sorted(r, r.has("values" + suffix) ? "values" + suffix : "min" + suffix, g);
  r.reject_unknown();
  return g;
}

inline const Material& resolve(const MaterialLibrary& lib, const EntryReader& r, const std::string& field) {
  const std::string name = r.string(field);
  auto it = lib.find(name);
  if (it == lib.end()) r.fail(field, "unknown material '" + name + "'");
  return it->second;
}

inline Stack read_stack(const MaterialLibrary& lib, const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  EntryReader r(j, ctx);
  Stack s;
  if (r.has("layers")) {
    const json& layers = r.at("layers");
    if (!layers.is_array()) r.fail("layers", "expected an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!layers[i].is_object()) r.fail("layers", "entry " + std::to_string(i) + " is not an object");
      EntryReader lr(layers[i], ctx + ": layers[" + std::to_string(i) + "]");
      Layer l{resolve(lib, lr, "material"), lr.number("thickness_m")};
      if (!(l.thickness > 0.0) || !std::isfinite(l.thickness)) lr.fail("thickness_m", "must be > 0");
      lr.reject_unknown();
      s.layers.push_back(std::move(l));
    }
  }
  s.terminal = resolve(lib, r, "terminal");
  r.reject_unknown();
  return s;
}

inline SuspensionCase read_case(const MaterialLibrary& lib, const json& j, const std::string& ctx) {
  EntryReader r(j, ctx);
  SuspensionCase c;
  const std::string kind = r.string("kind");
  if (kind == "plate") {
    c.kind = SuspensionCase::Kind::plate;
  } else if (kind == "sphere") {
    c.kind = SuspensionCase::Kind::sphere;
  } else {
    r.fail("kind", "expected 'plate' or 'sphere'");
  }
  c.fluid = resolve(lib, r, "fluid");
  c.substrate = read_stack(lib, object_at(r, "substrate"), ctx + ": substrate");
  if (c.kind == SuspensionCase::Kind::plate) {
    c.body = read_stack(lib, object_at(r, "body"), ctx + ": body");
    c.area = r.number_or("area_m2", 1.0);
  } else {
    EntryReader sr(object_at(r, "sphere"), ctx + ": sphere");
    c.sphere = SphereSpec{resolve(lib, sr, "shell"), sr.number("r_inner_m"), sr.number("R_outer_m")};
    sr.reject_unknown();
  }
  if (r.has("gravity")) {
    EntryReader gr(object_at(r, "gravity"), ctx + ": gravity");
    GravitySpec g;
    g.g = gr.number_or("g_m_s2", constants::g_standard);
    if (c.kind == SuspensionCase::Kind::plate) {
      g.mode = GravitySpec::Mode::slab;
      g.delta_rho = gr.number("delta_rho_kg_m3");
      g.thickness = gr.number("thickness_m");
    } else {
      g.mode = GravitySpec::Mode::hollow_sphere;
      g.rho_shell = gr.number("rho_shell_kg_m3");
      g.rho_fluid = gr.number("rho_fluid_kg_m3");
      g.r_inner = c.sphere->r_inner;
      g.R_outer = c.sphere->R_outer;
    }
    gr.reject_unknown();
    c.gravity = g;
  }
  try {
    validate(c);
  } catch (const DomainError& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  r.reject_unknown();
  return c;
}

inline std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses and fully validates a configuration. `subcommand` decides which
/// sections are required. Throws ConfigError before any computation.
inline RunConfig parse_config(const std::string& text, const std::string& origin, const std::string& subcommand) {
  using detail::EntryReader;
  RunConfig cfg;
  cfg.source = origin;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(casilift::detail::line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
  cfg.canonical = root;
  EntryReader r(root, origin);

  std::filesystem::path mp = r.string("materials_path");
  if (mp.is_relative()) mp = std::filesystem::path(origin).parent_path() / mp;
  cfg.materials_path = mp.lexically_normal().string();
  cfg.materials_text = detail::read_file(cfg.materials_path, "material library");
  cfg.library = parse_material_library(cfg.materials_text, cfg.materials_path);

  if (r.has("case")) cfg.suspension = detail::read_case(cfg.library, detail::object_at(r, "case"), origin + ": case");
  if (r.has("fluid_liquid_range_K")) {
    const auto v = detail::number_list(r, "fluid_liquid_range_K");
    if (v.size() != 2 || !(v[0] < v[1])) r.fail("fluid_liquid_range_K", "expected [T_freeze, T_boil]");
    cfg.liquid_range = std::pair{v[0], v[1]};
  }
  if (r.has("T_grid")) cfg.T_grid = detail::read_grid(EntryReader(detail::object_at(r, "T_grid"), origin + ": T_grid"), "_K", "linear");
  if (r.has("d_grid")) cfg.d_grid = detail::read_grid(EntryReader(detail::object_at(r, "d_grid"), origin + ": d_grid"), "_m", "log");
  if (r.has("workers")) {
    cfg.workers = detail::integer(r, "workers");
    if (cfg.workers < 1) r.fail("workers", "must be >= 1");
  }
  if (r.has("tolerances")) {
    EntryReader tr(detail::object_at(r, "tolerances"), origin + ": tolerances");
    cfg.landscape.truncation = tr.number_or("truncation", cfg.landscape.truncation);
    cfg.landscape.integrand.rel_tol = tr.number_or("integrand_rel_tol", cfg.landscape.integrand.rel_tol);
    cfg.T_tol = tr.number_or("T_tol_K", cfg.T_tol);
    if (tr.has("matsubara_cap")) {
      cfg.landscape.n_max_cap = detail::integer(tr, "matsubara_cap");
      if (cfg.landscape.n_max_cap < 1) tr.fail("matsubara_cap", "must be >= 1");
    }
    cfg.boltzmann_options.interp_tol_kT = tr.number_or("interp_tol_kT", cfg.boltzmann_options.interp_tol_kT);
    cfg.boltzmann_options.resolution_kT = tr.number_or("resolution_kT", cfg.boltzmann_options.resolution_kT);
    cfg.boltzmann_options.cutoff_kT = tr.number_or("cutoff_kT", cfg.boltzmann_options.cutoff_kT);
    tr.reject_unknown();
    auto positive = [&](double v, const char* f) {
      if (!(v > 0.0) || !std::isfinite(v)) tr.fail(f, "must be > 0");
    };
    if (!(cfg.landscape.truncation < 1.0)) tr.fail("truncation", "must lie in (0, 1)");
    positive(cfg.landscape.truncation, "truncation");
    positive(cfg.landscape.integrand.rel_tol, "integrand_rel_tol");
    positive(cfg.T_tol, "T_tol_K");
    positive(cfg.boltzmann_options.interp_tol_kT, "interp_tol_kT");
    positive(cfg.boltzmann_options.resolution_kT, "resolution_kT");
    positive(cfg.boltzmann_options.cutoff_kT, "cutoff_kT");
  }
  if (r.has("tabulate")) {
    EntryReader tr(detail::object_at(r, "tabulate"), origin + ": tabulate");
    TabulateSpec t;
    const json& names = tr.at("materials");
    if (!names.is_array() || names.empty()) tr.fail("materials", "expected a nonempty array of names");
    for (const auto& n : names) {
      if (!n.is_string()) tr.fail("materials", "expected a nonempty array of names");
      if (!cfg.library.count(n.get<std::string>())) tr.fail("materials", "unknown material '" + n.get<std::string>() + "'");
      t.materials.push_back(n.get<std::string>());
    }
    t.xi_grid = detail::read_grid(EntryReader(detail::object_at(tr, "xi_grid"), origin + ": tabulate: xi_grid"), "_rad_s", "log");
    tr.reject_unknown();
    cfg.tabulate = t;
  }
  if (r.has("boltzmann")) {
    EntryReader br(detail::object_at(r, "boltzmann"), origin + ": boltzmann");
    if (br.has("landscape_T_K")) {
      cfg.boltzmann.landscape_T = br.number("landscape_T_K");
      if (!(*cfg.boltzmann.landscape_T > 0.0)) br.fail("landscape_T_K", "must be > 0");
    }
    if (br.has("policy")) {
      const std::string p = br.string("policy");
      if (p == "suspension_basin") {
        cfg.boltzmann.policy = BasinPolicy::suspension_basin;
      } else if (p == "full_range") {
        cfg.boltzmann.policy = BasinPolicy::full_range;
      } else {
        br.fail("policy", "expected 'suspension_basin' or 'full_range'");
      }
    }
    br.reject_unknown();
  }
  r.reject_unknown();

  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(origin + ": subcommand '" + subcommand + "' needs " + what);
  };
  if (subcommand == "materials") {
    need(cfg.tabulate.has_value(), "a 'tabulate' section");
    return cfg;
  }
  need(cfg.suspension.has_value(), "a 'case' section");
  need(!cfg.T_grid.empty(), "a 'T_grid' section");
  need(!cfg.d_grid.empty(), "a 'd_grid' section");
  if (!(cfg.d_grid.front() > 0.0)) throw ConfigError(origin + ": d_grid: separations must be > 0");
  if (!(cfg.T_grid.front() >= 0.0)) throw ConfigError(origin + ": T_grid: temperatures must be >= 0");
  if (subcommand != "pressure" && !(cfg.T_grid.front() > 0.0))
    throw ConfigError(origin + ": T_grid: subcommand '" + subcommand + "' needs temperatures > 0");
  if (subcommand == "sweep" || subcommand == "boltzmann") {
    need(cfg.d_grid.size() >= 16, "a d_grid of at least 16 points (the equilibrium scan)");
    need(cfg.d_grid.front() < cfg.d_grid.back(), "a d_grid spanning a range");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, const std::string& subcommand) {
  return parse_config(detail::read_file(path, "config"), path, subcommand);
}

/// Config hash: the subcommand, the parsed configuration, and the material
/// library bytes.
inline std::uint64_t config_hash(const RunConfig& cfg, const std::string& subcommand) {
  std::uint64_t h = fnv1a64(subcommand);
  h = fnv1a64("\n", h);
  h = fnv1a64(cfg.canonical.dump(), h);
  h = fnv1a64("\n", h);
  return fnv1a64(cfg.materials_text, h);
}

struct Output {
  std::string name;
  std::string text;
};

struct RunContext {
  int workers = 1;
  bool cache = true;
  bool verbose = false;
  std::ostream* log = &std::cerr;
  std::vector<std::string> warnings;

  void warn(const std::string& w) {
    warnings.push_back(w);
    *log << "warning: " << w << "\n";
  }
  void info(const std::string& s) const {
    if (verbose) *log << s << "\n";
  }
};

namespace detail {

/// Splits [0, n) into at most `parts` contiguous chunks.
inline std::vector<std::pair<std::size_t, std::size_t>> chunks(std::size_t n, int parts) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(parts)));
  for (std::size_t i = 0; i < k; ++i) out.push_back({n * i / k, n * (i + 1) / k});
  return out;
}

struct Task {
  std::size_t iT;
  std::size_t lo, hi;  // d-grid index range
};

/// One task per (temperature, d-chunk): a chunk shares a reflection cache.
inline std::vector<Task> grid_tasks(std::size_t nT, std::size_t nd, int workers) {
  std::vector<Task> tasks;
  const int per_T = nT >= static_cast<std::size_t>(workers) ? 1 : (workers + static_cast<int>(nT) - 1) / static_cast<int>(nT);
  for (std::size_t i = 0; i < nT; ++i)
    for (auto [lo, hi] : chunks(nd, per_T)) tasks.push_back({i, lo, hi});
  return tasks;
}

}  // namespace detail

inline std::vector<Output> run_materials(const RunConfig& cfg, RunContext&) {
  std::vector<Output> out;
  for (const auto& name : cfg.tabulate->materials) {
    Csv csv("xi_rad_s,eps,matsubara_K");
    for (const auto& row : tabulate(cfg.library.at(name), cfg.tabulate->xi_grid)) csv.row(row.xi, row.eps, row.matsubara_K);
    out.push_back({"materials_" + name + ".csv", csv.text()});
  }
  return out;
}

/// Plate-plate pressure and free energy per area of the case's equivalent
/// gap over the (T, d) grid.
inline std::vector<Output> run_pressure(const RunConfig& cfg, RunContext& ctx) {
  const auto tasks = detail::grid_tasks(cfg.T_grid.size(), cfg.d_grid.size(), ctx.workers);
  struct Row {
    double p, e;
    long n;
  };
  const auto parts = parallel_map(tasks, ctx.workers, [&](const detail::Task& t) {
    ReflectionCache cache(ctx.cache);
    ThermalSpec th;
    th.T = cfg.T_grid[t.iT];
    th.truncation = cfg.landscape.truncation;
    th.n_max_cap = cfg.landscape.n_max_cap;
    std::vector<Row> rows;
    for (std::size_t j = t.lo; j < t.hi; ++j) {
      const double d = cfg.d_grid[j];
      try {
        const LifshitzResult r = lifshitz(equivalent_gap(*cfg.suspension, d), th, cfg.landscape.integrand, &cache);
        rows.push_back({r.pressure.value, r.energy.value, r.pressure.n_terms_used});
      } catch (const NumericalFailure& e) {
        std::ostringstream msg;
        msg << e.what() << " [T = " << th.T << " K, d = " << d << " m]";
        throw NumericalFailure(msg.str(), e.residual);
      }
    }
    return rows;
  });
  Csv csv("d_m,T_K,pressure_Pa,energy_J_m2,n_terms");
  for (std::size_t k = 0; k < tasks.size(); ++k)
    for (std::size_t j = tasks[k].lo; j < tasks[k].hi; ++j) {
      const Row& r = parts[k][j - tasks[k].lo];
      csv.row(cfg.d_grid[j], cfg.T_grid[tasks[k].iT], r.p, r.e, r.n);
    }
  return {{"pressure.csv", csv.text()}};
}

inline std::vector<Output> run_landscape(const RunConfig& cfg, RunContext& ctx) {
  const auto tasks = detail::grid_tasks(cfg.T_grid.size(), cfg.d_grid.size(), ctx.workers);
  LandscapeOptions lopt = cfg.landscape;
  lopt.cache = ctx.cache;
  const auto parts = parallel_map(tasks, ctx.workers, [&](const detail::Task& t) {
    Landscape ls(*cfg.suspension, cfg.T_grid[t.iT], lopt);
    std::vector<LandscapePoint> pts;
    for (std::size_t j = t.lo; j < t.hi; ++j) pts.push_back(ls.at(cfg.d_grid[j]));
    return pts;
  });
  Csv csv("T_K,d_m,energy_J,energy_kT,force_repulsive_N");
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const double T = cfg.T_grid[tasks[k].iT];
    for (const auto& p : parts[k]) csv.row(T, p.d, p.energy, p.energy / (constants::k_B * T), p.force);
  }
  return {{"landscape.csv", csv.text()}};
}

inline std::vector<Output> run_sweep(const RunConfig& cfg, RunContext& ctx) {
  SweepOptions opt;
  opt.d_range = {cfg.d_grid.front(), cfg.d_grid.back()};
  opt.n_scan = static_cast<int>(cfg.d_grid.size());
  opt.workers = ctx.workers;
  opt.T_tol = cfg.T_tol;
  LandscapeOptions lopt = cfg.landscape;
  lopt.cache = ctx.cache;
  const SweepResult res = sweep_temperature(*cfg.suspension, cfg.T_grid, opt, lopt);
  Csv branches("T_K,branch_id,d_c_m,stability");
  for (const auto& b : res.branches)
    for (const auto& s : b.samples) branches.row(s.T, b.id, s.d_c, to_string(b.stability));
  Csv bif("T_c_K,d_merge_m,branch_a,branch_b");
  for (const auto& b : res.bifurcations) {
    bif.row(b.T_c, b.d_merge, b.branch_a, b.branch_b);
    if (!b.tangent)
      ctx.warn("bifurcation near T = " + fmt(b.T_c) + " K does not meet the double-root tangency tolerance");
  }
  if (res.branches.empty()) ctx.warn("no equilibria found in the separation range at any temperature");
  ctx.info("sweep: " + std::to_string(res.branches.size()) + " branches, " + std::to_string(res.bifurcations.size()) +
           " bifurcations");
  return {{"sweep_branches.csv", branches.text()}, {"sweep_bifurcations.csv", bif.text()}};
}

inline std::vector<Output> run_boltzmann(const RunConfig& cfg, RunContext& ctx) {
  const BoltzmannDomain domain{cfg.d_grid.front(), cfg.d_grid.back(), cfg.boltzmann.policy};
  BoltzmannOptions bopt = cfg.boltzmann_options;
  bopt.n_scan = static_cast<int>(cfg.d_grid.size());
  LandscapeOptions lopt = cfg.landscape;
  lopt.cache = ctx.cache;
  std::vector<BoltzmannStats> stats;
  if (cfg.boltzmann.landscape_T) {
    Landscape ls(*cfg.suspension, *cfg.boltzmann.landscape_T, lopt);
    const BoltzmannLandscape bl(casilift::detail::energy_force(ls), *cfg.boltzmann.landscape_T, domain,
                                cfg.T_grid.front(), cfg.T_grid.back(), bopt);
    for (double T : cfg.T_grid) stats.push_back(bl.at(T));
  } else {
    stats = parallel_map(cfg.T_grid, ctx.workers,
                         [&](double T) { return boltzmann_stats(*cfg.suspension, T, T, domain, bopt, lopt); });
  }
  Csv csv("T_K,mean_d_m,q025_m,q975_m,barrier_contact_kT");
  for (const auto& s : stats) csv.row(s.ensemble_T, s.mean_d, s.q025, s.q975, s.barrier_in);
  return {{"boltzmann.csv", csv.text()}};
}

inline json manifest(const RunConfig& cfg, const std::string& subcommand, const std::vector<Output>& outputs,
                     const RunContext& ctx, double wall_s) {
  json m;
  m["tool"] = "casilift";
  m["version"] = CASILIFT_VERSION;
  m["subcommand"] = subcommand;
  m["config"] = cfg.source;
  m["config_hash"] = "fnv1a64:" + hex64(config_hash(cfg, subcommand));
  m["materials_path"] = cfg.materials_path;
  m["constants"] = {{"hbar_J_s", constants::hbar},
                    {"k_B_J_K", constants::k_B},
                    {"c_m_s", constants::c},
                    {"g_m_s2", cfg.suspension && cfg.suspension->gravity ? cfg.suspension->gravity->g : constants::g_standard}};
  json sums = json::object();
  for (const auto& o : outputs) sums[o.name] = "fnv1a64:" + hex64(fnv1a64(o.text));
  m["outputs"] = sums;
  m["workers"] = ctx.workers;
  m["cache"] = ctx.cache;
  m["wall_time_s"] = wall_s;
  m["warnings"] = ctx.warnings;
  if (cfg.suspension) {
    json f;
    f["name"] = cfg.suspension->fluid.name;
    if (cfg.liquid_range) {
      f["liquid_range_K"] = {cfg.liquid_range->first, cfg.liquid_range->second};
      json outside = json::array();
      for (double T : cfg.T_grid)
        if (T < cfg.liquid_range->first || T > cfg.liquid_range->second) outside.push_back(T);
      f["T_outside_liquid_range_K"] = outside;
    }
    m["fluid"] = f;
  }
  return m;
}

/// Runs the command line. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& log = std::cerr) {
  CLI::App app{"casilift: Casimir-Lifshitz suspension landscapes at finite temperature"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> workers_flag;
  bool no_cache = false;
  bool verbose = false;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"materials", "tabulate eps(i xi) of library materials"},
      {"pressure", "plate-plate pressure and free energy over the (T, d) grid"},
      {"landscape", "total energy and force of the case over the (T, d) grid"},
      {"sweep", "equilibrium branches and bifurcations over the T grid"},
      {"boltzmann", "Boltzmann mean separation, 95% interval and contact barrier over the T grid"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers_flag, "worker threads (overrides CASILIFT_WORKERS)");
    sub->add_flag("--no-cache", no_cache, "disable the reflection cache");
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    std::cout << os.str();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    std::cout << os.str();
    return 0;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n" << app.help();
    return static_cast<int>(ExitCode::config_error);
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  RunContext ctx;
  ctx.cache = !no_cache;
  ctx.verbose = verbose;
  ctx.log = &log;
  const auto start = std::chrono::steady_clock::now();
  try {
    const RunConfig cfg = load_config(config_path, subcommand);
    ctx.workers = workers_flag ? *workers_flag : workers_from_env(cfg.workers);
    if (ctx.workers < 1) throw ConfigError("--workers must be >= 1");
    ctx.info("casilift " + subcommand + ": config hash " + hex64(config_hash(cfg, subcommand)) + ", " +
             std::to_string(ctx.workers) + " workers");

    std::vector<Output> outputs;
    if (subcommand == "materials") outputs = run_materials(cfg, ctx);
    if (subcommand == "pressure") outputs = run_pressure(cfg, ctx);
    if (subcommand == "landscape") outputs = run_landscape(cfg, ctx);
    if (subcommand == "sweep") outputs = run_sweep(cfg, ctx);
    if (subcommand == "boltzmann") outputs = run_boltzmann(cfg, ctx);
    if (cfg.liquid_range)
      for (double T : cfg.T_grid)
        if (T < cfg.liquid_range->first || T > cfg.liquid_range->second) {
          ctx.warn("some temperatures lie outside the fluid's liquid range [" + fmt(cfg.liquid_range->first) + ", " +
                   fmt(cfg.liquid_range->second) + "] K");
          break;
        }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
      const auto path = std::filesystem::path(out_dir) / name;
      std::ofstream f(path, std::ios::binary);
      if (!(f << text)) throw ConfigError("cannot write '" + path.string() + "'");
    };
    for (const auto& o : outputs) write(o.name, o.text);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write("manifest.json", manifest(cfg, subcommand, outputs, ctx, wall).dump(2) + "\n");
    ctx.info("wrote " + std::to_string(outputs.size() + 1) + " files to " + out_dir + " in " + fmt(wall) + " s");
    return static_cast<int>(ExitCode::ok);
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << "\n";
    return static_cast<int>(ExitCode::numerical_failure);
  } catch (const Error& e) {
    log << "config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config_error);
  }
}

}  // namespace casilift::cli
