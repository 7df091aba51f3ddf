#pragma once

// Total-energy landscapes of suspended bodies (Casimir + gravity/buoyancy),
// equilibrium search, temperature continuation and bifurcation refinement.
//
// Force convention throughout: positive pushes the bodies apart.

#include <algorithm>
#include <concepts>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "casilift/constants.hpp"
#include "casilift/errors.hpp"
#include "casilift/lifshitz.hpp"
#include "casilift/parallel.hpp"
#include "casilift/stratified.hpp"

namespace casilift {

struct GravitySpec {
  enum class Mode { slab, hollow_sphere };
  Mode mode = Mode::slab;
  double delta_rho = 0.0;  // slab: body minus fluid density, kg/m^3
  double thickness = 0.0;  // slab: h, m
  double rho_shell = 0.0;  // sphere, kg/m^3
  double rho_fluid = 0.0;  // sphere, kg/m^3
  double r_inner = 0.0;    // sphere, m
  double R_outer = 0.0;    // sphere, m
  double g = constants::g_standard;
};

inline void validate(const GravitySpec& gs) {
  if (!(gs.g >= 0.0) || !std::isfinite(gs.g)) throw DomainError("gravity: g must be finite and >= 0");
  if (gs.mode == GravitySpec::Mode::slab) {
    if (!(gs.thickness >= 0.0) || !std::isfinite(gs.thickness)) throw DomainError("gravity: slab thickness must be >= 0");
    if (!std::isfinite(gs.delta_rho)) throw DomainError("gravity: density difference must be finite");
  } else {
    if (!(gs.r_inner > 0.0 && gs.r_inner < gs.R_outer) || !std::isfinite(gs.R_outer))
      throw DomainError("gravity: hollow sphere needs 0 < r_inner < R_outer");
    if (!std::isfinite(gs.rho_shell) || !std::isfinite(gs.rho_fluid)) throw DomainError("gravity: densities must be finite");
  }
}

/// Downward force of the gravity spec: N/m^2 for a slab, N for a sphere
/// filled with the surrounding fluid.
inline double weight(const GravitySpec& gs) {
  validate(gs);
  if (gs.mode == GravitySpec::Mode::slab) return gs.delta_rho * gs.g * gs.thickness;
  const double R3 = gs.R_outer * gs.R_outer * gs.R_outer;
  const double r3 = gs.r_inner * gs.r_inner * gs.r_inner;
  return gs.g * (gs.rho_shell - gs.rho_fluid) * (4.0 * constants::pi / 3.0) * (R3 - r3);
}

/// Proximity-force sphere: a shell of `shell` material between r_inner and
/// R_outer, filled with the gap fluid.
struct SphereSpec {
  Material shell;
  double r_inner = 0.0;
  double R_outer = 0.0;
};

struct SuspensionCase {
  enum class Kind { plate, sphere };
  Kind kind = Kind::plate;
  Stack substrate;            // lower body
  Stack body;                 // plate case: the suspended slab, gap-adjacent layers first
  std::optional<SphereSpec> sphere;
  Material fluid;
  std::optional<GravitySpec> gravity;
  double area = 1.0;          // m^2, plate case
};

inline void validate(const SuspensionCase& c) {
  validate(c.substrate);
  if (is_metallic(c.fluid)) throw DomainError("suspension fluid '" + c.fluid.name + "' must be non-metallic");
  if (c.gravity) validate(*c.gravity);
  if (c.kind == SuspensionCase::Kind::plate) {
    validate(c.body);
    if (!(c.area > 0.0) || !std::isfinite(c.area)) throw DomainError("plate case: area must be > 0");
    if (c.gravity && c.gravity->mode != GravitySpec::Mode::slab)
      throw DomainError("plate case: gravity must use slab mode");
  } else {
    if (!c.sphere) throw DomainError("sphere case: sphere geometry missing");
    const SphereSpec& s = *c.sphere;
    if (!(s.r_inner > 0.0 && s.r_inner < s.R_outer) || !std::isfinite(s.R_outer))
      throw DomainError("sphere case: needs 0 < r_inner < R_outer");
    if (c.gravity) {
      if (c.gravity->mode != GravitySpec::Mode::hollow_sphere)
        throw DomainError("sphere case: gravity must use hollow_sphere mode");
      if (c.gravity->r_inner != s.r_inner || c.gravity->R_outer != s.R_outer)
        throw DomainError("sphere case: gravity radii differ from the sphere geometry");
    }
  }
}

/// Plate-plate geometry that the case reduces to at separation d. For the
/// sphere this is substrate | fluid gap | shell layer (R - r) | interior fluid.
inline GapGeometry equivalent_gap(const SuspensionCase& c, double d) {
  GapGeometry g;
  g.left = c.substrate;
  g.fluid = c.fluid;
  g.separation = d;
  if (c.kind == SuspensionCase::Kind::plate) {
    g.right = c.body;
  } else {
    const SphereSpec& s = *c.sphere;
    g.right.layers = {Layer{s.shell, s.R_outer - s.r_inner}};
    g.right.terminal = c.fluid;
  }
  return g;
}

/// Numerical settings shared by landscape evaluations.
struct LandscapeOptions {
  IntegrandOptions integrand;
  double truncation = 1e-10;
  long n_max_cap = 1'000'000;
  bool cache = true;
};

/// One evaluation of the landscape at (d, T).
struct LandscapePoint {
  double d = 0.0;
  double energy = 0.0;          // J
  double force = 0.0;           // N, > 0 repulsive
  double casimir_energy = 0.0;  // J
  double casimir_force = 0.0;   // N
  long n_terms = 0;
};

/// The landscape of a case at one temperature. Holds a reflection cache, so
/// evaluating many separations reuses reflection coefficients. Not
/// thread-safe; use one instance per thread.
class Landscape {
 public:
  Landscape(SuspensionCase c, double T, LandscapeOptions opt = {})
      : case_(std::move(c)), T_(T), opt_(opt), cache_(opt.cache) {
    validate(case_);
    if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("landscape: temperature must be >= 0");
    if (case_.gravity) weight_ = weight(*case_.gravity);
  }

  double temperature() const { return T_; }
  const SuspensionCase& suspension() const { return case_; }
  const ReflectionCache& cache() const { return cache_; }

  LandscapePoint at(double d) {
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("landscape: separation must be > 0");
    ThermalSpec th;
    th.T = T_;
    th.truncation = opt_.truncation;
    th.n_max_cap = opt_.n_max_cap;
    LifshitzResult r;
    try {
      r = lifshitz(equivalent_gap(case_, d), th, opt_.integrand, &cache_);
    } catch (const NumericalFailure& e) {
      std::ostringstream msg;
      msg << e.what() << " [T = " << T_ << " K, d = " << d << " m]";
      throw NumericalFailure(msg.str(), e.residual);
    }
    LandscapePoint p;
    p.d = d;
    p.n_terms = r.pressure.n_terms_used;
    if (case_.kind == SuspensionCase::Kind::plate) {
      p.casimir_energy = r.energy.value * case_.area;
      p.casimir_force = -r.pressure.value * case_.area;
      p.energy = p.casimir_energy + weight_ * d * case_.area;
      p.force = p.casimir_force - weight_ * case_.area;
    } else {
      const double two_pi_R = 2.0 * constants::pi * case_.sphere->R_outer;
      p.casimir_energy = two_pi_R * r.energy_integral.value;
      p.casimir_force = two_pi_R * r.energy.value;
      p.energy = p.casimir_energy + weight_ * d;
      p.force = p.casimir_force - weight_;
    }
    return p;
  }

  double energy(double d) { return at(d).energy; }
  double force(double d) { return at(d).force; }

 private:
  SuspensionCase case_;
  double T_;
  LandscapeOptions opt_;
  ReflectionCache cache_;
  double weight_ = 0.0;
};

/// Plate: [E(d, T) + delta_rho g h d] * area. Sphere (proximity force):
/// 2 pi R int_d^inf E(d', T) dd' + W d.
inline double total_energy(const SuspensionCase& c, double d, double T, const LandscapeOptions& opt = {}) {
  return Landscape(c, T, opt).energy(d);
}

/// -d(total_energy)/dd: plate (-P - delta_rho g h) * area, sphere 2 pi R E - W.
inline double total_force(const SuspensionCase& c, double d, double T, const LandscapeOptions& opt = {}) {
  return Landscape(c, T, opt).force(d);
}

/// Proximity-force Casimir energy of the sphere, 2 pi R_outer int_d^inf E dd'.
/// Separations above R_outer / 5 are outside the approximation's usual range;
/// `warning` is set when given.
inline double pfa_energy(const SuspensionCase& c, double d, double T, const LandscapeOptions& opt = {},
                         bool* warning = nullptr) {
  if (c.kind != SuspensionCase::Kind::sphere) throw DomainError("pfa_energy: case is not a sphere");
  validate(c);
  if (warning) *warning = d > c.sphere->R_outer / 5.0;
  return Landscape(c, T, opt).at(d).casimir_energy;
}

// ---------------------------------------------------------------------------
// Equilibria

enum class Stability { stable, unstable };

inline const char* to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

struct Equilibrium {
  double d_c = 0.0;
  Stability stability = Stability::stable;
  double T = 0.0;
};

struct DRange {
  double d_min = 10e-9;
  double d_max = 5e-6;
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && lo < hi) || n < 2) throw DomainError("log_grid: needs 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

namespace detail {

/// Bisection of a sign change of f on [a, b] (f(a) fa < 0 side) to relative
/// width rel_tol.
template <class F>
double bisect_root(F& f, double a, double b, double fa, double rel_tol) {
  for (int it = 0; it < 200 && (b - a) > rel_tol * a; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Golden-section maximization of g over [a, b] in log d.
template <class G>
std::pair<double, double> golden_max_log(G& g, double a, double b, double rel_tol = 1e-7) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double la = std::log(a);
  double lb = std::log(b);
  double l1 = lb - phi * (lb - la);
  double l2 = la + phi * (lb - la);
  double g1 = g(std::exp(l1));
  double g2 = g(std::exp(l2));
  while (lb - la > rel_tol) {
    if (g1 >= g2) {
      lb = l2;
      l2 = l1;
      g2 = g1;
      l1 = lb - phi * (lb - la);
      g1 = g(std::exp(l1));
    } else {
      la = l1;
      l1 = l2;
      g1 = g2;
      l2 = la + phi * (lb - la);
      g2 = g(std::exp(l2));
    }
  }
  return g1 >= g2 ? std::pair{std::exp(l1), g1} : std::pair{std::exp(l2), g2};
}

}  // namespace detail

struct EquilibriumOptions {
  double root_rel_tol = 1e-10;
  bool detect_tangent_pairs = true;
};

/// Equilibria of a force F(d) (> 0 repulsive) on a log-spaced scan of
/// `n_scan` points over the range, refined by bisection. Near-tangent root
/// pairs that fall between grid points are caught by maximizing -|F| around
/// local minima of |F|. Sorted ascending; stable/unstable alternate.
template <class ForceFn>
  requires std::invocable<ForceFn&, double>
std::vector<Equilibrium> find_equilibria(ForceFn&& force, double T, DRange range, int n_scan = 200,
                                         const EquilibriumOptions& opt = {}) {
  if (!(range.d_min > 0.0 && range.d_min < range.d_max)) throw DomainError("find_equilibria: needs 0 < d_min < d_max");
  if (n_scan < 16) throw DomainError("find_equilibria: n_scan must be >= 16");
  auto F = [&](double d) { return static_cast<double>(force(d)); };
  const std::vector<double> grid = log_grid(range.d_min, range.d_max, n_scan);
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = F(grid[i]);

  std::vector<Equilibrium> out;
  auto add_crossing = [&](double a, double b, double fa) {
    const double d = detail::bisect_root(F, a, b, fa, opt.root_rel_tol);
    out.push_back({d, fa > 0.0 ? Stability::stable : Stability::unstable, T});
  };
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double fa = f[i];
    const double fb = f[i + 1];
    if (fa == 0.0) {
      // Exact zero on a grid node: a crossing if the neighbours differ in sign.
      if (i > 0 && f[i - 1] != 0.0 && fb != 0.0 && (f[i - 1] > 0.0) != (fb > 0.0))
        out.push_back({grid[i], f[i - 1] > 0.0 ? Stability::stable : Stability::unstable, T});
      continue;
    }
    if (fb != 0.0 && (fa > 0.0) != (fb > 0.0)) {
      add_crossing(grid[i], grid[i + 1], fa);
      continue;
    }
    if (opt.detect_tangent_pairs && i > 0 && fb != 0.0 && f[i - 1] != 0.0 && (f[i - 1] > 0.0) == (fa > 0.0) &&
        (fa > 0.0) == (fb > 0.0) && std::abs(fa) < std::abs(f[i - 1]) && std::abs(fa) <= std::abs(fb)) {
      const double s = fa > 0.0 ? -1.0 : 1.0;
      auto g = [&](double d) { return s * F(d); };
      const auto [dm, gm] = detail::golden_max_log(g, grid[i - 1], grid[i + 1], 1e-9);
      if (gm > 0.0) {
        add_crossing(grid[i - 1], dm, f[i - 1]);
        add_crossing(dm, grid[i + 1], -f[i - 1]);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Equilibrium& a, const Equilibrium& b) { return a.d_c < b.d_c; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].stability == out[i - 1].stability)
      throw NumericalFailure("find_equilibria: stability does not alternate near d = " + std::to_string(out[i].d_c) +
                                 " m (unresolved roots between scan points)",
                             out[i].d_c - out[i - 1].d_c);
  }
  return out;
}

/// Equilibria of a case at temperature T.
inline std::vector<Equilibrium> find_equilibria(const SuspensionCase& c, double T, DRange range, int n_scan = 200,
                                                const LandscapeOptions& lopt = {},
                                                const EquilibriumOptions& opt = {}) {
  Landscape ls(c, T, lopt);
  return find_equilibria([&](double d) { return ls.force(d); }, T, range, n_scan, opt);
}

// ---------------------------------------------------------------------------
// Temperature continuation

struct BranchSample {
  double T = 0.0;
  double d_c = 0.0;
};

struct Branch {
  int id = 0;
  Stability stability = Stability::stable;
  std::vector<BranchSample> samples;  // ascending T
};

struct Bifurcation {
  double T_c = 0.0;
  double d_merge = 0.0;
  int branch_a = -1;  // stable member
  int branch_b = -1;  // unstable member
  bool annihilates_upward = true;  // pair exists below T_c and vanishes above
  double force_residual = 0.0;     // |F(d_merge)| / force scale at the refined T
  double slope_residual = 0.0;     // |dF/dd| d_merge / force scale
  bool tangent = false;            // both residuals below SweepOptions::tangency_tol
};

struct SweepOptions {
  DRange d_range;
  int n_scan = 200;
  int workers = 1;
  double T_tol = 1e-3;            // bisection width for T_c, K
  double pair_penalty = 0.3;      // continuation cost of a birth/death pair, in |ln d| units
  double edge_penalty = 0.6;      // cost of a single equilibrium entering/leaving
  double tangency_tol = 1e-3;
  EquilibriumOptions equilibria;
};

struct SweepResult {
  std::vector<double> T;
  std::vector<std::vector<Equilibrium>> equilibria;  // per T
  std::vector<Branch> branches;
  std::vector<Bifurcation> bifurcations;
};

namespace detail {

enum class Step { match, drop_prev_pair, add_next_pair, drop_prev, add_next };

/// Edit-distance alignment of two sorted equilibrium lists. Matches keep the
/// stability label and cost |ln(d_a / d_b)|; adjacent pairs may vanish or
/// appear together (a bifurcation), single points only cross the scan range.
inline std::vector<std::pair<Step, std::pair<int, int>>> align(const std::vector<Equilibrium>& a,
                                                              const std::vector<Equilibrium>& b,
                                                              const SweepOptions& opt) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(m + 1, inf));
  std::vector<std::vector<Step>> how(n + 1, std::vector<Step>(m + 1, Step::match));
  cost[0][0] = 0.0;
  auto relax = [&](int i, int j, double c, Step s) {
    if (c < cost[i][j]) {
      cost[i][j] = c;
      how[i][j] = s;
    }
  };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) continue;
      if (i > 0 && j > 0 && a[i - 1].stability == b[j - 1].stability)
        relax(i, j, cost[i - 1][j - 1] + std::abs(std::log(a[i - 1].d_c / b[j - 1].d_c)), Step::match);
      if (i > 1) relax(i, j, cost[i - 2][j] + opt.pair_penalty, Step::drop_prev_pair);
      if (j > 1) relax(i, j, cost[i][j - 2] + opt.pair_penalty, Step::add_next_pair);
      if (i > 0 && (i == 1 || i == n)) relax(i, j, cost[i - 1][j] + opt.edge_penalty, Step::drop_prev);
      if (j > 0 && (j == 1 || j == m)) relax(i, j, cost[i][j - 1] + opt.edge_penalty, Step::add_next);
    }
  }
  if (!std::isfinite(cost[n][m])) throw NumericalFailure("sweep: cannot align equilibria between temperatures", 0.0);
  std::vector<std::pair<Step, std::pair<int, int>>> path;
  int i = n;
  int j = m;
  while (i > 0 || j > 0) {
    const Step s = how[i][j];
    path.push_back({s, {i, j}});
    switch (s) {
      case Step::match: --i; --j; break;
      case Step::drop_prev_pair: i -= 2; break;
      case Step::add_next_pair: j -= 2; break;
      case Step::drop_prev: --i; break;
      case Step::add_next: --j; break;
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

struct PairEvent {
  double T_lo = 0.0;        // temperature of the sample bracketing the event from below
  double T_hi = 0.0;
  double d_a = 0.0;         // the pair at the temperature where it exists
  double d_b = 0.0;
  int branch_stable = -1;
  int branch_unstable = -1;
  bool exists_at_lo = true;
};

}  // namespace detail

/// Result of refining one pair event: T_c, merge separation and tangency.
struct PairRefinement {
  double T_c = 0.0;
  double d_merge = 0.0;
  double force_residual = 0.0;
  double slope_residual = 0.0;
};

/// Locates where an adjacent (stable, unstable) pair ceases to exist between
/// T_exist and T_gone. `at_T(T)` returns a force callable. Existence is
/// max over the window of s * F(d) > 0, with s the sign of F between the
/// two roots.
template <class Factory>
PairRefinement refine_pair(Factory& at_T, double T_exist, double T_gone, double d_a, double d_b, double T_tol) {
  const double lo = 0.8 * std::min(d_a, d_b);
  const double hi = 1.25 * std::max(d_a, d_b);
  double s = 0.0;
  auto probe = [&](double T, double* d_at, double* scale) {
    auto force = at_T(T);
    auto f = [&](double d) { return static_cast<double>(force(d)); };
    if (s == 0.0) s = f(std::sqrt(d_a * d_b)) > 0.0 ? 1.0 : -1.0;
    const std::vector<double> grid = log_grid(lo, hi, 33);
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    double fmax = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = s * f(grid[i]);
      fmax = std::max(fmax, std::abs(v));
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    auto g = [&](double d) { return s * f(d); };
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[std::min(best + 1, grid.size() - 1)];
    const auto [dm, gm] = detail::golden_max_log(g, a, b, 1e-9);
    if (d_at) *d_at = dm;
    if (scale) *scale = fmax;
    return gm;
  };
  double d_last = std::sqrt(d_a * d_b);
  double scale = 1.0;
  probe(T_exist, &d_last, &scale);
  double t_ex = T_exist;
  double t_gone = T_gone;
  while (std::abs(t_gone - t_ex) > T_tol) {
    const double mid = 0.5 * (t_ex + t_gone);
    double dm = 0.0;
    double sc = 0.0;
    if (probe(mid, &dm, &sc) > 0.0) {
      t_ex = mid;
      d_last = dm;
      scale = sc;
    } else {
      t_gone = mid;
    }
  }
  PairRefinement r;
  r.T_c = 0.5 * (t_ex + t_gone);
  r.d_merge = d_last;
  // Tangency at the last existing temperature: F and dF/dd both small.
  auto force = at_T(t_ex);
  const double h = 1e-4 * d_last;
  const double f0 = force(d_last);
  const double fp = force(d_last + h);
  const double fm = force(d_last - h);
  const double denom = scale > 0.0 ? scale : 1.0;
  r.force_residual = std::abs(f0) / denom;
  r.slope_residual = std::abs((fp - fm) / (2.0 * h)) * d_last / denom;
  return r;
}

/// Continuation over an ascending temperature grid. `at_T(T)` must return a
/// force callable F(d) and be safe to call concurrently (each call builds
/// its own evaluator).
template <class Factory>
  requires std::invocable<Factory&, double>
SweepResult sweep_temperature(Factory&& at_T, const std::vector<double>& T_grid, const SweepOptions& opt) {
  if (T_grid.empty()) throw DomainError("sweep: temperature grid is empty");
  for (std::size_t i = 1; i < T_grid.size(); ++i)
    if (!(T_grid[i] > T_grid[i - 1])) throw DomainError("sweep: temperature grid must increase strictly");
  SweepResult res;
  res.T = T_grid;
  res.equilibria = parallel_map(T_grid.size(), opt.workers, [&](std::size_t k) {
    auto force = at_T(T_grid[k]);
    try {
      return find_equilibria(force, T_grid[k], opt.d_range, opt.n_scan, opt.equilibria);
    } catch (const NumericalFailure& e) {
      std::ostringstream msg;
      msg << e.what() << " [sweep T = " << T_grid[k] << " K]";
      throw NumericalFailure(msg.str(), e.residual);
    }
  });

  // Continuation: link equilibria of consecutive temperatures.
  std::vector<int> live;  // branch id per equilibrium of the previous temperature
  std::vector<detail::PairEvent> events;
  auto open_branch = [&](const Equilibrium& e) {
    Branch b;
    b.id = static_cast<int>(res.branches.size());
    b.stability = e.stability;
    b.samples.push_back({e.T, e.d_c});
    res.branches.push_back(b);
    return b.id;
  };
  for (const auto& e : res.equilibria[0]) live.push_back(open_branch(e));
  for (std::size_t k = 1; k < T_grid.size(); ++k) {
    const auto& prev = res.equilibria[k - 1];
    const auto& next = res.equilibria[k];
    std::vector<int> now(next.size(), -1);
    for (const auto& [step, ij] : detail::align(prev, next, opt)) {
      const auto [i, j] = ij;
      switch (step) {
        case detail::Step::match:
          now[j - 1] = live[i - 1];
          res.branches[live[i - 1]].samples.push_back({next[j - 1].T, next[j - 1].d_c});
          break;
        case detail::Step::drop_prev_pair: {
          const auto& x = prev[i - 2];
          const auto& y = prev[i - 1];
          detail::PairEvent ev{T_grid[k - 1], T_grid[k], x.d_c, y.d_c, -1, -1, true};
          ev.branch_stable = x.stability == Stability::stable ? live[i - 2] : live[i - 1];
          ev.branch_unstable = x.stability == Stability::stable ? live[i - 1] : live[i - 2];
          events.push_back(ev);
          break;
        }
        case detail::Step::add_next_pair: {
          now[j - 2] = open_branch(next[j - 2]);
          now[j - 1] = open_branch(next[j - 1]);
          const auto& x = next[j - 2];
          detail::PairEvent ev{T_grid[k - 1], T_grid[k], x.d_c, next[j - 1].d_c, -1, -1, false};
          ev.branch_stable = x.stability == Stability::stable ? now[j - 2] : now[j - 1];
          ev.branch_unstable = x.stability == Stability::stable ? now[j - 1] : now[j - 2];
          events.push_back(ev);
          break;
        }
        case detail::Step::drop_prev:
          break;
        case detail::Step::add_next:
          now[j - 1] = open_branch(next[j - 1]);
          break;
      }
    }
    live = std::move(now);
  }

  const auto refined = parallel_map(events.size(), opt.workers, [&](std::size_t i) {
    const auto& ev = events[i];
    const double T_exist = ev.exists_at_lo ? ev.T_lo : ev.T_hi;
    const double T_gone = ev.exists_at_lo ? ev.T_hi : ev.T_lo;
    return refine_pair(at_T, T_exist, T_gone, ev.d_a, ev.d_b, opt.T_tol);
  });
  for (std::size_t i = 0; i < events.size(); ++i) {
    Bifurcation b;
    b.T_c = refined[i].T_c;
    b.d_merge = refined[i].d_merge;
    b.branch_a = events[i].branch_stable;
    b.branch_b = events[i].branch_unstable;
    b.annihilates_upward = events[i].exists_at_lo;
    b.force_residual = refined[i].force_residual;
    b.slope_residual = refined[i].slope_residual;
    b.tangent = b.force_residual < opt.tangency_tol && b.slope_residual < opt.tangency_tol;
    res.bifurcations.push_back(b);
  }
  std::sort(res.bifurcations.begin(), res.bifurcations.end(),
            [](const Bifurcation& a, const Bifurcation& b) { return a.T_c < b.T_c; });
  return res;
}

/// Sweep of a suspension case. Each temperature gets its own landscape and
/// reflection cache.
inline SweepResult sweep_temperature(const SuspensionCase& c, const std::vector<double>& T_grid,
                                     const SweepOptions& opt, const LandscapeOptions& lopt = {}) {
  validate(c);
  auto at_T = [&](double T) {
    auto ls = std::make_shared<Landscape>(c, T, lopt);
    return [ls](double d) { return ls->force(d); };
  };
  return sweep_temperature(at_T, T_grid, opt);
}

/// Uniform grid T_min, T_min + dT, ..., up to T_max.
inline std::vector<double> temperature_grid(double T_min, double T_max, double dT) {
  if (!(dT > 0.0)) throw DomainError("temperature grid: dT must be > 0");
  if (!(T_min <= T_max)) throw DomainError("temperature grid: T_min must not exceed T_max");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((T_max - T_min) / dT + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(T_min + static_cast<double>(i) * dT);
  return g;
}

struct SlopeResult {
  double slope = 0.0;  // m/K
  bool one_sided = false;
};

/// dd_c/dT on the branch grid: central difference at interior samples,
/// one-sided (flagged) at the ends, the bracketing secant between samples.
inline SlopeResult branch_slope(const Branch& b, double T) {
  const auto& s = b.samples;
  if (s.size() < 2) throw DomainError("branch_slope: branch needs at least two samples");
  if (T < s.front().T || T > s.back().T) throw DomainError("branch_slope: T outside the branch");
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s[i].T - T) <= tol) {
      if (i == 0) return {(s[1].d_c - s[0].d_c) / (s[1].T - s[0].T), true};
      if (i + 1 == s.size()) return {(s[i].d_c - s[i - 1].d_c) / (s[i].T - s[i - 1].T), true};
      return {(s[i + 1].d_c - s[i - 1].d_c) / (s[i + 1].T - s[i - 1].T), false};
    }
  }
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i].T < T && T < s[i + 1].T) return {(s[i + 1].d_c - s[i].d_c) / (s[i + 1].T - s[i].T), false};
  throw DomainError("branch_slope: T not bracketed");
}

}  // namespace casilift
