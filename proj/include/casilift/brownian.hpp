#pragma once

// Equilibrium Boltzmann statistics of a suspended body over a total-energy
// landscape U(d): mean separation, equal-tail 95% interval, barriers and
// stiction factors. The density is p(d) ~ exp(-U(d) / k_B T).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "casilift/constants.hpp"
#include "casilift/errors.hpp"
#include "casilift/landscape.hpp"

namespace casilift {

/// Callable returning (U in J, F in N) at a separation.
template <class Fn>
concept EnergyForceFn = std::is_invocable_r_v<std::pair<double, double>, Fn&, double>;

enum class BasinPolicy { suspension_basin, full_range };

struct BoltzmannDomain {
  double d_lo = 10e-9;
  double d_hi = 5e-6;
  BasinPolicy policy = BasinPolicy::suspension_basin;
};

struct BoltzmannOptions {
  double resolution_kT = 0.01;  // max change of U between density samples
  double interp_tol_kT = 1e-6;  // landscape interpolation tolerance
  int initial_intervals = 64;
  int max_nodes = 20000;
  double cutoff_kT = 30.0;      // basin edge where U - U_min exceeds this
  int n_scan = 200;             // equilibrium scan inside the domain
};

struct BoltzmannStats {
  double mean_d = 0.0;         // m
  double q025 = 0.0;           // m
  double q975 = 0.0;           // m
  double normalization = 0.0;  // int exp(-(U - U_min)/kT) dd / (d_hi - d_lo)
  double U_min = 0.0;          // J, lowest sampled energy on the domain
  double barrier_in = 0.0;     // kT units, toward contact (infinity without an inner barrier)
  double landscape_T = 0.0;
  double ensemble_T = 0.0;
  double d_lo = 0.0;           // integration domain actually used
  double d_hi = 0.0;
  double d_stable = 0.0;       // basin minimum (suspension_basin), else argmin of U
};

/// exp(-barrier) with a flag for results below the normal double range.
struct StictionFactor {
  double value = 1.0;
  bool underflow = false;
};

/// Relative stiction-rate factor exp(-barrier). This is a proportionality
/// only: no attempt frequency or hydrodynamic prefactor is included.
inline StictionFactor stiction_exponent(double barrier_kT) {
  if (!(barrier_kT >= 0.0)) throw DomainError("stiction_exponent: barrier must be >= 0");
  const double v = std::exp(-barrier_kT);
  if (v < std::numeric_limits<double>::min()) return {0.0, true};
  return {v, false};
}

/// Energy and force samples of a landscape with cubic Hermite interpolation
/// between them (the force is the exact derivative, F = -dU/dd).
class LandscapeSample {
 public:
  struct Node {
    double d;
    double U;
    double F;
  };

  LandscapeSample() = default;
  explicit LandscapeSample(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<Node>& nodes() const { return nodes_; }
  double lo() const { return nodes_.front().d; }
  double hi() const { return nodes_.back().d; }

  /// Interpolated U on the interval starting at node i.
  double on_interval(std::size_t i, double z) const {
    const Node& a = nodes_[i];
    const Node& b = nodes_[i + 1];
    const double h = b.d - a.d;
    const double t = (z - a.d) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * a.U + h10 * h * (-a.F) + h01 * b.U + h11 * h * (-b.F);
  }

  double operator()(double z) const {
    if (z <= lo()) return nodes_.front().U;
    if (z >= hi()) return nodes_.back().U;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z, [](double x, const Node& n) { return x < n.d; });
    return on_interval(static_cast<std::size_t>(it - nodes_.begin()) - 1, z);
  }

 private:
  std::vector<Node> nodes_;
};

/// Samples U and F = -U' on [lo, hi]: a uniform start grid, then bisection
/// wherever the Hermite prediction at a midpoint misses by more than tol_J.
template <class EnergyForce>
LandscapeSample sample_landscape(EnergyForce&& uf, double lo, double hi, double tol_J, int initial_intervals,
                                 int max_nodes) {
  if (!(lo < hi)) throw DomainError("sample_landscape: needs lo < hi");
  using Node = LandscapeSample::Node;
  auto eval = [&](double d) {
    const std::pair<double, double> v = uf(d);
    return Node{d, v.first, v.second};
  };
  std::vector<Node> nodes;
  for (int i = 0; i <= initial_intervals; ++i)
    nodes.push_back(eval(i == initial_intervals ? hi : lo + (hi - lo) * i / initial_intervals));
  std::vector<Node> out{nodes.front()};
  // Depth-first refinement keeps the output ordered.
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    std::vector<std::pair<Node, Node>> stack{{nodes[i], nodes[i + 1]}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      const Node m = eval(0.5 * (a.d + b.d));
      if (static_cast<int>(out.size()) + static_cast<int>(stack.size()) > max_nodes)
        throw NumericalFailure("sample_landscape: node budget exhausted", std::abs(b.d - a.d));
      LandscapeSample pair({a, b});
      const double err = std::abs(pair.on_interval(0, m.d) - m.U);
      if (err > tol_J && (b.d - a.d) > 1e-12 * std::max(std::abs(a.d), 1e-12)) {
        stack.push_back({m, b});
        stack.push_back({a, m});
      } else {
        out.push_back(m);
        out.push_back(b);
      }
    }
  }
  return LandscapeSample(std::move(out));
}

namespace detail {

/// Gauss-Legendre 5-point nodes and weights on [-1, 1].
inline constexpr std::array<double, 5> gl5_x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                                0.9061798459386640};
inline constexpr std::array<double, 5> gl5_w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                0.4786286704993665, 0.2369268850561891};

struct DensityCell {
  double a, b;
  double ua, ub;  // (U - U_ref) / kT at the ends
  double mass;
  double moment;  // int (z - z_ref) p dz
};

/// Cells on [lo, hi] where U changes by at most `res` kT, with Gauss-Legendre
/// mass and first moment of exp(-(U - U_ref)/kT).
inline std::vector<DensityCell> density_cells(const LandscapeSample& s, double lo, double hi, double kT, double U_ref,
                                              double z_ref, double res) {
  std::vector<DensityCell> cells;
  auto u = [&](double z) { return (s(z) - U_ref) / kT; };
  const auto& nodes = s.nodes();
  std::vector<double> cuts{lo};
  for (const auto& n : nodes)
    if (n.d > lo && n.d < hi) cuts.push_back(n.d);
  cuts.push_back(hi);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    std::vector<std::pair<double, double>> stack{{cuts[i], cuts[i + 1]}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      const double ua = u(a);
      const double ub = u(b);
      const double um = u(0.5 * (a + b));
      if ((std::abs(ub - ua) > res || std::abs(um - 0.5 * (ua + ub)) > res) && (b - a) > 1e-14 * std::abs(b)) {
        const double m = 0.5 * (a + b);
        stack.push_back({m, b});
        stack.push_back({a, m});
        continue;
      }
      DensityCell c{a, b, ua, ub, 0.0, 0.0};
      const double half = 0.5 * (b - a);
      const double mid = 0.5 * (a + b);
      for (int k = 0; k < 5; ++k) {
        const double z = mid + half * gl5_x[k];
        const double w = gl5_w[k] * half * std::exp(-u(z));
        c.mass += w;
        c.moment += w * (z - z_ref);
      }
      cells.push_back(c);
    }
  }
  return cells;
}

/// Position inside a cell where the exp-linear cumulative reaches `frac` of
/// the cell mass.
inline double invert_cell(const DensityCell& c, double frac) {
  const double lam = c.ub - c.ua;
  double t = frac;
  if (std::abs(lam) > 1e-12) t = -std::log1p(-frac * (-std::expm1(-lam))) / lam;
  return c.a + std::clamp(t, 0.0, 1.0) * (c.b - c.a);
}

}  // namespace detail

/// Statistics over [lo, hi] of a sampled landscape at temperature T (K).
inline BoltzmannStats stats_on_interval(const LandscapeSample& s, double lo, double hi, double T,
                                        const BoltzmannOptions& opt = {}) {
  if (!(T > 0.0)) throw DomainError("boltzmann: ensemble temperature must be > 0");
  if (!(lo < hi)) throw DomainError("boltzmann: empty domain");
  const double kT = constants::k_B * T;
  double U_min = std::numeric_limits<double>::infinity();
  double d_min = lo;
  for (const auto& n : s.nodes()) {
    if (n.d >= lo && n.d <= hi && n.U < U_min) {
      U_min = n.U;
      d_min = n.d;
    }
  }
  for (double z : {lo, hi}) {
    if (s(z) < U_min) {
      U_min = s(z);
      d_min = z;
    }
  }
  const double z_ref = 0.5 * (lo + hi);
  const auto cells = detail::density_cells(s, lo, hi, kT, U_min, z_ref, opt.resolution_kT);
  double Z = 0.0;
  double M = 0.0;
  for (const auto& c : cells) {
    Z += c.mass;
    M += c.moment;
  }
  if (!(Z > 0.0) || !std::isfinite(Z)) throw DomainError("boltzmann: density is not normalizable on the domain");
  BoltzmannStats st;
  st.mean_d = z_ref + M / Z;
  st.normalization = Z / (hi - lo);
  st.U_min = U_min;
  st.ensemble_T = T;
  st.d_lo = lo;
  st.d_hi = hi;
  st.d_stable = d_min;
  auto quantile = [&](double p) {
    const double target = p * Z;
    double acc = 0.0;
    for (const auto& c : cells) {
      if (acc + c.mass >= target) return detail::invert_cell(c, (target - acc) / c.mass);
      acc += c.mass;
    }
    return hi;
  };
  st.q025 = quantile(0.025);
  st.q975 = quantile(0.975);
  return st;
}

/// Suspension basin of a landscape: the outermost stable equilibrium,
/// bounded by its neighbouring unstable equilibria, and cut where U exceeds
/// the basin minimum by cutoff_kT.
struct Basin {
  Equilibrium stable;
  std::optional<Equilibrium> inner;
  std::optional<Equilibrium> outer;
};

inline Basin suspension_basin(const std::vector<Equilibrium>& eq) {
  std::optional<std::size_t> s;
  for (std::size_t i = 0; i < eq.size(); ++i)
    if (eq[i].stability == Stability::stable) s = i;
  if (!s) throw DomainError("boltzmann: the landscape has no stable equilibrium in the domain");
  Basin b;
  b.stable = eq[*s];
  if (*s > 0) b.inner = eq[*s - 1];
  if (*s + 1 < eq.size()) b.outer = eq[*s + 1];
  return b;
}

namespace detail {

/// Outward search from `from` towards `limit` for the first place where
/// U - U0 exceeds `rise`; returns `limit` if it never does.
template <class Energy>
double rise_point(Energy& U, double from, double limit, double U0, double rise) {
  const int n = 64;
  double prev = from;
  for (int i = 1; i <= n; ++i) {
    const double z = from * std::pow(limit / from, static_cast<double>(i) / n);
    if (U(z) - U0 > rise) {
      double a = prev;
      double b = z;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        if (U(m) - U0 > rise) b = m;
        else a = m;
      }
      return b;
    }
    prev = z;
  }
  return limit;
}

}  // namespace detail

/// A landscape prepared for Boltzmann averages at one or more ensemble
/// temperatures: basin located once, energies sampled once.
class BoltzmannLandscape {
 public:
  /// `uf(d)` returns (U in J, F in N). `T_max` bounds the ensemble
  /// temperatures to be used, which sets how far the 30 kT cutoff reaches.
  template <EnergyForceFn EnergyForce>
  BoltzmannLandscape(EnergyForce&& uf, double landscape_T, BoltzmannDomain domain, double T_min, double T_max,
                     const BoltzmannOptions& opt = {})
      : landscape_T_(landscape_T), opt_(opt), policy_(domain.policy) {
    if (!(domain.d_lo > 0.0 && domain.d_lo < domain.d_hi)) throw DomainError("boltzmann: needs 0 < d_lo < d_hi");
    if (!(T_min > 0.0 && T_min <= T_max)) throw DomainError("boltzmann: ensemble temperatures must be > 0");
    auto U = [&](double d) { return uf(d).first; };
    double lo = domain.d_lo;
    double hi = domain.d_hi;
    if (domain.policy == BasinPolicy::suspension_basin) {
      auto F = [&](double d) { return uf(d).second; };
      const auto eq = find_equilibria(F, landscape_T, DRange{domain.d_lo, domain.d_hi}, opt.n_scan);
      const Basin b = suspension_basin(eq);
      stable_ = b.stable;
      const double U0 = U(b.stable.d_c);
      const double rise = opt.cutoff_kT * constants::k_B * T_max;
      const double inner_limit = b.inner ? b.inner->d_c : domain.d_lo;
      const double outer_limit = b.outer ? b.outer->d_c : domain.d_hi;
      lo = detail::rise_point(U, b.stable.d_c, inner_limit, U0, rise);
      hi = detail::rise_point(U, b.stable.d_c, outer_limit, U0, rise);
      if (b.inner) barrier_in_J_ = U(b.inner->d_c) - U0;
    }
    sample_ = sample_landscape(uf, lo, hi, opt.interp_tol_kT * constants::k_B * T_min, opt.initial_intervals,
                               opt.max_nodes);
  }

  double landscape_T() const { return landscape_T_; }
  const LandscapeSample& sample() const { return sample_; }
  std::optional<Equilibrium> stable() const { return stable_; }

  BoltzmannStats at(double ensemble_T) const {
    double lo = sample_.lo();
    double hi = sample_.hi();
    if (policy_ == BasinPolicy::suspension_basin) {
      // Tighten to this temperature's cutoff.
      const double U0 = sample_(stable_->d_c);
      const double rise = opt_.cutoff_kT * constants::k_B * ensemble_T;
      auto U = [&](double d) { return sample_(d); };
      lo = detail::rise_point(U, stable_->d_c, lo, U0, rise);
      hi = detail::rise_point(U, stable_->d_c, hi, U0, rise);
    }
    BoltzmannStats st = stats_on_interval(sample_, lo, hi, ensemble_T, opt_);
    st.landscape_T = landscape_T_;
    st.barrier_in = barrier_in_J_ ? *barrier_in_J_ / (constants::k_B * ensemble_T)
                                  : std::numeric_limits<double>::infinity();
    if (stable_) st.d_stable = stable_->d_c;
    return st;
  }

 private:
  double landscape_T_;
  BoltzmannOptions opt_;
  BasinPolicy policy_;
  LandscapeSample sample_;
  std::optional<Equilibrium> stable_;
  std::optional<double> barrier_in_J_;
};

/// Generic form: `uf(d)` returns (U, F) of the landscape at landscape_T.
template <EnergyForceFn EnergyForce>
BoltzmannStats boltzmann_stats(EnergyForce&& uf, double landscape_T, double ensemble_T, BoltzmannDomain domain,
                               const BoltzmannOptions& opt = {}) {
  return BoltzmannLandscape(uf, landscape_T, domain, ensemble_T, ensemble_T, opt).at(ensemble_T);
}

namespace detail {
inline auto energy_force(Landscape& ls) {
  return [&ls](double d) {
    const LandscapePoint p = ls.at(d);
    return std::pair<double, double>{p.energy, p.force};
  };
}
}  // namespace detail

inline BoltzmannStats boltzmann_stats(const SuspensionCase& c, double landscape_T, double ensemble_T,
                                      BoltzmannDomain domain, const BoltzmannOptions& opt = {},
                                      const LandscapeOptions& lopt = {}) {
  Landscape ls(c, landscape_T, lopt);
  return boltzmann_stats(detail::energy_force(ls), landscape_T, ensemble_T, domain, opt);
}

/// Mean separation with the landscape frozen at frozen_T while the Boltzmann
/// factor uses each ensemble temperature.
inline std::vector<std::pair<double, double>> counterfactual_mean(const SuspensionCase& c, double frozen_T,
                                                                  const std::vector<double>& ensemble_T,
                                                                  BoltzmannDomain domain,
                                                                  const BoltzmannOptions& opt = {},
                                                                  const LandscapeOptions& lopt = {}) {
  std::vector<std::pair<double, double>> out;
  if (ensemble_T.empty()) return out;
  const auto [tmin, tmax] = std::minmax_element(ensemble_T.begin(), ensemble_T.end());
  Landscape ls(c, frozen_T, lopt);
  const BoltzmannLandscape bl(detail::energy_force(ls), frozen_T, domain, *tmin, *tmax, opt);
  for (double T : ensemble_T) out.emplace_back(T, bl.at(T).mean_d);
  return out;
}

struct Barrier {
  double toward_contact = std::numeric_limits<double>::infinity();  // kT units
  double toward_escape = std::numeric_limits<double>::infinity();   // kT units
};

/// Barriers around the outermost stable equilibrium, in units of k_B T.
template <EnergyForceFn EnergyForce>
Barrier barrier(EnergyForce&& uf, double T, DRange range = {}, int n_scan = 200) {
  if (!(T > 0.0)) throw DomainError("barrier: T must be > 0");
  auto F = [&](double d) { return uf(d).second; };
  const Basin b = suspension_basin(find_equilibria(F, T, range, n_scan));
  const double kT = constants::k_B * T;
  const double U0 = uf(b.stable.d_c).first;
  Barrier out;
  if (b.inner) out.toward_contact = (uf(b.inner->d_c).first - U0) / kT;
  if (b.outer) out.toward_escape = (uf(b.outer->d_c).first - U0) / kT;
  return out;
}

inline Barrier barrier(const SuspensionCase& c, double T, DRange range = {}, int n_scan = 200,
                       const LandscapeOptions& lopt = {}) {
  Landscape ls(c, T, lopt);
  return barrier(detail::energy_force(ls), T, range, n_scan);
}

}  // namespace casilift
