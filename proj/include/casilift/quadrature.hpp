#pragma once

// Adaptive Gauss-Kronrod (10-point Gauss, 21-point Kronrod) quadrature over root
// panels. Panels carry an integer key that encodes their position in the
// bisection tree, so callers can memoize integrand data per panel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "casilift/errors.hpp"

namespace casilift::quadrature {

namespace gk21 {
// Abscissae of the 21-point Kronrod rule on [-1, 1] (positive half, descending;
// the odd entries are the 10-point Gauss nodes).
inline constexpr std::array<double, 11> xgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> wgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980029535, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> wg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline constexpr int n_nodes = 21;

/// Node i in [0, 21): nodes 0..9 are -xgk[i], node 10 is the centre, nodes
/// 11..20 are +xgk[20 - i].
inline constexpr double node(int i) { return i < 10 ? -xgk[i] : (i == 10 ? 0.0 : xgk[20 - i]); }
}  // namespace gk21

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Applies the 21-point rule to precomputed samples f(mid + half * node(i)).
inline Estimate gk21_apply(const std::array<double, 21>& f, double half) {
  const double fc = f[10];
  double resk = fc * gk21::wgk[10];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (int j = 0; j < 10; ++j) {
    const double f1 = f[j];
    const double f2 = f[20 - j];
    resk += gk21::wgk[j] * (f1 + f2);
    resabs += gk21::wgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += gk21::wg[j / 2] * (f1 + f2);
  }
  const double reskh = resk * 0.5;
  double resasc = gk21::wgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j)
    resasc += gk21::wgk[j] * (std::abs(f[j] - reskh) + std::abs(f[20 - j] - reskh));

  Estimate out;
  out.value = resk * half;
  resasc *= std::abs(half);
  resabs *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  out.error = err;
  return out;
}

struct Panel {
  double a = 0.0;
  double b = 0.0;
  std::uint64_t key = 0;
};

// Panel keys: root id (20 bits, offset by 2^19) | depth (6 bits) | position
// within the level (38 bits). Bisection depth is therefore capped at 38.
inline constexpr int max_depth = 38;

/// Children of a panel in the bisection tree.
inline std::array<Panel, 2> split(const Panel& p) {
  const double mid = 0.5 * (p.a + p.b);
  const std::uint64_t root = p.key >> 44;
  const std::uint64_t depth = (p.key >> 38) & 0x3Fu;
  const std::uint64_t pos = p.key & ((std::uint64_t{1} << 38) - 1);
  const std::uint64_t child_base = (root << 44) | ((depth + 1) << 38);
  return {Panel{p.a, mid, child_base | (pos << 1)}, Panel{mid, p.b, child_base | ((pos << 1) | 1u)}};
}

inline std::uint64_t root_key(std::int64_t root_id) {
  return static_cast<std::uint64_t>(root_id + (std::int64_t{1} << 19)) << 44;
}

inline int depth_of(std::uint64_t key) { return static_cast<int>((key >> 38) & 0x3Fu); }

struct Tolerance {
  double rel = 1e-9;
  double abs = 0.0;
  int max_panels = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  int evaluations = 0;
};

/// Vector-valued estimate for integrating several integrands on shared nodes.
template <std::size_t N>
struct EstimateN {
  std::array<double, N> value{};
  std::array<double, N> error{};
};

template <std::size_t N>
struct ResultN {
  std::array<double, N> value{};
  std::array<double, N> error{};
  int panels = 0;
  int evaluations = 0;
};

/// Globally adaptive integration over root panels. `eval(panel)` returns an
/// EstimateN for that panel. The panel whose error is largest relative to its
/// component's target is bisected until every component meets
/// max(rel * |total|, abs). Throws NumericalFailure otherwise.
template <std::size_t N, class EvalPanel>
ResultN<N> integrate_panels_n(const std::vector<Panel>& roots, EvalPanel&& eval, const Tolerance& tol) {
  struct Item {
    Panel panel;
    EstimateN<N> est;
    double weight = 0.0;
  };
  std::vector<Item> items;
  ResultN<N> res;
  std::array<double, N> total{};
  std::array<double, N> total_err{};
  auto add = [&](const Panel& p) {
    Item it{p, eval(p), 0.0};
    ++res.evaluations;
    for (std::size_t c = 0; c < N; ++c) {
      total[c] += it.est.value[c];
      total_err[c] += it.est.error[c];
    }
    items.push_back(it);
  };
  for (const auto& p : roots) add(p);

  while (true) {
    std::array<double, N> target{};
    bool done = true;
    for (std::size_t c = 0; c < N; ++c) {
      target[c] = std::max(tol.rel * std::abs(total[c]), tol.abs);
      if (total_err[c] > target[c]) done = false;
    }
    if (done) break;
    double worst_err = 0.0;
    for (std::size_t c = 0; c < N; ++c) worst_err = std::max(worst_err, total_err[c] / target[c]);
    if (static_cast<int>(items.size()) >= tol.max_panels)
      throw NumericalFailure("adaptive quadrature exceeded panel budget", worst_err);
    std::size_t worst = 0;
    double worst_w = -1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      double w = 0.0;
      for (std::size_t c = 0; c < N; ++c) w = std::max(w, items[i].est.error[c] / target[c]);
      if (w > worst_w || (w == worst_w && items[i].panel.key < items[worst].panel.key)) {
        worst_w = w;
        worst = i;
      }
    }
    if (depth_of(items[worst].panel.key) >= max_depth)
      throw NumericalFailure("adaptive quadrature reached maximum bisection depth", worst_err);
    const Item victim = items[worst];
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(worst));
    for (std::size_t c = 0; c < N; ++c) {
      total[c] -= victim.est.value[c];
      total_err[c] -= victim.est.error[c];
    }
    for (const Panel& child : split(victim.panel)) add(child);
  }
  // Re-sum in key order: the running totals carry cancellation error and
  // depend on refinement history.
  std::sort(items.begin(), items.end(), [](const Item& l, const Item& r) { return l.panel.key < r.panel.key; });
  for (const auto& it : items) {
    for (std::size_t c = 0; c < N; ++c) {
      res.value[c] += it.est.value[c];
      res.error[c] += it.est.error[c];
    }
  }
  res.panels = static_cast<int>(items.size());
  return res;
}

/// Scalar form of integrate_panels_n.
template <class EvalPanel>
Result integrate_panels(const std::vector<Panel>& roots, EvalPanel&& eval, const Tolerance& tol) {
  auto wrapped = [&](const Panel& p) {
    const Estimate e = eval(p);
    EstimateN<1> out;
    out.value[0] = e.value;
    out.error[0] = e.error;
    return out;
  };
  const ResultN<1> r = integrate_panels_n<1>(roots, wrapped, tol);
  return Result{r.value[0], r.error[0], r.panels, r.evaluations};
}

/// Convenience wrapper: adaptive GK21 of a plain function over root panels.
template <class F>
Result integrate(F&& f, const std::vector<Panel>& roots, const Tolerance& tol) {
  auto eval = [&](const Panel& p) {
    const double mid = 0.5 * (p.a + p.b);
    const double half = 0.5 * (p.b - p.a);
    std::array<double, 21> v{};
    for (int i = 0; i < gk21::n_nodes; ++i) v[i] = f(mid + half * gk21::node(i));
    return gk21_apply(v, half);
  };
  return integrate_panels(roots, eval, tol);
}

/// Root panels that split [a, b] into n equal pieces.
inline std::vector<Panel> uniform_panels(double a, double b, int n) {
  std::vector<Panel> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double lo = a + (b - a) * i / n;
    const double hi = (i + 1 == n) ? b : a + (b - a) * (i + 1) / n;
    out.push_back({lo, hi, root_key(i)});
  }
  return out;
}

}  // namespace casilift::quadrature
