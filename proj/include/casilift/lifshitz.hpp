#pragma once

// Finite-temperature Matsubara sums and zero-temperature frequency integrals
// of the Lifshitz densities. Pressure > 0 is attractive; energy per area < 0
// is binding and vanishes as d -> infinity.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "casilift/constants.hpp"
#include "casilift/errors.hpp"
#include "casilift/quadrature.hpp"
#include "casilift/stratified.hpp"

namespace casilift {

struct ThermalSpec {
  double T = 300.0;            // K
  double truncation = 1e-10;   // relative tail tolerance
  long n_max_cap = 1'000'000;  // safety cap on Matsubara terms
  double low_T_crossover = 1.0;  // below this T (K) the T = 0 integral is used
  double envelope_guard = 1e-6;  // the mirror envelope must decay this far before stopping
};

enum class SpectralPath { matsubara_sum, zero_temperature_integral };

inline const char* to_string(SpectralPath p) {
  return p == SpectralPath::matsubara_sum ? "matsubara_sum" : "zero_temperature_integral";
}

struct SpectralResult {
  double value = 0.0;         // Pa or J/m^2
  long n_terms_used = 0;      // highest Matsubara index included
  double tail_estimate = 0.0;  // same units as value
  SpectralPath path = SpectralPath::matsubara_sum;
};

/// All Lifshitz quantities from one pass over the frequencies. The energy
/// integral int_d^inf E(d') dd' is in J/m.
struct LifshitzResult {
  SpectralResult pressure;
  SpectralResult energy;
  SpectralResult energy_integral;
};

inline void validate(const ThermalSpec& th) {
  if (!(th.T >= 0.0) || !std::isfinite(th.T)) throw DomainError("temperature must be >= 0");
  if (!(th.truncation > 0.0 && th.truncation < 1.0)) throw DomainError("truncation tolerance must lie in (0, 1)");
  if (th.n_max_cap < 1) throw DomainError("Matsubara term cap must be >= 1");
  if (!(th.envelope_guard > 0.0 && th.envelope_guard < 1.0)) throw DomainError("envelope guard must lie in (0, 1)");
}

/// xi_n = 2 pi n k_B T / hbar.
inline double matsubara_xi(double T, long n) {
  if (!(T > 0.0)) throw DomainError("matsubara_xi: T must be > 0");
  if (n < 0) throw DomainError("matsubara_xi: n must be >= 0");
  return 2.0 * constants::pi * static_cast<double>(n) * constants::k_B * T / constants::hbar;
}

/// h [f(0)/2 + sum_{n=1}^{n_last} f(n h)].
template <class F>
double trapezoid_rule(F&& f, double h, long n_last) {
  double s = 0.5 * f(0.0);
  for (long n = 1; n <= n_last; ++n) s += f(static_cast<double>(n) * h);
  return h * s;
}

namespace detail {

inline double geometric_tail(double cur, double prev) {
  if (cur == 0.0) return 0.0;
  if (!(cur < prev)) return std::numeric_limits<double>::infinity();
  const double q = cur / prev;
  return cur * q / (1.0 - q);
}

/// int_x^inf t^2 / (e^t - 1) dt: the ideal-mirror decay envelope of the
/// integrand in x = 2 kappa_f d.
inline double mirror_envelope(double x) {
  if (x < 0.5) {
    const double x2 = x * x;
    const double head = x2 / 2.0 - x2 * x / 6.0 + x2 * x2 / 48.0 - x2 * x2 * x2 / 4320.0 + x2 * x2 * x2 * x2 / 241920.0;
    return 2.0 * constants::zeta3 - head;
  }
  double s = 0.0;
  for (int j = 1; j < 200; ++j) {
    const double e = std::exp(-j * x);
    const double term = e * (x * x / j + 2.0 * x / (j * j) + 2.0 / (j * j * j));
    s += term;
    if (term < 1e-17 * s) break;
  }
  return s;
}

/// Root panels in x = 2 d xi / c: [0, 1/64] then doublings up to 64.
inline std::vector<quadrature::Panel> xi_panels() {
  std::vector<quadrature::Panel> roots;
  roots.push_back({0.0, 1.0 / 64.0, quadrature::root_key(-7)});
  for (int k = -6; k < 6; ++k) roots.push_back({std::ldexp(1.0, k), std::ldexp(1.0, k + 1), quadrature::root_key(k)});
  return roots;
}

}  // namespace detail

/// Zero-temperature integrals F(0) = int_0^inf f(xi) dxi of both densities,
/// to relative tolerance `tol`.
inline LifshitzResult lifshitz_T0(const GapGeometry& g, double tol = 1e-9, const IntegrandOptions& opt = {}) {
  validate(g);
  if (!(tol > 0.0)) throw DomainError("zero-temperature integral: tolerance must be > 0");
  const double scale = constants::c / (2.0 * g.separation);  // xi per unit x
  auto eval = [&](const quadrature::Panel& p) {
    const double mid = 0.5 * (p.a + p.b);
    const double half = 0.5 * (p.b - p.a);
    std::array<std::array<double, 21>, 3> f{};
    for (int i = 0; i < 21; ++i) {
      const IntegrandValue v = frequency_integrand(g, scale * (mid + half * quadrature::gk21::node(i)), opt);
      f[0][i] = v.pressure;
      f[1][i] = v.energy;
      f[2][i] = v.energy_integral;
    }
    quadrature::EstimateN<3> out;
    for (int c = 0; c < 3; ++c) {
      const auto e = quadrature::gk21_apply(f[c], half);
      out.value[c] = e.value * scale;
      out.error[c] = e.error * scale;
    }
    return out;
  };
  quadrature::ResultN<3> r;
  try {
    r = quadrature::integrate_panels_n<3>(detail::xi_panels(), eval, {tol, 0.0, 2000});
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string("zero-temperature frequency integral: ") + e.what(), e.residual);
  }
  LifshitzResult out;
  out.pressure = {r.value[0], 0, r.error[0], SpectralPath::zero_temperature_integral};
  out.energy = {r.value[1], 0, r.error[1], SpectralPath::zero_temperature_integral};
  out.energy_integral = {r.value[2], 0, r.error[2], SpectralPath::zero_temperature_integral};
  return out;
}

/// F(T) = (2 pi k_B T / hbar) [f(0)/2 + sum_{n>=1} f(xi_n)] for pressure and
/// energy together. The sum stops once the geometric tail estimate of every
/// series, and of the ideal-mirror envelope in the same fluid, has stayed
/// below truncation * |partial sum| for three consecutive, monotonically
/// decaying terms. Below th.low_T_crossover the T = 0 integral
/// is returned instead.
inline LifshitzResult lifshitz(const GapGeometry& g, const ThermalSpec& th, const IntegrandOptions& opt = {},
                               ReflectionCache* cache = nullptr) {
  validate(g);
  validate(th);
  if (th.T < th.low_T_crossover) return lifshitz_T0(g, 1e-9, opt);

  auto parts = [](const IntegrandValue& v) { return std::array<double, 3>{v.pressure, v.energy, v.energy_integral}; };
  const double pref = 2.0 * constants::pi * constants::k_B * th.T / constants::hbar;
  const std::array<double, 3> f0 = parts(frequency_integrand(g, 0.0, opt, cache));
  std::array<double, 3> sum{};
  std::array<double, 3> prev{};
  std::array<double, 3> tail{};
  for (int c = 0; c < 3; ++c) {
    sum[c] = 0.5 * f0[c];
    prev[c] = std::abs(f0[c]);
  }
  // A smooth majorant runs alongside the series: where the materials'
  // permittivities cross, f has a double zero that the ratio test alone
  // mistakes for convergence at low T.
  auto envelope = [&](double xi) {
    return detail::mirror_envelope(2.0 * g.separation * xi * std::sqrt(permittivity(g.fluid, xi)) / constants::c);
  };
  double env_sum = 0.5 * envelope(0.0);
  double env_prev = 2.0 * env_sum;
  int settled = 0;
  long n = 1;
  for (;; ++n) {
    if (n > th.n_max_cap)
      throw NumericalFailure("Matsubara sum exceeded " + std::to_string(th.n_max_cap) + " terms at T = " +
                                 std::to_string(th.T) + " K, d = " + std::to_string(g.separation) + " m",
                             pref * std::max({tail[0], tail[1], tail[2]}));
    const double xi = matsubara_xi(th.T, n);
    const std::array<double, 3> f = parts(frequency_integrand(g, xi, opt, cache));
    bool ok = true;
    for (int c = 0; c < 3; ++c) {
      sum[c] += f[c];
      const double cur = std::abs(f[c]);
      tail[c] = detail::geometric_tail(cur, prev[c]);
      prev[c] = cur;
      ok = ok && tail[c] <= th.truncation * std::abs(sum[c]);
    }
    const double env = envelope(xi);
    env_sum += env;
    ok = ok && detail::geometric_tail(env, env_prev) <= th.envelope_guard * env_sum;
    env_prev = env;
    settled = ok ? settled + 1 : 0;
    if (settled >= 3) break;
  }
  LifshitzResult out;
  out.pressure = {pref * sum[0], n, pref * tail[0], SpectralPath::matsubara_sum};
  out.energy = {pref * sum[1], n, pref * tail[1], SpectralPath::matsubara_sum};
  out.energy_integral = {pref * sum[2], n, pref * tail[2], SpectralPath::matsubara_sum};
  return out;
}

inline SpectralResult pressure(const GapGeometry& g, const ThermalSpec& th, const IntegrandOptions& opt = {},
                               ReflectionCache* cache = nullptr) {
  return lifshitz(g, th, opt, cache).pressure;
}

inline SpectralResult free_energy_area(const GapGeometry& g, const ThermalSpec& th, const IntegrandOptions& opt = {},
                                       ReflectionCache* cache = nullptr) {
  return lifshitz(g, th, opt, cache).energy;
}

inline double pressure_T0(const GapGeometry& g, double tol = 1e-9, const IntegrandOptions& opt = {}) {
  return lifshitz_T0(g, tol, opt).pressure.value;
}

inline double free_energy_area_T0(const GapGeometry& g, double tol = 1e-9, const IntegrandOptions& opt = {}) {
  return lifshitz_T0(g, tol, opt).energy.value;
}

/// pressure(T) - pressure_T0: the discretization error of the Matsubara
/// trapezoid relative to the T = 0 integral.
inline double temperature_correction(const GapGeometry& g, double T, double tol = 1e-10,
                                     const IntegrandOptions& opt = {}) {
  if (!(T > 0.0)) throw DomainError("temperature_correction: T must be > 0");
  ThermalSpec th;
  th.T = T;
  th.low_T_crossover = 0.0;
  return pressure(g, th, opt).value - pressure_T0(g, tol, opt);
}

}  // namespace casilift
