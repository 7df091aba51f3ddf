#pragma once

// Relative permittivities on the imaginary-frequency axis, eps(i*xi).
// Frequencies are angular, rad/s, throughout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "casilift/constants.hpp"
#include "casilift/errors.hpp"

namespace casilift {

struct ConstantModel {
  double eps = 1.0;
};

/// One Lorentz term C * w^2 / (w^2 + xi^2 + g * xi).
struct OscillatorTerm {
  double strength = 0.0;  // C, dimensionless
  double omega = 0.0;     // resonance, rad/s
  double damping = 0.0;   // g, rad/s
};

struct OscillatorModel {
  double eps_inf = 1.0;
  std::vector<OscillatorTerm> terms;

  double operator()(double xi) const {
    double eps = eps_inf;
    for (const auto& t : terms) {
      const double w2 = t.omega * t.omega;
      eps += t.strength * w2 / (w2 + xi * xi + t.damping * xi);
    }
    return eps;
  }

  /// Sum rule eps(0) = eps_inf + sum C_j.
  double static_value() const {
    double eps = eps_inf;
    for (const auto& t : terms) eps += t.strength;
    return eps;
  }
};

/// Free-carrier response on top of a bound-charge background:
/// eps(i xi) = background(xi) + omega_p^2 / (xi (xi + gamma)).
struct DrudeModel {
  OscillatorModel background;
  double omega_p = 0.0;
  double gamma = 0.0;
};

/// Measured eps(i xi) samples, interpolated linearly in (log xi, log eps).
/// Below the first node and above the last one the end values are held.
struct TabulatedModel {
  std::vector<std::pair<double, double>> points;  // (xi rad/s, eps)

  double operator()(double xi) const {
    const auto& p = points;
    if (xi <= p.front().first) return p.front().second;
    if (xi >= p.back().first) return p.back().second;
    auto hi = std::upper_bound(p.begin(), p.end(), xi, [](double x, const auto& node) { return x < node.first; });
    auto lo = hi - 1;
    if (lo->first == xi) return lo->second;
    const double t = std::log(xi / lo->first) / std::log(hi->first / lo->first);
    return std::exp(std::log(lo->second) + t * std::log(hi->second / lo->second));
  }
};

/// Ideal mirror, eps = infinity at every frequency. Used for analytic checks.
struct PerfectConductorModel {};

using MaterialModel = std::variant<ConstantModel, DrudeModel, OscillatorModel, TabulatedModel, PerfectConductorModel>;

struct Material {
  std::string name;
  MaterialModel model;
};

inline bool is_metallic(const Material& m) {
  return std::holds_alternative<DrudeModel>(m.model) || std::holds_alternative<PerfectConductorModel>(m.model);
}

inline bool is_perfect_conductor(const Material& m) { return std::holds_alternative<PerfectConductorModel>(m.model); }

namespace detail {
inline void require(bool ok, const std::string& material, const std::string& what) {
  if (!ok) throw DomainError("material '" + material + "': " + what);
}

inline void validate_oscillators(const OscillatorModel& o, const std::string& name) {
  require(std::isfinite(o.eps_inf) && o.eps_inf >= 1.0, name, "eps_inf must be >= 1");
  for (const auto& t : o.terms) {
    require(std::isfinite(t.strength) && t.strength > 0.0, name, "oscillator strength must be > 0");
    require(std::isfinite(t.omega) && t.omega > 0.0, name, "oscillator frequency must be > 0");
    require(std::isfinite(t.damping) && t.damping >= 0.0, name, "oscillator damping must be >= 0");
  }
}
}  // namespace detail

/// Checks the model invariants; throws DomainError naming the material.
inline void validate(const Material& m) {
  const std::string& name = m.name;
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, ConstantModel>) {
          detail::require(std::isfinite(model.eps) && model.eps >= 1.0, name, "constant eps must be >= 1");
        } else if constexpr (std::is_same_v<T, OscillatorModel>) {
          detail::validate_oscillators(model, name);
        } else if constexpr (std::is_same_v<T, DrudeModel>) {
          detail::validate_oscillators(model.background, name);
          detail::require(std::isfinite(model.omega_p) && model.omega_p > 0.0, name, "omega_p must be > 0");
          detail::require(std::isfinite(model.gamma) && model.gamma > 0.0, name, "gamma must be > 0");
        } else if constexpr (std::is_same_v<T, TabulatedModel>) {
          detail::require(model.points.size() >= 2, name, "table needs at least 2 points");
          for (std::size_t i = 0; i < model.points.size(); ++i) {
            const auto [xi, eps] = model.points[i];
            detail::require(std::isfinite(xi) && xi > 0.0, name, "table frequencies must be > 0");
            detail::require(std::isfinite(eps) && eps >= 1.0, name, "table eps values must be >= 1");
            if (i > 0) detail::require(xi > model.points[i - 1].first, name, "table frequencies must increase strictly");
          }
        }
      },
      m.model);
}

/// eps(i xi). Drude materials at xi = 0 throw StaticMetalError; a perfect
/// conductor returns +infinity for xi > 0.
inline double permittivity(const Material& m, double xi) {
  if (!(xi >= 0.0)) throw DomainError("permittivity: imaginary frequency must be >= 0");
  return std::visit(
      [&](const auto& model) -> double {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, ConstantModel>) {
          return model.eps;
        } else if constexpr (std::is_same_v<T, OscillatorModel>) {
          return model(xi);
        } else if constexpr (std::is_same_v<T, DrudeModel>) {
          if (xi == 0.0) throw StaticMetalError("material '" + m.name + "' is metallic at xi = 0");
          return model.background(xi) + model.omega_p * model.omega_p / (xi * (xi + model.gamma));
        } else if constexpr (std::is_same_v<T, TabulatedModel>) {
          return model(xi);
        } else {
          if (xi == 0.0) throw StaticMetalError("material '" + m.name + "' is metallic at xi = 0");
          return std::numeric_limits<double>::infinity();
        }
      },
      m.model);
}

/// Zero-frequency response: either a finite eps(0) or the metallic tag.
struct StaticResponse {
  bool metallic = false;
  double eps = 0.0;  // meaningful only when !metallic
};

inline StaticResponse static_limit(const Material& m) {
  if (is_metallic(m)) return {true, 0.0};
  if (const auto* o = std::get_if<OscillatorModel>(&m.model)) return {false, o->static_value()};
  return {false, permittivity(m, 0.0)};
}

/// Drude parameters of a doped semiconductor. rho_d in cm^-3, m_eff in kg,
/// mobility in m^2/(V s).
inline DrudeModel drude_from_doping(double rho_d_cm3, double m_eff_kg, double mobility, OscillatorModel background) {
  if (!(rho_d_cm3 > 0.0) || !(m_eff_kg > 0.0) || !(mobility > 0.0))
    throw DomainError("drude_from_doping: density, effective mass and mobility must be > 0");
  using namespace constants;
  const double n = rho_d_cm3 * 1e6;
  DrudeModel d;
  d.background = std::move(background);
  d.omega_p = std::sqrt(n * e_charge * e_charge / (epsilon_0 * m_eff_kg));
  d.gamma = e_charge / (m_eff_kg * mobility);
  return d;
}

/// T = hbar xi / (2 pi k_B): the temperature whose first Matsubara frequency is xi.
inline double matsubara_temperature(double xi) {
  return constants::hbar * xi / (2.0 * constants::pi * constants::k_B);
}

struct TabulationRow {
  double xi = 0.0;
  double eps = 0.0;
  double matsubara_K = 0.0;
};

inline std::vector<TabulationRow> tabulate(const Material& m, const std::vector<double>& xi_grid) {
  std::vector<TabulationRow> rows;
  rows.reserve(xi_grid.size());
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    if (i > 0 && !(xi_grid[i] >= xi_grid[i - 1])) throw DomainError("tabulate: frequency grid must be sorted ascending");
    const double xi = xi_grid[i];
    if (xi == 0.0 && is_metallic(m)) throw StaticMetalError("tabulate: material '" + m.name + "' is metallic at xi = 0");
    const double eps = xi == 0.0 ? static_limit(m).eps : permittivity(m, xi);
    rows.push_back({xi, eps, matsubara_temperature(xi)});
  }
  return rows;
}

}  // namespace casilift
