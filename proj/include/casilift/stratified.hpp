#pragma once

// Planar layered bodies on the imaginary-frequency axis: Fresnel coefficients,
// multilayer reflection, and the per-frequency Lifshitz integrands.
//
// Sign conventions: pressure density f_P > 0 is attractive, energy density
// f_E < 0 is binding.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "casilift/constants.hpp"
#include "casilift/errors.hpp"
#include "casilift/material.hpp"
#include "casilift/quadrature.hpp"

namespace casilift {

enum class Polarization { TE, TM };

struct Layer {
  Material material;
  double thickness = 0.0;  // m
};

/// One side of a gap: layers ordered from the gap outwards, then a half-space.
struct Stack {
  std::vector<Layer> layers;
  Material terminal;
};

struct GapGeometry {
  Stack left;
  Stack right;
  Material fluid;
  double separation = 0.0;  // m
};

inline void validate(const Stack& s) {
  for (const auto& l : s.layers) {
    if (!(l.thickness > 0.0) || !std::isfinite(l.thickness))
      throw DomainError("layer of '" + l.material.name + "' needs a finite positive thickness");
  }
}

inline void validate(const GapGeometry& g) {
  if (!(g.separation > 0.0) || !std::isfinite(g.separation)) throw DomainError("gap separation must be > 0");
  if (is_metallic(g.fluid)) throw DomainError("gap fluid '" + g.fluid.name + "' must be non-metallic");
  validate(g.left);
  validate(g.right);
}

/// kappa = sqrt(k^2 + eps xi^2 / c^2), 1/m.
inline double kappa(double eps, double xi, double k) {
  if (xi == 0.0 && k == 0.0) throw DomainError("kappa: xi and k cannot both vanish");
  if (!(xi >= 0.0) || !(k >= 0.0)) throw DomainError("kappa: xi and k must be >= 0");
  const double q = xi / constants::c;
  return std::sqrt(k * k + eps * q * q);
}

/// Single-interface coefficient for a wave in medium "in" hitting medium "out".
/// eps_out = +infinity is an ideal mirror (TE -> -1, TM -> +1).
inline double fresnel(Polarization p, double eps_in, double kappa_in, double eps_out, double kappa_out) {
  if (std::isinf(eps_out)) return p == Polarization::TE ? -1.0 : 1.0;
  if (p == Polarization::TE) return (kappa_in - kappa_out) / (kappa_in + kappa_out);
  return (eps_out * kappa_in - eps_in * kappa_out) / (eps_out * kappa_in + eps_in * kappa_out);
}

/// +1 (attractive) unless the fluid permittivity lies strictly between the
/// two bodies', in which case -1 (repulsive). Metals pass +infinity.
inline int predict_sign(double eps1, double eps_fluid, double eps2) {
  if ((eps1 < eps_fluid && eps_fluid < eps2) || (eps2 < eps_fluid && eps_fluid < eps1)) return -1;
  return 1;
}

struct ReflectionPair {
  double te = 0.0;
  double tm = 0.0;
};

namespace detail {

/// A stack sampled at one frequency. Medium 0 is the fluid; the last medium
/// is the terminal half-space, or the first ideal/static metal encountered.
struct SideProfile {
  std::vector<double> eps;
  std::vector<double> shift;      // (eps_i - eps_fluid) xi^2 / c^2
  std::vector<double> thickness;  // thickness[i] for layer media, 0 otherwise
  double q2 = 0.0;                // xi^2 / c^2
  bool mirror_end = false;        // last medium reflects as an ideal mirror
  bool static_limit = false;      // xi == 0: TE vanishes, kappa_i = k
};

inline SideProfile sample_side(const Stack& s, const Material& fluid, double xi) {
  SideProfile out;
  if (xi == 0.0) {
    out.static_limit = true;
    const StaticResponse f = casilift::static_limit(fluid);
    out.eps.push_back(f.eps);
    auto push = [&](const Material& m, double t) {
      const StaticResponse r = casilift::static_limit(m);
      if (r.metallic) {
        out.mirror_end = true;
        out.eps.push_back(std::numeric_limits<double>::infinity());
        out.thickness.push_back(0.0);
        return false;
      }
      out.eps.push_back(r.eps);
      out.thickness.push_back(t);
      return true;
    };
    out.thickness.push_back(0.0);
    bool open = true;
    for (const auto& l : s.layers)
      if (open) open = push(l.material, l.thickness);
    if (open) push(s.terminal, 0.0);
    out.shift.assign(out.eps.size(), 0.0);
    return out;
  }
  const double q2 = (xi / constants::c) * (xi / constants::c);
  out.q2 = q2;
  const double eps_f = permittivity(fluid, xi);
  out.eps.push_back(eps_f);
  out.thickness.push_back(0.0);
  auto push = [&](const Material& m, double t) {
    if (is_perfect_conductor(m)) {
      out.mirror_end = true;
      out.eps.push_back(std::numeric_limits<double>::infinity());
      out.thickness.push_back(0.0);
      return false;
    }
    out.eps.push_back(permittivity(m, xi));
    out.thickness.push_back(t);
    return true;
  };
  bool open = true;
  for (const auto& l : s.layers)
    if (open) open = push(l.material, l.thickness);
  if (open) push(s.terminal, 0.0);
  out.shift.resize(out.eps.size());
  for (std::size_t i = 0; i < out.eps.size(); ++i)
    out.shift[i] = std::isinf(out.eps[i]) ? 0.0 : (out.eps[i] - eps_f) * q2;
  return out;
}

/// Backward recursion from the far half-space, for both polarizations.
/// `kf2` is kappa_fluid^2.
inline ReflectionPair reflect(const SideProfile& p, double kf2) {
  const std::size_t m = p.eps.size();
  // Fixed-size scratch is enough for realistic stacks; fall back otherwise.
  std::array<double, 16> kbuf;
  std::vector<double> kvec;
  double* kap = kbuf.data();
  if (m > kbuf.size()) {
    kvec.resize(m);
    kap = kvec.data();
  }
  for (std::size_t i = 0; i < m; ++i) kap[i] = std::isinf(p.eps[i]) ? 0.0 : std::sqrt(kf2 + p.shift[i]);

  // Fresnel coefficients with the numerators factored: kappa_i^2 - kappa_j^2
  // = (eps_i - eps_j) xi^2 / c^2, so nearly matched media keep full relative
  // precision when k >> xi / c.
  auto interface = [&](std::size_t i, Polarization pol) {
    if (p.static_limit && pol == Polarization::TE) return 0.0;
    const double ei = p.eps[i], ej = p.eps[i + 1];
    if (std::isinf(ej)) return pol == Polarization::TE ? -1.0 : 1.0;
    if (pol == Polarization::TE) {
      const double sum = kap[i] + kap[i + 1];
      return (ei - ej) * p.q2 / (sum * sum);
    }
    // (e_i + e_j) k^2 + e_i e_j q^2, written with the kappa of the lower-eps
    // side so that the subtraction loses at most a factor 2.
    const double bracket = ei <= ej ? (ej + ei) * kap[i] * kap[i] - ei * ei * p.q2
                                    : (ej + ei) * kap[i + 1] * kap[i + 1] - ej * ej * p.q2;
    const double den = ej * kap[i] + ei * kap[i + 1];
    return (ej - ei) * bracket / (den * den);
  };
  ReflectionPair r;
  r.te = interface(m - 2, Polarization::TE);
  r.tm = interface(m - 2, Polarization::TM);
  for (std::size_t i = m - 2; i-- > 0;) {
    const double prop = std::exp(-2.0 * kap[i + 1] * p.thickness[i + 1]);
    const double rte = interface(i, Polarization::TE);
    const double rtm = interface(i, Polarization::TM);
    r.te = (rte + r.te * prop) / (1.0 + rte * r.te * prop);
    r.tm = (rtm + r.tm * prop) / (1.0 + rtm * r.tm * prop);
  }
  return r;
}

}  // namespace detail

/// Reflection coefficient of a layered half-space seen from the fluid, at
/// imaginary frequency xi > 0 and transverse wavenumber k.
inline double stack_reflection(const Stack& s, const Material& fluid, double xi, double k, Polarization p) {
  if (!(xi > 0.0)) throw DomainError("stack_reflection: xi must be > 0 (use zero_frequency_reflection)");
  const detail::SideProfile prof = detail::sample_side(s, fluid, xi);
  const double q = xi / constants::c;
  const double kf2 = k * k + prof.eps[0] * q * q;
  const ReflectionPair r = detail::reflect(prof, kf2);
  return p == Polarization::TE ? r.te : r.tm;
}

/// xi = 0 limit: every kappa equals k, TE vanishes, and the first metallic
/// medium reflects TM completely.
inline double zero_frequency_reflection(const Stack& s, const Material& fluid, double k, Polarization p) {
  if (!(k > 0.0)) throw DomainError("zero_frequency_reflection: k must be > 0");
  if (p == Polarization::TE) return 0.0;
  const detail::SideProfile prof = detail::sample_side(s, fluid, 0.0);
  return detail::reflect(prof, k * k).tm;
}

/// Memoized reflection products r_L r_R per (xi, quadrature node). Nodes of
/// the k-integration are independent of the separation, so one cache serves
/// every d of a fixed geometry template and frequency set. A disabled cache
/// only counts evaluations.
class ReflectionCache {
 public:
  explicit ReflectionCache(bool enabled = true, std::size_t max_blocks = 4'000'000 / 21)
      : enabled_(enabled), max_blocks_(max_blocks) {}

  using Block = std::array<ReflectionPair, 21>;

  bool enabled() const { return enabled_; }
  std::uint64_t evaluations() const { return evaluations_; }
  std::uint64_t hits() const { return hits_; }
  std::size_t blocks() const { return blocks_; }

  void clear() {
    map_.clear();
    blocks_ = 0;
  }

  /// Returns the cached block or fills it with `compute(i)` for each node.
  template <class Compute>
  const Block& get(double xi, std::uint64_t panel_key, Compute&& compute) {
    if (!enabled_) {
      fill(scratch_, compute);
      return scratch_;
    }
    auto& per_xi = map_[std::bit_cast<std::uint64_t>(xi)];
    auto it = per_xi.find(panel_key);
    if (it != per_xi.end()) {
      hits_ += 21;
      return it->second;
    }
    if (blocks_ >= max_blocks_) {
      fill(scratch_, compute);
      return scratch_;
    }
    Block& b = per_xi[panel_key];
    fill(b, compute);
    ++blocks_;
    return b;
  }

 private:
  template <class Compute>
  void fill(Block& b, Compute& compute) {
    for (int i = 0; i < 21; ++i) b[i] = compute(i);
    evaluations_ += 21;
  }

  bool enabled_;
  std::size_t max_blocks_;
  std::size_t blocks_ = 0;
  std::uint64_t evaluations_ = 0;
  std::uint64_t hits_ = 0;
  Block scratch_{};
  std::unordered_map<std::uint64_t, std::unordered_map<std::uint64_t, Block>> map_;
};

struct IntegrandOptions {
  double rel_tol = 1e-9;
  double abs_floor = 1e-25;   // on the dimensionless scaled integrals
  double x_low = 1e-5;        // lower cut of 2 kappa d when xi = 0
  double x_span = 50.0;       // upper cut: 2 (kappa - kappa_0) d
  int octaves_per_panel = 3;  // width of root panels in log2(kappa)
  int max_panels = 4000;
  double contact_guard = 1e-12;
};

/// Per-frequency Lifshitz densities: pressure (Pa s/rad), energy
/// (J s/(m^2 rad)), and the energy integrated over separation from d to
/// infinity (J s/(m rad)), which is what the proximity-force sphere needs.
struct IntegrandValue {
  double pressure = 0.0;
  double energy = 0.0;
  double energy_integral = 0.0;
};

namespace detail {

/// Li2(x) / x for x < 1, finite at x = 0.
inline double dilog_over_x(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) <= 0.5) {
    double sum = 1.0;
    double pw = 1.0;
    for (int k = 2; k < 200; ++k) {
      pw *= x;
      const double term = pw / (static_cast<double>(k) * k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  const double pi2_6 = constants::pi * constants::pi / 6.0;
  double li2 = 0.0;
  if (x > 0.5) {
    li2 = pi2_6 - (x < 1.0 ? std::log(x) * std::log1p(-x) : 0.0) - (1.0 - x) * dilog_over_x(1.0 - x);
  } else if (x >= -1.0) {
    const double z = x / (x - 1.0);
    const double l = std::log1p(-x);
    li2 = -z * dilog_over_x(z) - 0.5 * l * l;
  } else {
    const double l = std::log(-x);
    li2 = -pi2_6 - 0.5 * l * l - (1.0 / x) * dilog_over_x(1.0 / x);
  }
  return li2 / x;
}

}  // namespace detail

/// Dilogarithm Li2(x) for x <= 1.
inline double dilog(double x) {
  if (!(x <= 1.0)) throw DomainError("dilog: argument must be <= 1");
  return x * detail::dilog_over_x(x);
}

/// f_P(xi) = (hbar / 2 pi^2) int k dk kappa_f sum_p R e^{-2 kappa_f d} / (1 - R e^{-2 kappa_f d})
/// f_E(xi) = (hbar / 4 pi^2) int k dk sum_p ln(1 - R e^{-2 kappa_f d})
/// f_U(xi) = int_d^inf f_E dd' = -(hbar / 4 pi^2) int k dk sum_p Li2(R e^{-2 kappa_f d}) / (2 kappa_f)
/// with R = r_L r_R. The k-integral runs over ln(kappa_f) on a fixed
/// hierarchy of panels (root panels span `octaves_per_panel` octaves of
/// kappa in absolute units), so nodes do not depend on d.
inline IntegrandValue frequency_integrand(const GapGeometry& g, double xi, const IntegrandOptions& opt = {},
                                          ReflectionCache* cache = nullptr) {
  if (!(xi >= 0.0)) throw DomainError("frequency_integrand: xi must be >= 0");
  const double d = g.separation;
  const detail::SideProfile left = detail::sample_side(g.left, g.fluid, xi);
  const detail::SideProfile right = detail::sample_side(g.right, g.fluid, xi);
  const double eps_f = left.eps[0];
  const double kappa0 = std::sqrt(eps_f) * xi / constants::c;
  const double x0 = 2.0 * kappa0 * d;
  const double width = opt.octaves_per_panel * std::log(2.0);

  const double s_first = std::log(std::max(kappa0, opt.x_low / (2.0 * d)));
  const double s_last = std::log(kappa0 + opt.x_span / (2.0 * d));
  const auto j_first = static_cast<std::int64_t>(std::floor(s_first / width));
  const auto j_last = static_cast<std::int64_t>(std::floor(s_last / width));
  constexpr std::int64_t partial_tag = std::int64_t{1} << 18;

  std::vector<quadrature::Panel> roots;
  for (std::int64_t j = j_first; j <= j_last; ++j) {
    const double a = static_cast<double>(j) * width;
    const double b = static_cast<double>(j + 1) * width;
    if (xi > 0.0 && a < std::log(kappa0)) {
      roots.push_back({std::log(kappa0), b, quadrature::root_key(partial_tag + j)});
    } else {
      roots.push_back({a, b, quadrature::root_key(j)});
    }
  }

  auto reflection_at = [&](double s) {
    const double kf = std::exp(s);
    const double kf2 = kf * kf;
    const ReflectionPair l = detail::reflect(left, kf2);
    const ReflectionPair r = detail::reflect(right, kf2);
    return ReflectionPair{l.te * r.te, l.tm * r.tm};
  };

  ReflectionCache local(false);
  ReflectionCache& store = cache ? *cache : local;
  const double e_x0 = std::exp(-x0);

  auto eval = [&](const quadrature::Panel& p) {
    const double mid = 0.5 * (p.a + p.b);
    const double half = 0.5 * (p.b - p.a);
    const auto& block =
        store.get(xi, p.key, [&](int i) { return reflection_at(mid + half * quadrature::gk21::node(i)); });
    std::array<double, 21> fp{};
    std::array<double, 21> fe{};
    std::array<double, 21> fu{};
    for (int i = 0; i < 21; ++i) {
      const double x = 2.0 * d * std::exp(mid + half * quadrature::gk21::node(i));
      const double decay = std::exp(-(x - x0));
      double sp = 0.0;
      double se = 0.0;
      double su = 0.0;
      for (double rr : {block[i].te, block[i].tm}) {
        if (rr == 0.0) continue;
        const double y = rr * decay * e_x0;
        if (!(y < 1.0 - opt.contact_guard))
          throw NumericalFailure("Lifshitz integrand too close to the r_L r_R e^{-2 kappa d} = 1 pole", 1.0 - y);
        sp += rr * decay / (1.0 - y);
        se += rr * decay * (y == 0.0 ? -1.0 : std::log1p(-y) / y);
        su -= rr * decay * detail::dilog_over_x(y);
      }
      fp[i] = x * x * x * sp;
      fe[i] = x * x * se;
      fu[i] = x * su;
    }
    const quadrature::Estimate ep = quadrature::gk21_apply(fp, half);
    const quadrature::Estimate ee = quadrature::gk21_apply(fe, half);
    const quadrature::Estimate eu = quadrature::gk21_apply(fu, half);
    quadrature::EstimateN<3> out;
    out.value = {ep.value, ee.value, eu.value};
    out.error = {ep.error, ee.error, eu.error};
    return out;
  };

  const quadrature::ResultN<3> res =
      quadrature::integrate_panels_n<3>(roots, eval, {opt.rel_tol, opt.abs_floor, opt.max_panels});
  const double pref = constants::hbar / (16.0 * constants::pi * constants::pi * d * d);
  IntegrandValue v;
  v.pressure = pref / d * e_x0 * res.value[0];
  v.energy = pref * e_x0 * res.value[1];
  v.energy_integral = pref * d * e_x0 * res.value[2];
  return v;
}

}  // namespace casilift
