#pragma once

// Material library files (JSON).
//
//   {"materials": [
//     {"name": "ethanol", "model": "oscillators", "unit": "eV",
//      "eps_inf": 1.0, "terms": [{"C": 0.84, "omega": 11.4, "g": 0.0}]},
//     {"name": "gold", "model": "drude", "unit": "eV",
//      "omega_p": 9.0, "gamma": 0.035, "eps_background": 1.0},
//     {"name": "si_n", "model": "drude",
//      "doping": {"rho_d_cm3": 1e18, "m_eff_me": 0.26, "mobility_m2_Vs": 0.03},
//      "eps_background": {"eps_inf": 1.035, "terms": [{"C": 10.835, "omega": 6.6e15}]}},
//     {"name": "teflon", "model": "constant", "eps": 2.1},
//     {"name": "measured", "model": "table", "points": [[1e13, 3.0], [1e16, 1.5]]},
//     {"name": "mirror", "model": "perfect_conductor"}]}
//
// "unit" ("rad_s" default, or "eV") applies to every frequency-valued field.
// "source" and "note" strings are accepted and ignored.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "casilift/material.hpp"

namespace casilift {

using MaterialLibrary = std::map<std::string, Material>;

namespace detail {

using nlohmann::json;

inline int line_of(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

class EntryReader {
 public:
  EntryReader(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(ctx_ + ": field '" + field + "': " + what);
  }

  const json& at(const std::string& field) const {
    seen_.insert(field);
    if (!j_.contains(field)) fail(field, "missing");
    return j_.at(field);
  }

  bool has(const std::string& field) const { return j_.contains(field); }

  double number(const std::string& field) const {
    const json& v = at(field);
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& field, double fallback) const { return has(field) ? number(field) : fallback; }

  std::string string(const std::string& field) const {
    const json& v = at(field);
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  void reject_unknown(std::initializer_list<const char*> ignorable = {}) const {
    for (const char* f : ignorable) seen_.insert(f);
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
  }

  const std::string& context() const { return ctx_; }

 private:
  const json& j_;
  std::string ctx_;
  mutable std::set<std::string> seen_;
};

inline OscillatorModel read_oscillators(const EntryReader& r, double unit) {
  OscillatorModel o;
  o.eps_inf = r.number_or("eps_inf", 1.0);
  if (r.has("terms")) {
    const json& terms = r.at("terms");
    if (!terms.is_array()) r.fail("terms", "expected an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (!terms[i].is_object()) r.fail("terms", "entry " + std::to_string(i) + " is not an object");
      EntryReader t(terms[i], r.context() + ": terms[" + std::to_string(i) + "]");
      OscillatorTerm term;
      term.strength = t.number("C");
      term.omega = t.number("omega") * unit;
      term.damping = t.number_or("g", 0.0) * unit;
      t.reject_unknown();
      o.terms.push_back(term);
    }
  }
  return o;
}

inline Material read_material(const json& j, std::size_t index) {
  if (!j.is_object()) throw ConfigError("materials[" + std::to_string(index) + "]: expected an object");
  const std::string base = "materials[" + std::to_string(index) + "]";
  EntryReader head(j, base);
  const std::string name = head.string("name");
  EntryReader r(j, base + " ('" + name + "')");
  r.string("name");
  const std::string model = r.string("model");

  double unit = 1.0;
  if (r.has("unit")) {
    const std::string u = r.string("unit");
    if (u == "eV") unit = constants::eV_to_rad_s;
    else if (u != "rad_s") r.fail("unit", "expected \"rad_s\" or \"eV\", got \"" + u + "\"");
  }

  Material m;
  m.name = name;
  if (model == "constant") {
    m.model = ConstantModel{r.number("eps")};
  } else if (model == "oscillators") {
    m.model = read_oscillators(r, unit);
  } else if (model == "drude") {
    DrudeModel d;
    if (r.has("eps_background")) {
      const json& bg = r.at("eps_background");
      if (bg.is_number()) {
        d.background.eps_inf = bg.get<double>();
      } else if (bg.is_object()) {
        EntryReader b(bg, r.context() + ": eps_background");
        d.background = read_oscillators(b, unit);
        b.reject_unknown();
      } else {
        r.fail("eps_background", "expected a number or an oscillator object");
      }
    }
    if (r.has("doping")) {
      if (r.has("omega_p") || r.has("gamma")) r.fail("doping", "give either doping or omega_p/gamma, not both");
      const json& dj = r.at("doping");
      if (!dj.is_object()) r.fail("doping", "expected an object");
      EntryReader dr(dj, r.context() + ": doping");
      const double rho = dr.number("rho_d_cm3");
      double m_eff = 0.0;
      if (dr.has("m_eff_me")) m_eff = dr.number("m_eff_me") * constants::m_e;
      else m_eff = dr.number("m_eff_kg");
      const double mobility = dr.number("mobility_m2_Vs");
      dr.reject_unknown();
      try {
        d = drude_from_doping(rho, m_eff, mobility, d.background);
      } catch (const DomainError& e) {
        r.fail("doping", e.what());
      }
    } else {
      d.omega_p = r.number("omega_p") * unit;
      d.gamma = r.number("gamma") * unit;
    }
    m.model = d;
  } else if (model == "table") {
    TabulatedModel t;
    const json& pts = r.at("points");
    if (!pts.is_array()) r.fail("points", "expected an array of [xi, eps] pairs");
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        r.fail("points", "expected [xi, eps] number pairs");
      t.points.emplace_back(p[0].get<double>() * unit, p[1].get<double>());
    }
    m.model = std::move(t);
  } else if (model == "perfect_conductor") {
    m.model = PerfectConductorModel{};
  } else {
    r.fail("model", "unknown model tag \"" + model + "\"");
  }
  r.reject_unknown({"source", "note"});
  validate(m);
  return m;
}

inline json oscillators_to_json(const OscillatorModel& o) {
  json terms = json::array();
  for (const auto& t : o.terms) terms.push_back({{"C", t.strength}, {"omega", t.omega}, {"g", t.damping}});
  return {{"eps_inf", o.eps_inf}, {"terms", terms}};
}

}  // namespace detail

/// Parses library text. `origin` names the source in error messages.
inline MaterialLibrary parse_material_library(const std::string& text, const std::string& origin = "<string>") {
  MaterialLibrary lib;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return lib;
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
  if (!root.contains("materials")) return lib;
  const auto& arr = root.at("materials");
  if (!arr.is_array()) throw ConfigError(origin + ": 'materials' must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Material m;
    try {
      m = detail::read_material(arr[i], i);
    } catch (const DomainError& e) {
      throw ConfigError(origin + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
    if (lib.count(m.name)) throw ConfigError(origin + ": duplicate material name '" + m.name + "'");
    lib.emplace(m.name, std::move(m));
  }
  return lib;
}

inline MaterialLibrary load_material_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open material library '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_material_library(ss.str(), path);
}

/// Serializes with all frequencies in rad/s; reloading reproduces every model exactly.
inline std::string dump_material_library(const MaterialLibrary& lib) {
  using nlohmann::json;
  json arr = json::array();
  for (const auto& [name, m] : lib) {
    json j = {{"name", name}, {"unit", "rad_s"}};
    std::visit(
        [&](const auto& model) {
          using T = std::decay_t<decltype(model)>;
          if constexpr (std::is_same_v<T, ConstantModel>) {
            j["model"] = "constant";
            j["eps"] = model.eps;
          } else if constexpr (std::is_same_v<T, OscillatorModel>) {
            j["model"] = "oscillators";
            j.update(detail::oscillators_to_json(model));
          } else if constexpr (std::is_same_v<T, DrudeModel>) {
            j["model"] = "drude";
            j["omega_p"] = model.omega_p;
            j["gamma"] = model.gamma;
            j["eps_background"] = detail::oscillators_to_json(model.background);
          } else if constexpr (std::is_same_v<T, TabulatedModel>) {
            j["model"] = "table";
            json pts = json::array();
            for (const auto& [xi, eps] : model.points) pts.push_back({xi, eps});
            j["points"] = pts;
          } else {
            j["model"] = "perfect_conductor";
          }
        },
        m.model);
    arr.push_back(std::move(j));
  }
  return json{{"materials", arr}}.dump(2) + "\n";
}

inline void save_material_library(const MaterialLibrary& lib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write material library '" + path + "'");
  out << dump_material_library(lib);
}

}  // namespace casilift
