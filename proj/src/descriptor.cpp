#include "kamlattice/descriptor.hpp"

#include <cmath>
#include <limits>

namespace kamlattice {

using nlohmann::json;

namespace {

double number_field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("descriptor is missing \"") + key + "\"");
  if (!j.at(key).is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

double wavenumber_value(const json& j) {
  if (j.is_array()) return rational_from_json(j).value();
  if (j.is_number()) return j.get<double>();
  throw ConfigError("\"kappa\" must be a number or a [num, den] pair");
}

std::vector<LatticeMode> modes_from_json(const json& j) {
  std::vector<LatticeMode> modes;
  if (j.contains("modes")) {
    if (!j.at("modes").is_array()) throw ConfigError("\"modes\" must be an array");
    for (const auto& m : j.at("modes")) {
      LatticeMode mode;
      mode.V = number_field(m, "V");
      mode.ratio = m.contains("kappa") ? rational_from_json(m.at("kappa")) : Rational(1);
      if (mode.ratio.num() <= 0) throw DomainError("mode wavenumbers must be positive");
      modes.push_back(mode);
    }
  } else if (j.contains("V1")) {
    modes.push_back({number_field(j, "V1"), Rational(1)});
  }
  return modes;
}

}  // namespace

Rational rational_from_json(const json& j) {
  if (j.is_array()) {
    if (j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
      throw DomainError("aperiodic superlattice unsupported: wavenumber ratio must be an integer pair");
    }
    return Rational(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
  }
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && std::nearbyint(v) == v && std::abs(v) < 9e15) {
      return Rational(static_cast<std::int64_t>(v));
    }
  }
  throw DomainError("aperiodic superlattice unsupported: wavenumber ratio must be exact");
}

json to_json(const Rational& r) { return json::array({r.num(), r.den()}); }

SystemDescriptor descriptor_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("system descriptor must be a JSON object");
  SystemDescriptor d;
  if (j.contains("mass")) {
    PhysicalParams p;
    if (j.contains("hbar")) p.hbar = number_field(j, "hbar");
    p.mass = number_field(j, "mass");
    p.g = number_field(j, "g");
    p.mu = number_field(j, "mu");
    if (!j.contains("kappa")) throw ConfigError("descriptor is missing \"kappa\"");
    p.kappa_ref = wavenumber_value(j.at("kappa"));
    p.modes = modes_from_json(j);
    d.lattice = to_lattice(p);
    d.physical = p;
  } else {
    d.lattice.alpha1 = number_field(j, "alpha1");
    d.lattice.alpha3 = number_field(j, "alpha3");
    d.lattice.kappa_ref = j.contains("kappa") ? wavenumber_value(j.at("kappa")) : 1.0;
    d.lattice.modes = modes_from_json(j);
  }
  if (!(d.lattice.kappa_ref > 0.0)) throw DomainError("reference wavenumber must be positive");
  return d;
}

json to_json(const SystemDescriptor& d) {
  json j;
  json modes = json::array();
  if (d.physical) {
    const auto& p = *d.physical;
    j["hbar"] = p.hbar;
    j["mass"] = p.mass;
    j["g"] = p.g;
    j["mu"] = p.mu;
    j["kappa"] = p.kappa_ref;
    for (const auto& m : p.modes) modes.push_back({{"V", m.V}, {"kappa", to_json(m.ratio)}});
  } else {
    j["alpha1"] = d.lattice.alpha1;
    j["alpha3"] = d.lattice.alpha3;
    j["kappa"] = d.lattice.kappa_ref;
    for (const auto& m : d.lattice.modes) modes.push_back({{"V", m.V}, {"kappa", to_json(m.ratio)}});
  }
  j["modes"] = modes;
  return j;
}

LatticeSystem figure_system(double alpha1, double alpha3, double kappa, double V1) {
  LatticeSystem sys;
  sys.alpha1 = alpha1;
  sys.alpha3 = alpha3;
  sys.kappa_ref = kappa;
  sys.modes.push_back({V1, Rational(1)});
  return sys;
}

}  // namespace kamlattice
