#pragma once

// JSON system descriptors. Two forms are accepted:
//   raw:      {"alpha1": a1, "alpha3": a3, "kappa": [num, den],
//              "modes": [{"V": V, "kappa": [num, den]}, ...]}
//   physical: {"hbar": ..., "mass": ..., "g": ..., "mu": ..., "kappa": k_ref,
//              "modes": [{"V": V_J, "kappa": [num, den]}, ...]}
// Mode wavenumbers are exact multiples of the top-level "kappa".

#include <optional>

#include <json.hpp>

#include "kamlattice/model.hpp"

namespace kamlattice {

struct SystemDescriptor {
  LatticeSystem lattice;
  std::optional<PhysicalParams> physical;

  NormalizedSystem normalized() const {
    return physical ? normalize(*physical) : normalize(lattice);
  }
};

Rational rational_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rational& r);

SystemDescriptor descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SystemDescriptor& d);

/// Figure family (alpha1, alpha3, kappa, V1) with a single mode at the reference wavenumber.
LatticeSystem figure_system(double alpha1, double alpha3, double kappa, double V1);

}  // namespace kamlattice
