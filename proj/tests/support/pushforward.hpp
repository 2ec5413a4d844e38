#pragma once

// Numerical pushforward of the (R, S, xi) vector field through the
// action-angle map and the localization J = (I - I0) / beta.

#include <algorithm>
#include <cmath>
#include <random>

#include "kamlattice/actionangle.hpp"

namespace kamlattice::testing {

struct PushforwardSample {
  double phi_dot_numeric = 0.0;
  double J_dot_numeric = 0.0;
  double phi_dot_closed = 0.0;
  double J_dot_closed = 0.0;

  double rel_error() const {
    const double a = std::abs(phi_dot_numeric - phi_dot_closed) / std::abs(phi_dot_closed);
    const double b = std::abs(J_dot_numeric - J_dot_closed) / std::abs(J_dot_closed);
    return std::max(a, b);
  }
};

inline PushforwardSample pushforward(const NormalizedSystem& sys, const Localization& loc,
                                     double phi, double J, double xi) {
  const double I = loc.I0 + loc.beta * J;
  const auto [R, S] = from_action_angle(loc.z4, {phi, I});
  const auto v = vector_field(sys, {R, S, xi});
  const double scale = std::hypot(R, S);
  const double e = 1e-5 * scale;
  auto wrap = [](double d) { return d - std::round(d); };
  const auto pR = to_action_angle(loc.z4, R + e, S), mR = to_action_angle(loc.z4, R - e, S);
  const auto pS = to_action_angle(loc.z4, R, S + e), mS = to_action_angle(loc.z4, R, S - e);
  // Fourth-order central differences.
  const auto pR2 = to_action_angle(loc.z4, R + 2 * e, S), mR2 = to_action_angle(loc.z4, R - 2 * e, S);
  const auto pS2 = to_action_angle(loc.z4, R, S + 2 * e), mS2 = to_action_angle(loc.z4, R, S - 2 * e);
  const double dphi_dR = (8 * wrap(pR.phi - mR.phi) - wrap(pR2.phi - mR2.phi)) / (12 * e);
  const double dphi_dS = (8 * wrap(pS.phi - mS.phi) - wrap(pS2.phi - mS2.phi)) / (12 * e);
  const double dI_dR = (8 * (pR.I - mR.I) - (pR2.I - mR2.I)) / (12 * e);
  const double dI_dS = (8 * (pS.I - mS.I) - (pS2.I - mS2.I)) / (12 * e);

  PushforwardSample out;
  out.phi_dot_numeric = dphi_dR * v.dR + dphi_dS * v.dS;
  out.J_dot_numeric = (dI_dR * v.dR + dI_dS * v.dS) / loc.beta;
  const auto f = rescaled_fields(sys, loc, phi, J, xi);
  out.phi_dot_closed = loc.omega + loc.m * J + f.g + f.F1;
  out.J_dot_closed = f.F2;
  return out;
}

/// Samples with |r s| >= 0.05 and |z2(xi)| >= 0.1 sup|z2| so that both
/// components are bounded away from zero.
template <class Rng>
PushforwardSample random_pushforward(const NormalizedSystem& sys, const Localization& loc, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double phi = u(rng);
    const double J = (u(rng) - 0.5) * loc.logM / loc.b2;
    const double xi = u(rng);
    if (std::abs(sys.z2(xi)) < 0.1 * sys.z2_sup()) continue;
    const double I = loc.I0 + loc.beta * J;
    const auto [R, S] = from_action_angle(loc.z4, {phi, I});
    const double h = energy_from_action(loc.z4, I);
    if (std::abs(R / max_amplitude(loc.z4, h) * S / std::sqrt(2.0 * h)) < 0.05) continue;
    return pushforward(sys, loc, phi, J, xi);
  }
}

}  // namespace kamlattice::testing
