#pragma once

// Action-angle coordinates for the quartic oscillator H0 = S^2/2 + z4 R^4 and
// the localized coordinates J = (I - I0)/beta used by the torus certificate.

#include <utility>

#include "kamlattice/model.hpp"

namespace kamlattice {

/// b1 = int_0^1 sqrt(1 - u^4) du.
double b1_constant();

/// I(h) = 4 sqrt(2) b1 z4^{-1/4} h^{3/4}.
double action_from_energy(double z4, double h);
/// R_max(h) = (h / z4)^{1/4}, the turning point on S = 0.
double max_amplitude(double z4, double h);

struct K0Derivatives {
  double K0 = 0.0;
  double dK0 = 0.0;
  double d2K0 = 0.0;
  double d3K0 = 0.0;
};

/// K0(I) = 2^{-10/3} b1^{-4/3} z4^{1/3} I^{4/3} and its first three derivatives.
K0Derivatives K0_and_derivatives(double z4, double I);
inline double energy_from_action(double z4, double I) { return K0_and_derivatives(z4, I).K0; }

struct ActionAngleState {
  double phi = 0.0;  // [0, 1)
  double I = 0.0;
};

/// phi_bar(r) = (1/(6 b1)) int_0^r (1 - u^4)^{-1/2} du on [0, 1]; phi_bar(1) = 1/4.
double phi_bar(double r);
/// Inverse of phi_bar on [0, 1/4].
double phi_bar_inverse(double phi);

/// The angle increases along the flow: phi = 0 on (0, S > 0), 1/4 at R = R_max.
ActionAngleState to_action_angle(double z4, double R, double S);
std::pair<double, double> from_action_angle(double z4, const ActionAngleState& a);

struct Localization {
  double z4 = 0.0;
  double I0 = 0.0;
  double b2 = 0.0;
  double M = 0.0;      // z4 I0
  double logM = 0.0;
  double beta = 0.0;   // b2 I0 / log M
  double omega = 0.0;  // K0'(I0)
  double m = 0.0;      // beta K0''(I0)
};

Localization localize(double z4, double I0, double b2);

/// Right-hand side of the localized system
///   phi' = omega + m J + g + F1,  J' = F2.
/// g and dg/dJ are exact; the *_envelope fields are the mean-value bounds
/// (1/2) beta^2 sup|K0'''| J^2 and beta^2 sup|K0'''| |J| over the segment [0, J].
struct RescaledFields {
  double g = 0.0;
  double dg_dJ = 0.0;
  double F1 = 0.0;
  double F2 = 0.0;
  double g_envelope = 0.0;
  double dg_dJ_envelope = 0.0;
};

RescaledFields rescaled_fields(const NormalizedSystem& sys, const Localization& loc, double phi,
                               double J, double xi);

}  // namespace kamlattice
