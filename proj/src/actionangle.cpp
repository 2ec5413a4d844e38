#include "kamlattice/actionangle.hpp"

#include <algorithm>
#include <cmath>

#include "kamlattice/quadrature.hpp"

namespace kamlattice {

namespace {

// With u = 1 - t^2, 1 - u^4 = t^2 p(t^2).
double p_poly(double s) { return 4.0 + s * (-6.0 + s * (4.0 - s)); }

double compute_b1() {
  static const QuadratureRule rule = gauss_legendre(48);
  return integrate(rule, [](double t) { return 2.0 * t * t * std::sqrt(p_poly(t * t)); }, 0.0, 1.0);
}

// G(tau) = int_0^tau 2 / sqrt(p(t^2)) dt, so that phi_bar(1 - tau^2) = 1/4 - G(tau) / (6 b1).
double G_direct(double tau) {
  static const QuadratureRule rule = gauss_legendre(48);
  return integrate(rule, [](double t) { return 2.0 / std::sqrt(p_poly(t * t)); }, 0.0, tau);
}

double G_prime(double tau) { return 2.0 / std::sqrt(p_poly(tau * tau)); }

struct AngleTable {
  double b1;
  double G_max;
  ChebyshevSeries G;
  ChebyshevSeries G_inv;

  AngleTable() : b1(compute_b1()), G_max(1.5 * b1) {
    G = ChebyshevSeries(G_direct, 0.0, 1.0, 48);
    const ChebyshevSeries& g = G;
    G_inv = ChebyshevSeries(
        [&g](double y) {
          double tau = y;
          for (int it = 0; it < 60; ++it) {
            const double step = (g(tau) - y) / G_prime(tau);
            tau = std::clamp(tau - step, 0.0, 1.0);
            if (std::abs(step) < 1e-17) break;
          }
          return tau;
        },
        0.0, G_max, 64);
  }

  double tau_of_G(double y) const {
    double tau = std::clamp(G_inv(y), 0.0, 1.0);
    for (int it = 0; it < 2; ++it) tau = std::clamp(tau - (G(tau) - y) / G_prime(tau), 0.0, 1.0);
    return tau;
  }
};

const AngleTable& table() {
  static const AngleTable t;
  return t;
}

double K0_coefficient(double z4) {
  return std::pow(2.0, -10.0 / 3.0) * std::pow(b1_constant(), -4.0 / 3.0) * std::cbrt(z4);
}

}  // namespace

double b1_constant() { return table().b1; }

double action_from_energy(double z4, double h) {
  if (!(z4 > 0.0) || !(h > 0.0)) throw DomainError("action requires z4 > 0 and h > 0");
  return 4.0 * std::sqrt(2.0) * b1_constant() * std::pow(z4, -0.25) * std::pow(h, 0.75);
}

double max_amplitude(double z4, double h) {
  if (!(z4 > 0.0) || !(h >= 0.0)) throw DomainError("amplitude requires z4 > 0 and h >= 0");
  return std::pow(h / z4, 0.25);
}

K0Derivatives K0_and_derivatives(double z4, double I) {
  if (!(z4 > 0.0) || !(I > 0.0)) throw DomainError("K0 requires z4 > 0 and I > 0");
  const double k = K0_coefficient(z4);
  const double c = std::cbrt(I);
  K0Derivatives d;
  d.K0 = k * I * c;
  d.dK0 = (4.0 / 3.0) * k * c;
  d.d2K0 = (4.0 / 9.0) * k / (c * c);
  d.d3K0 = -(8.0 / 27.0) * k / (I * c * c);
  return d;
}

double phi_bar(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("phi_bar requires r in [0, 1]");
  const auto& t = table();
  return 0.25 - t.G(std::sqrt(1.0 - r)) / (6.0 * t.b1);
}

double phi_bar_inverse(double phi) {
  if (!(phi >= 0.0 && phi <= 0.25)) throw DomainError("phi_bar_inverse requires phi in [0, 1/4]");
  const auto& t = table();
  const double tau = t.tau_of_G(6.0 * t.b1 * (0.25 - phi));
  return 1.0 - tau * tau;
}

ActionAngleState to_action_angle(double z4, double R, double S) {
  if (R == 0.0 && S == 0.0) throw DomainError("action-angle chart excludes the origin");
  if (!(z4 > 0.0)) throw DomainError("z4 must be positive");
  const auto& t = table();
  const double R2 = R * R;
  const double h = 0.5 * S * S + z4 * R2 * R2;
  const double Rmax = max_amplitude(z4, h);
  const double r = std::min(std::abs(R) / Rmax, 1.0);
  const double tau = std::min(std::abs(S) / std::sqrt(2.0 * h * (1.0 + r) * (1.0 + r * r)), 1.0);
  const double pb = 0.25 - t.G(tau) / (6.0 * t.b1);
  double phi;
  if (S >= 0.0) {
    phi = R >= 0.0 ? pb : 1.0 - pb;
  } else {
    phi = R >= 0.0 ? 0.5 - pb : 0.5 + pb;
  }
  if (phi >= 1.0) phi -= 1.0;
  return {phi, action_from_energy(z4, h)};
}

std::pair<double, double> from_action_angle(double z4, const ActionAngleState& a) {
  if (!(a.I > 0.0)) throw DomainError("action must be positive");
  const auto& t = table();
  double phi = a.phi - std::floor(a.phi);
  double pb;
  double sR;
  double sS;
  if (phi <= 0.25) {
    pb = phi, sR = 1.0, sS = 1.0;
  } else if (phi <= 0.5) {
    pb = 0.5 - phi, sR = 1.0, sS = -1.0;
  } else if (phi <= 0.75) {
    pb = phi - 0.5, sR = -1.0, sS = -1.0;
  } else {
    pb = 1.0 - phi, sR = -1.0, sS = 1.0;
  }
  const double h = energy_from_action(z4, a.I);
  const double tau = t.tau_of_G(6.0 * t.b1 * (0.25 - pb));
  const double t2 = tau * tau;
  const double r = 1.0 - t2;
  const double u = 1.0 - t2;
  const double R = sR * r * max_amplitude(z4, h);
  const double S = sS * std::sqrt(2.0 * h) * tau * std::sqrt((2.0 - t2) * (1.0 + u * u));
  return {R, S};
}

Localization localize(double z4, double I0, double b2) {
  if (!(z4 > 0.0) || !(I0 > 0.0) || !(b2 > 0.0)) {
    throw DomainError("localization requires z4, I0, b2 > 0");
  }
  Localization loc;
  loc.z4 = z4;
  loc.I0 = I0;
  loc.b2 = b2;
  loc.M = z4 * I0;
  if (!(loc.M > 1.0)) throw DomainError("localization requires M = z4 I0 > 1");
  loc.logM = std::log(loc.M);
  loc.beta = b2 * I0 / loc.logM;
  const auto d = K0_and_derivatives(z4, I0);
  loc.omega = d.dK0;
  loc.m = loc.beta * d.d2K0;
  return loc;
}

RescaledFields rescaled_fields(const NormalizedSystem& sys, const Localization& loc, double phi,
                               double J, double xi) {
  const double x = loc.b2 * J / loc.logM;
  if (!(1.0 + x > 0.0)) throw DomainError("rescaled fields require 1 + b2 J / log M > 0");
  const double b1 = b1_constant();
  const double I = loc.I0 + loc.beta * J;
  const auto [R, S] = from_action_angle(loc.z4, {phi, I});
  const double h = energy_from_action(loc.z4, I);
  const double r = R / max_amplitude(loc.z4, h);
  const double s = S / std::sqrt(2.0 * h);
  const double z2 = sys.z2(xi);
  const double Mm13 = 1.0 / std::cbrt(loc.M);
  const double c = std::cbrt(1.0 + x);

  RescaledFields f;
  f.F1 = (1.0 / 3.0) * std::pow(2.0, -2.0 / 3.0) * std::pow(b1, -2.0 / 3.0) * z2 * r * r * Mm13 / c;
  f.F2 = -3.0 * std::cbrt(2.0) * std::cbrt(b1) * z2 * r * s / loc.b2 * loc.logM * Mm13 * c * c;
  f.g = loc.omega * (std::expm1(std::log1p(x) / 3.0) - x / 3.0);
  f.dg_dJ = (loc.b2 / loc.logM) * (loc.omega / 3.0) * (1.0 / (c * c) - 1.0);
  const double I_low = loc.I0 + loc.beta * std::min(J, 0.0);
  const double d3 = std::abs(K0_and_derivatives(loc.z4, I_low).d3K0);
  f.g_envelope = 0.5 * loc.beta * loc.beta * d3 * J * J;
  f.dg_dJ_envelope = loc.beta * loc.beta * d3 * std::abs(J);
  return f;
}

}  // namespace kamlattice
