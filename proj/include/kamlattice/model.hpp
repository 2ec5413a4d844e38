#pragma once

// Lattice-forced Duffing model: physical parameters, the raw lattice form
// R'' = -a1 R + a3 R^3 + sum_j V_j R cos(k_j x), and the normalized
// suspended system with unit forcing period.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kamlattice/errors.hpp"

namespace kamlattice {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Exact positive-or-negative rational with 64-bit parts, always reduced and
/// with a positive denominator.
class Rational {
public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend bool operator==(const Rational&, const Rational&) = default;

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

Rational operator*(const Rational& a, const Rational& b);
Rational operator/(const Rational& a, const Rational& b);

/// gcd of positive rationals: gcd of numerators over a common denominator.
Rational rational_gcd(std::span<const Rational> values);

struct LatticeMode {
  double V = 0.0;
  Rational ratio{1};  // wavenumber in units of the reference wavenumber
};

/// Dimensional condensate parameters (SI). The lattice is
/// V(x) = sum_j V_j cos(kappa_ref * ratio_j * x).
struct PhysicalParams {
  double hbar = 1.054571817e-34;
  double mass = 0.0;
  double g = 0.0;       // 1-D interaction constant, J m
  double mu = 0.0;      // chemical potential, J
  double kappa_ref = 0.0;  // 1/m
  std::vector<LatticeMode> modes;
};

/// Raw lattice form R'' = -alpha1 R + alpha3 R^3 + sum_j V_j R cos(kappa_ref ratio_j x),
/// the parametrization the phase-portrait figures use.
struct LatticeSystem {
  double alpha1 = 0.0;
  double alpha3 = 0.0;
  double kappa_ref = 1.0;
  std::vector<LatticeMode> modes;
};

/// State of the raw lattice system: S = dR/dx.
struct LatticeState {
  double R = 0.0;
  double S = 0.0;
  double x = 0.0;
};

struct HarmonicMode {
  double amplitude = 0.0;
  int harmonic = 1;
};

/// z2(xi) = z2_mean + sum_j a_j cos(2 pi j xi); U(R, xi) = z2 R^2 + z4 R^4.
struct NormalizedSystem {
  double z4 = 1.0;
  double z2_mean = 0.0;
  std::vector<HarmonicMode> z2_modes;
  double T = 1.0;  // forcing period in the original x variable

  /// Validates z4 > 0, finite amplitudes and strictly increasing harmonics.
  void validate() const;

  double z2(double xi) const;
  /// Upper bound of |z2| on the real line.
  double z2_sup() const;
};

NormalizedSystem make_normalized(double z4, double z2_mean,
                                 std::vector<HarmonicMode> modes = {}, double T = 1.0);

struct PhaseState {
  double R = 0.0;
  double S = 0.0;
  double xi = 0.0;
};

struct VectorField {
  double dR = 0.0;
  double dS = 0.0;
  double dxi = 0.0;
};

/// Base period, common wavenumber and integer harmonics of a mode list.
struct PeriodStructure {
  double kappa = 0.0;  // gcd wavenumber
  double T = 0.0;      // 2 pi / kappa
  std::vector<int> harmonics;
};

PeriodStructure period_structure(double kappa_ref, std::span<const LatticeMode> modes);

LatticeSystem to_lattice(const PhysicalParams& p);
NormalizedSystem normalize(const LatticeSystem& sys);
NormalizedSystem normalize(const PhysicalParams& p);

PhaseState to_phase(const NormalizedSystem& sys, const LatticeState& s);
LatticeState to_lattice_state(const NormalizedSystem& sys, const PhaseState& s);

double hamiltonian(const NormalizedSystem& sys, const PhaseState& s);
VectorField vector_field(const NormalizedSystem& sys, const PhaseState& s);

enum class Scaling { S1, S2 };

/// The two rescaling symmetries of the lattice system:
/// S1(lambda): (R, lambda S, x/lambda; lambda^2 a1, lambda^2 a3, lambda kappa, lambda^2 V)
/// S2(mu):     (mu R, mu S, x; a1, a3/mu^2, kappa, V)
std::pair<LatticeSystem, LatticeState> apply_scaling(const LatticeSystem& sys,
                                                     const LatticeState& s,
                                                     Scaling which, double factor);

/// S2 acting directly on the normalized form (z4 -> z4/mu^2, (R,S) -> mu (R,S)).
std::pair<NormalizedSystem, PhaseState> apply_scaling(const NormalizedSystem& sys,
                                                      const PhaseState& s, double mu);

/// Radius of the unperturbed separatrix on S = 0 for the xi-averaged potential,
/// or 0 when the averaged potential is a single well.
double mean_separatrix_radius(const NormalizedSystem& sys);

std::string to_string(Scaling s);

}  // namespace kamlattice
