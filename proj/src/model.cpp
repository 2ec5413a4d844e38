#include "kamlattice/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace kamlattice {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw DomainError("rational arithmetic overflow");
  }
  return out;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

Rational operator*(const Rational& a, const Rational& b) {
  // Cross-reduce first to keep intermediates small.
  const std::int64_t g1 = std::gcd(a.num(), b.den());
  const std::int64_t g2 = std::gcd(b.num(), a.den());
  return Rational(checked_mul(a.num() / (g1 ? g1 : 1), b.num() / (g2 ? g2 : 1)),
                  checked_mul(a.den() / (g2 ? g2 : 1), b.den() / (g1 ? g1 : 1)));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num() == 0) throw DomainError("rational division by zero");
  return a * Rational(b.den(), b.num());
}

Rational rational_gcd(std::span<const Rational> values) {
  if (values.empty()) throw DomainError("gcd of an empty set");
  std::int64_t common_den = 1;
  for (const auto& v : values) {
    if (v.num() <= 0) throw DomainError("wavenumber ratios must be positive");
    common_den = checked_mul(common_den / std::gcd(common_den, v.den()), v.den());
  }
  std::int64_t g = 0;
  for (const auto& v : values) {
    g = std::gcd(g, checked_mul(v.num(), common_den / v.den()));
  }
  return Rational(g, common_den);
}

void NormalizedSystem::validate() const {
  if (!(z4 > 0.0) || !std::isfinite(z4)) throw DomainError("z4 must be positive and finite");
  if (!std::isfinite(z2_mean)) throw DomainError("z2 mean must be finite");
  if (!(T > 0.0)) throw DomainError("period T must be positive");
  int last = 0;
  for (const auto& m : z2_modes) {
    if (!std::isfinite(m.amplitude)) throw DomainError("z2 amplitude must be finite");
    if (m.harmonic <= last) throw DomainError("z2 harmonics must be strictly increasing and positive");
    last = m.harmonic;
  }
}

double NormalizedSystem::z2(double xi) const {
  double v = z2_mean;
  for (const auto& m : z2_modes) v += m.amplitude * std::cos(kTwoPi * m.harmonic * xi);
  return v;
}

double NormalizedSystem::z2_sup() const {
  double v = std::abs(z2_mean);
  for (const auto& m : z2_modes) v += std::abs(m.amplitude);
  return v;
}

NormalizedSystem make_normalized(double z4, double z2_mean, std::vector<HarmonicMode> modes,
                                 double T) {
  NormalizedSystem sys{z4, z2_mean, std::move(modes), T};
  sys.validate();
  return sys;
}

PeriodStructure period_structure(double kappa_ref, std::span<const LatticeMode> modes) {
  if (!(kappa_ref > 0.0)) throw DomainError("reference wavenumber must be positive");
  PeriodStructure out;
  if (modes.empty()) {
    out.kappa = kappa_ref;
    out.T = kTwoPi / kappa_ref;
    return out;
  }
  std::vector<Rational> ratios;
  ratios.reserve(modes.size());
  for (const auto& m : modes) ratios.push_back(m.ratio);
  const Rational g = rational_gcd(ratios);
  out.kappa = kappa_ref * g.value();
  out.T = kTwoPi / out.kappa;
  for (const auto& r : ratios) {
    const Rational h = r / g;
    if (h.den() != 1 || h.num() > std::numeric_limits<int>::max()) {
      throw DomainError("harmonic index out of range");
    }
    out.harmonics.push_back(static_cast<int>(h.num()));
  }
  return out;
}

LatticeSystem to_lattice(const PhysicalParams& p) {
  if (!(p.g < 0.0)) throw DomainError("repulsive regime unbounded");
  if (!(p.hbar > 0.0) || !(p.mass > 0.0)) throw DomainError("hbar and mass must be positive");
  if (p.modes.empty()) throw DomainError("physical lattice needs at least one mode");
  const double scale = 2.0 * p.mass / (p.hbar * p.hbar);
  LatticeSystem sys;
  sys.alpha1 = scale * p.mu;
  sys.alpha3 = scale * p.g;
  sys.kappa_ref = p.kappa_ref;
  for (const auto& m : p.modes) sys.modes.push_back({-scale * m.V, m.ratio});
  return sys;
}

NormalizedSystem normalize(const LatticeSystem& sys) {
  if (!(sys.alpha3 < 0.0)) throw DomainError("repulsive regime unbounded");
  const PeriodStructure ps = period_structure(sys.kappa_ref, sys.modes);
  const double T2 = ps.T * ps.T;
  std::map<int, double> by_harmonic;
  for (std::size_t j = 0; j < sys.modes.size(); ++j) {
    by_harmonic[ps.harmonics[j]] += -0.5 * T2 * sys.modes[j].V;
  }
  std::vector<HarmonicMode> modes;
  for (const auto& [h, a] : by_harmonic) modes.push_back({a, h});
  return make_normalized(-0.25 * T2 * sys.alpha3, 0.5 * T2 * sys.alpha1, std::move(modes), ps.T);
}

NormalizedSystem normalize(const PhysicalParams& p) { return normalize(to_lattice(p)); }

PhaseState to_phase(const NormalizedSystem& sys, const LatticeState& s) {
  double xi = std::fmod(s.x / sys.T, 1.0);
  if (xi < 0.0) xi += 1.0;
  if (xi >= 1.0) xi = 0.0;
  return {s.R, sys.T * s.S, xi};
}

LatticeState to_lattice_state(const NormalizedSystem& sys, const PhaseState& s) {
  return {s.R, s.S / sys.T, s.xi * sys.T};
}

double hamiltonian(const NormalizedSystem& sys, const PhaseState& s) {
  const double R2 = s.R * s.R;
  return 0.5 * s.S * s.S + sys.z2(s.xi) * R2 + sys.z4 * R2 * R2;
}

VectorField vector_field(const NormalizedSystem& sys, const PhaseState& s) {
  const double dU = 2.0 * sys.z2(s.xi) * s.R + 4.0 * sys.z4 * s.R * s.R * s.R;
  return {s.S, -dU, 1.0};
}

std::pair<LatticeSystem, LatticeState> apply_scaling(const LatticeSystem& sys,
                                                     const LatticeState& s, Scaling which,
                                                     double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw DomainError("scaling factor must be positive");
  LatticeSystem out = sys;
  LatticeState st = s;
  if (which == Scaling::S1) {
    const double l2 = factor * factor;
    out.alpha1 *= l2;
    out.alpha3 *= l2;
    out.kappa_ref *= factor;
    for (auto& m : out.modes) m.V *= l2;
    st.S *= factor;
    st.x /= factor;
  } else {
    out.alpha3 /= factor * factor;
    st.R *= factor;
    st.S *= factor;
  }
  return {out, st};
}

std::pair<NormalizedSystem, PhaseState> apply_scaling(const NormalizedSystem& sys,
                                                      const PhaseState& s, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("scaling factor must be positive");
  NormalizedSystem out = sys;
  out.z4 /= mu * mu;
  return {out, {mu * s.R, mu * s.S, s.xi}};
}

double mean_separatrix_radius(const NormalizedSystem& sys) {
  return sys.z2_mean < 0.0 ? std::sqrt(-sys.z2_mean / sys.z4) : 0.0;
}

std::string to_string(Scaling s) { return s == Scaling::S1 ? "S1" : "S2"; }

}  // namespace kamlattice
