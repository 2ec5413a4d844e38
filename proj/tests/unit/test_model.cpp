#include <doctest.h>

#include <cmath>
#include <random>

#include "kamlattice/model.hpp"

using namespace kamlattice;

namespace {

// Euclid by repeated subtraction, independent of std::gcd.
long slow_gcd(long a, long b) {
  while (a != b) {
    if (a > b) a -= b;
    else b -= a;
  }
  return a;
}

LatticeSystem figure(double V1) {
  LatticeSystem s;
  s.alpha1 = -1.0;
  s.alpha3 = -1.0;
  s.kappa_ref = 1.0;
  s.modes.push_back({V1, Rational(1)});
  return s;
}

}  // namespace

TEST_CASE("rational arithmetic reduces and keeps a positive denominator") {
  const Rational r(6, -4);
  CHECK(r.num() == -3);
  CHECK(r.den() == 2);
  CHECK(Rational(3, 2) * Rational(4, 9) == Rational(2, 3));
  CHECK(Rational(3, 2) / Rational(3, 4) == Rational(2));
  CHECK_THROWS_AS(Rational(1, 0), DomainError);
}

TEST_CASE("single mode is its own gcd") {
  const LatticeMode m{0.7, Rational(1)};
  const auto ps = period_structure(2.5, std::span<const LatticeMode>(&m, 1));
  CHECK(ps.T == doctest::Approx(kTwoPi / 2.5).epsilon(1e-15));
  REQUIRE(ps.harmonics.size() == 1);
  CHECK(ps.harmonics[0] == 1);
}

TEST_CASE("superlattice with kappa2 = 3 kappa1") {
  const std::vector<LatticeMode> modes = {{1.0, Rational(1)}, {0.5, Rational(3)}};
  const auto ps = period_structure(1.3, modes);
  CHECK(ps.T == doctest::Approx(kTwoPi / 1.3).epsilon(1e-15));
  CHECK(ps.harmonics == std::vector<int>{1, 3});
}

TEST_CASE("ratio 9/6 gives harmonics {2, 3} and twice the base period") {
  const std::vector<LatticeMode> modes = {{1.0, Rational(1)}, {0.5, Rational(9, 6)}};
  const auto ps = period_structure(1.0, modes);
  // Oracle: on the common denominator 6 the numerators are (6, 9).
  const long g = slow_gcd(6, 9);
  CHECK(g == 3);
  CHECK(ps.kappa == doctest::Approx(g / 6.0).epsilon(1e-15));
  CHECK(ps.T == doctest::Approx(kTwoPi / 0.5).epsilon(1e-15));
  CHECK(ps.harmonics == std::vector<int>{6 / 3, 9 / 3});
}

TEST_CASE("harmonic structure is invariant under a common rational factor") {
  const std::vector<LatticeMode> base = {{1.0, Rational(2, 5)}, {0.3, Rational(7, 10)}, {0.1, Rational(3, 2)}};
  const auto ref = period_structure(1.0, base);
  for (const Rational q : {Rational(3), Rational(2, 7), Rational(11, 13)}) {
    auto scaled = base;
    for (auto& m : scaled) m.ratio = m.ratio * q;
    const auto ps = period_structure(1.0, scaled);
    CHECK(ps.harmonics == ref.harmonics);
    CHECK(ps.kappa == doctest::Approx(ref.kappa * q.value()).epsilon(1e-14));

    LatticeSystem a;
    a.alpha1 = -0.8;
    a.alpha3 = -1.7;
    a.kappa_ref = 1.0;
    a.modes = base;
    LatticeSystem b = a;
    b.modes = scaled;
    b.kappa_ref = 1.0 / q.value();
    const auto na = normalize(a);
    const auto nb = normalize(b);
    CHECK(nb.z4 == doctest::Approx(na.z4).epsilon(1e-14));
    CHECK(nb.z2_mean == doctest::Approx(na.z2_mean).epsilon(1e-14));
    REQUIRE(nb.z2_modes.size() == na.z2_modes.size());
    for (std::size_t j = 0; j < na.z2_modes.size(); ++j) {
      CHECK(nb.z2_modes[j].harmonic == na.z2_modes[j].harmonic);
      CHECK(nb.z2_modes[j].amplitude == doctest::Approx(na.z2_modes[j].amplitude).epsilon(1e-14));
    }
  }
}

TEST_CASE("physical normalization") {
  PhysicalParams p;
  p.mass = 1.443e-25;
  p.g = -2.1e-37;
  p.mu = 3.0e-31;
  p.kappa_ref = 7.4e6;
  p.modes = {{1.0e-30, Rational(1)}, {4.0e-31, Rational(3)}};
  const auto sys = normalize(p);
  const double T = kTwoPi / p.kappa_ref;
  const double hb2 = p.hbar * p.hbar;
  CHECK(sys.T == doctest::Approx(T).epsilon(1e-14));
  CHECK(sys.z4 == doctest::Approx(-T * T * p.mass * p.g / (2.0 * hb2)).epsilon(1e-13));
  CHECK(sys.z2_mean == doctest::Approx(T * T * p.mass * p.mu / hb2).epsilon(1e-13));
  REQUIRE(sys.z2_modes.size() == 2);
  CHECK(sys.z2_modes[0].harmonic == 1);
  CHECK(sys.z2_modes[1].harmonic == 3);
  CHECK(sys.z2_modes[0].amplitude == doctest::Approx(T * T * p.mass * 1.0e-30 / hb2).epsilon(1e-13));
  CHECK(sys.z4 > 0.0);
}

TEST_CASE("repulsive condensates are rejected") {
  PhysicalParams p;
  p.mass = 1e-25;
  p.g = 1e-37;
  p.kappa_ref = 1e6;
  p.modes = {{1e-30, Rational(1)}};
  try {
    normalize(p);
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()) == "repulsive regime unbounded");
  }
  LatticeSystem s = figure(1.0);
  s.alpha3 = 0.5;
  CHECK_THROWS_AS(normalize(s), DomainError);
}

TEST_CASE("figure system in normalized form") {
  const auto sys = normalize(figure(0.3));
  CHECK(sys.T == doctest::Approx(kTwoPi));
  CHECK(sys.z4 == doctest::Approx(kPi * kPi));
  CHECK(sys.z2_mean == doctest::Approx(-2.0 * kPi * kPi));
  REQUIRE(sys.z2_modes.size() == 1);
  CHECK(sys.z2_modes[0].amplitude == doctest::Approx(-2.0 * kPi * kPi * 0.3));
  CHECK(mean_separatrix_radius(sys) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("hamiltonian examples") {
  const auto sys = make_normalized(0.25, -0.5, {{-0.5, 1}});
  CHECK(hamiltonian(sys, {0.0, 0.0, 0.3}) == 0.0);
  CHECK(hamiltonian(sys, {1.0, 0.0, 0.0}) == doctest::Approx(-0.75).epsilon(1e-15));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0), x(0.0, 1.0);
  const auto multi = make_normalized(1.7, 0.4, {{-2.0, 1}, {0.6, 3}});
  for (int i = 0; i < 1000; ++i) {
    const PhaseState s{u(rng), u(rng), x(rng)};
    CHECK(hamiltonian(multi, s) == hamiltonian(multi, {-s.R, s.S, s.xi}));
  }
}

TEST_CASE("vector field is the Hamiltonian gradient") {
  const auto sys = make_normalized(1.3, -0.7, {{0.9, 1}, {-0.2, 2}});
  const auto v0 = vector_field(sys, {0.0, 0.0, 0.42});
  CHECK(v0.dR == 0.0);
  CHECK(v0.dS == 0.0);
  CHECK(v0.dxi == 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0), x(0.0, 1.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const PhaseState s{u(rng), u(rng), x(rng)};
    const auto v = vector_field(sys, s);
    const double dHdS = (hamiltonian(sys, {s.R, s.S + h, s.xi}) - hamiltonian(sys, {s.R, s.S - h, s.xi})) / (2 * h);
    const double dHdR = (hamiltonian(sys, {s.R + h, s.S, s.xi}) - hamiltonian(sys, {s.R - h, s.S, s.xi})) / (2 * h);
    CHECK(std::abs(v.dR - dHdS) < 1e-8 * std::max(1.0, std::abs(dHdS)));
    CHECK(std::abs(v.dS + dHdR) < 1e-8 * std::max(1.0, std::abs(dHdR)));
  }
}

TEST_CASE("unforced figure system has equilibria at R = +-1") {
  const auto sys = normalize(figure(0.0));
  for (double R : {-1.0, 1.0}) {
    const auto v = vector_field(sys, {R, 0.0, 0.0});
    CHECK(std::abs(v.dS) < 1e-12);
  }
}

TEST_CASE("scalings") {
  const LatticeSystem s = figure(0.7);
  const LatticeState st{0.8, -0.3, 1.1};
  {
    const auto [s2, st2] = apply_scaling(s, st, Scaling::S1, 1.0);
    CHECK(s2.alpha1 == s.alpha1);
    CHECK(st2.R == st.R);
    CHECK(st2.S == st.S);
    CHECK(st2.x == st.x);
  }
  {
    const auto [s2, st2] = apply_scaling(s, st, Scaling::S2, 2.0);
    CHECK(s2.alpha3 == doctest::Approx(s.alpha3 / 4.0));
    CHECK(s2.alpha1 == s.alpha1);
    CHECK(st2.R == doctest::Approx(2.0 * st.R));
    CHECK(st2.S == doctest::Approx(2.0 * st.S));
    CHECK(normalize(s2).z4 == doctest::Approx(normalize(s).z4 / 4.0));
  }
  {
    const auto [s2, st2] = apply_scaling(s, st, Scaling::S1, 2.0);
    CHECK(s2.kappa_ref == doctest::Approx(2.0));
    CHECK(s2.alpha1 == doctest::Approx(4.0 * s.alpha1));
    CHECK(s2.alpha3 == doctest::Approx(4.0 * s.alpha3));
    CHECK(s2.modes[0].V == doctest::Approx(4.0 * s.modes[0].V));
    // S1 leaves the normalized system and the phase state unchanged.
    const auto n1 = normalize(s);
    const auto n2 = normalize(s2);
    CHECK(n2.z4 == doctest::Approx(n1.z4).epsilon(1e-14));
    CHECK(n2.z2_mean == doctest::Approx(n1.z2_mean).epsilon(1e-14));
    const auto p1 = to_phase(n1, st);
    const auto p2 = to_phase(n2, st2);
    CHECK(p2.R == doctest::Approx(p1.R));
    CHECK(p2.S == doctest::Approx(p1.S));
    CHECK(p2.xi == doctest::Approx(p1.xi));
  }
  CHECK_THROWS_AS(apply_scaling(s, st, Scaling::S1, 0.0), DomainError);
  CHECK_THROWS_AS(apply_scaling(s, st, Scaling::S2, -1.0), DomainError);
}

TEST_CASE("phase conversion round trip") {
  const auto sys = normalize(figure(1.0));
  const LatticeState st{0.4, 1.5, 3.0 * kTwoPi + 0.7};
  const auto p = to_phase(sys, st);
  CHECK(p.xi >= 0.0);
  CHECK(p.xi < 1.0);
  const auto back = to_lattice_state(sys, p);
  CHECK(back.R == st.R);
  CHECK(back.S == doctest::Approx(st.S));
  CHECK(back.x == doctest::Approx(0.7));
}

TEST_CASE("normalized system validation") {
  CHECK_THROWS_AS(make_normalized(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(make_normalized(1.0, 1.0, {{1.0, 2}, {1.0, 1}}), DomainError);
  CHECK_THROWS_AS(make_normalized(1.0, 1.0, {{NAN, 1}}), DomainError);
}
