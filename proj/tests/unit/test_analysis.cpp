#include <doctest.h>

#include <cmath>

#include "kamlattice/actionangle.hpp"
#include "kamlattice/analysis.hpp"
#include "kamlattice/descriptor.hpp"

using namespace kamlattice;

namespace {

NormalizedSystem figure(double V1) { return normalize(figure_system(-1.0, -1.0, 1.0, V1)); }

IntegratorConfig steps(int N) {
  IntegratorConfig c;
  c.steps_per_period = N;
  return c;
}

}  // namespace

TEST_CASE("weights and resolution") {
  CHECK(birkhoff_weight(0.0) == 0.0);
  CHECK(birkhoff_weight(1.0) == 0.0);
  CHECK(birkhoff_weight(0.5) == doctest::Approx(std::exp(-4.0)));
  const auto sys = figure(1.0);
  int prev = 0;
  for (double R : {1.0, 4.0, 16.0, 64.0, 256.0}) {
    const int N = steps_for_radius(sys, R);
    CHECK(N >= 512);
    CHECK((N & (N - 1)) == 0);
    CHECK(N >= prev);
    prev = N;
    const double h = sys.z4 * std::pow(R, 4) + sys.z2_sup() * R * R;
    CHECK(N >= 48.0 * K0_and_derivatives(sys.z4, action_from_energy(sys.z4, h)).dK0);
  }
}

TEST_CASE("pure quartic rotation number matches the analytic frequency") {
  const double z4 = kPi * kPi;
  const auto sys = make_normalized(z4, 0.0);
  double prev = 0.0;
  for (double R0 : {0.3, 0.8, 1.5, 2.5, 4.0}) {
    const double h = z4 * std::pow(R0, 4);
    const double w = K0_and_derivatives(z4, action_from_energy(z4, h)).dK0;
    const auto s = rotation_number(sys, {R0, 0.0}, 10000, steps(steps_for_radius(sys, R0)));
    REQUIRE(s.rotation_number);
    CHECK(std::abs(*s.rotation_number - w) < 1e-6);
    CHECK(*s.rotation_number > prev);  // twist
    prev = *s.rotation_number;
  }
}

TEST_CASE("origin has no rotation number") {
  const auto s = rotation_number(figure(1.0), {0.0, 0.0}, 100, {});
  CHECK_FALSE(s.rotation_number);
  CHECK(s.bounded);
  CHECK_FALSE(s.regular({}));
}

TEST_CASE("far orbit of the weakly forced lattice has a stable rotation number") {
  const auto sys = figure(0.1);
  const auto cfg = steps(steps_for_radius(sys, 6.0));
  const auto a = rotation_number(sys, {6.0, 0.0}, 10000, cfg);
  const auto b = rotation_number(sys, {6.0, 0.0}, 20000, cfg);
  REQUIRE(a.rotation_number);
  REQUIRE(b.rotation_number);
  CHECK(a.rotation_converged);
  CHECK(std::abs(*a.rotation_number - *b.rotation_number) < 1e-7);
  CHECK(a.regular({}));
}

TEST_CASE("chaos indicator") {
  SUBCASE("integrable quartic") {
    const auto sys = make_normalized(kPi * kPi, 0.0);
    const auto c = chaos_indicator(sys, {1.5, 0.0}, 10000, {});
    CHECK_FALSE(c.escaped);
    CHECK(c.value <= 1e-3);
  }
  SUBCASE("saddle at the origin of R'' = R - R^3") {
    const auto sys = figure(0.0);
    // Linearization R'' = R over one period 2 pi: multiplier exp(2 pi).
    const auto T = poincare_tangent(sys, {0.0, 0.0}, 1, {});
    const double tr = T.matrix[0] + T.matrix[3];
    const double lam = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * T.det()));
    CHECK(std::log(lam) == doctest::Approx(kTwoPi).epsilon(1e-10));
    const auto c = chaos_indicator(sys, {0.0, 0.0}, 200, {});
    CHECK(c.value == doctest::Approx(std::log(lam)).epsilon(1e-9));
  }
  SUBCASE("inner seed of the V1 = 1 lattice") {
    const auto c = chaos_indicator(figure(1.0), {0.5, 0.0}, 10000, {});
    CHECK(c.value > 0.05);
  }
}

TEST_CASE("reflection R1 leaves rotation number and indicator unchanged") {
  const auto sys = figure(0.5);
  const auto cfg = steps(steps_for_radius(sys, 6.0));
  for (const PhaseState s0 : {PhaseState{5.0, 3.0}, PhaseState{4.0, -8.0}}) {
    const auto a = rotation_number(sys, s0, 10000, cfg);
    const auto b = rotation_number(sys, {s0.R, -s0.S}, 10000, cfg);
    REQUIRE(a.rotation_number);
    REQUIRE(b.rotation_number);
    CHECK(std::abs(*a.rotation_number - *b.rotation_number) < 1e-7);
    CHECK(std::abs(a.chaos_indicator - b.chaos_indicator) < 1e-3);
  }
}

TEST_CASE("classification is stable when the orbit length doubles") {
  const auto sys = figure(1.0);
  std::vector<PhaseState> seeds;
  for (int i = 0; i < 40; ++i) seeds.push_back({0.2 + 0.2 * i, 0.0});
  const int N = steps_for_radius(sys, 8.0);
  const auto a = summarize(sys, seeds, 10000, N);
  const auto b = summarize(sys, seeds, 20000, N);
  ClassifyConfig c;
  int same = 0;
  for (std::size_t j = 0; j < seeds.size(); ++j) same += a[j].regular(c) == b[j].regular(c) ? 1 : 0;
  CHECK(same >= 38);  // 95 %
}

TEST_CASE("near-resonant regular orbits are continued until the rotation test settles") {
  // Seed 5.75 sqrt(11) of the V1 = 10 lattice has rotation number close to 16.
  const auto sys = figure(10.0);
  const std::vector<PhaseState> seeds{{5.75 * std::sqrt(11.0), 0.0}, {0.5, 0.0}};
  ClassifyConfig c;
  const int N = steps_for_radius(sys, 30.0);
  const auto fixed = summarize(sys, seeds, c.iterates, N);
  CHECK_FALSE(fixed[0].rotation_converged);
  const auto adaptive = classify(sys, seeds, c, N);
  CHECK(adaptive[0].rotation_converged);
  CHECK(adaptive[0].iterates_used > c.iterates);
  CHECK(adaptive[0].iterates_used <= c.max_iterates);
  CHECK(adaptive[0].chaos_indicator == fixed[0].chaos_indicator);
  CHECK(adaptive[0].regular(c));
  // Chaotic seeds are not continued.
  CHECK(adaptive[1].iterates_used == c.iterates);
  CHECK_FALSE(adaptive[1].regular(c));
  c.max_iterates = c.iterates;
  CHECK_FALSE(classify(sys, seeds, c, N)[0].rotation_converged);
}

TEST_CASE("automatic resolution follows each orbit's radius") {
  const auto sys = figure(10.0);
  const double u = std::sqrt(11.0);
  std::vector<PhaseState> seeds;
  for (double k : {0.2, 7.0, 0.6, 3.0, 1.0, 5.0}) seeds.push_back({k * u, 0.0});
  ClassifyConfig c;
  c.iterates = 2000;
  c.max_iterates = 2000;
  const auto a = classify(sys, seeds, c);
  std::vector<PhaseState> rev(seeds.rbegin(), seeds.rend());
  const auto b = classify(sys, rev, c);
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    const auto& x = a[j];
    const auto& y = b[seeds.size() - 1 - j];
    CHECK(x.chaos_indicator == y.chaos_indicator);
    CHECK(x.max_abs_R == y.max_abs_R);
  }
  // the outermost seed runs alone-ish at its own resolution
  std::vector<PhaseState> far{seeds[1], seeds[5]};
  const auto d = classify(sys, far, c, steps_for_radius(sys, 7.0 * u));
  CHECK(d[0].max_abs_R == a[1].max_abs_R);
  CHECK(d[0].chaos_indicator == a[1].chaos_indicator);
}

TEST_CASE("orbits that outrun their resolution are rerun") {
  const auto sys = figure(1000.0);
  const PhaseState seed{0.2 * std::sqrt(1001.0), 0.0};
  ClassifyConfig c;
  c.iterates = 1000;
  c.max_iterates = 1000;
  const auto a = classify(sys, std::span<const PhaseState>(&seed, 1), c).front();
  REQUIRE(a.bounded);
  const int coarse = steps_for_radius(sys, seed.R);
  const int fine = steps_for_radius(sys, a.max_abs_R);
  CHECK(fine > coarse);
  const auto at_coarse = classify(sys, std::span<const PhaseState>(&seed, 1), c, coarse).front();
  CHECK(a.chaos_indicator != at_coarse.chaos_indicator);
  CHECK(a.chaos_indicator > 0.05);
}

TEST_CASE("escape is reported as unbounded") {
  const auto sys = make_normalized(1.0, 1.0);
  const auto s = summarize(sys, std::vector<PhaseState>{{1e4, 0.0}}, 50, 16).front();
  CHECK_FALSE(s.bounded);
  CHECK_FALSE(s.rotation_number);
  CHECK(s.escape_period > 0);
  CHECK_FALSE(s.regular({}));
}

TEST_CASE("innermost invariant radius") {
  RadialScan scan;
  scan.classify.iterates = 4000;
  SUBCASE("integrable lattice: the scan minimum") {
    scan.R_min = 1.6;
    scan.R_max = 8.0;
    const auto r = innermost_invariant_radius(figure(0.0), scan);
    CHECK_FALSE(r.found_irregular);
    CHECK(r.R_star == 1.6);
  }
  SUBCASE("stronger forcing pushes the threshold out, repeatably") {
    scan.R_min = 0.5;
    scan.R_max = 8.0;
    const auto weak = innermost_invariant_radius(figure(0.1), scan);
    const auto strong = innermost_invariant_radius(figure(1.0), scan);
    CHECK(strong.found_irregular);
    CHECK(strong.R_star > weak.R_star);
    CHECK(strong.R_star / strong.bracket_low - 1.0 <= scan.rel_tol);
    scan.rng_seed = 12345;
    const auto again = innermost_invariant_radius(figure(1.0), scan);
    CHECK(std::abs(again.R_star / strong.R_star - 1.0) < 0.05);
  }
  SUBCASE("amplitude rescaling moves the threshold by the same factor") {
    const auto sys = figure(1.0);
    scan.R_min = 0.5;
    scan.R_max = 8.0;
    const auto base = innermost_invariant_radius(sys, scan);
    const double mu = 3.0;
    const auto scaled_sys = apply_scaling(sys, {}, mu).first;  // z4 -> z4 / mu^2
    RadialScan s2 = scan;
    s2.R_min *= mu;
    s2.R_max *= mu;
    s2.classify.steps_per_period = base.steps_per_period;
    const auto scaled = innermost_invariant_radius(scaled_sys, s2);
    CHECK(std::abs(scaled.R_star / (mu * base.R_star) - 1.0) <= 2.0 * scan.rel_tol);
  }
  SUBCASE("no regular orbit in range") {
    scan.R_min = 0.2;
    scan.R_max = 0.6;
    CHECK_THROWS_AS(innermost_invariant_radius(figure(1.0), scan), NumericalError);
  }
  SUBCASE("bad ranges") {
    scan.R_min = 2.0;
    scan.R_max = 1.0;
    CHECK_THROWS_AS(innermost_invariant_radius(figure(1.0), scan), DomainError);
  }
}

TEST_CASE("log-log fit") {
  std::vector<ScalingPoint> pts;
  for (double v : {10.0, 100.0, 1000.0, 10000.0}) pts.push_back({v, 3.0 * std::pow(v, 0.5), true});
  const auto f = fit_loglog(pts);
  CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log10(3.0)).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  pts[1].R_star *= std::pow(10.0, 0.1);
  CHECK(fit_loglog(pts).residual > 0.05);
  CHECK_THROWS_AS(fit_loglog({pts[0]}), DomainError);
}

TEST_CASE("portraits record every iterate") {
  const auto sys = figure(0.5);
  const std::vector<PhaseState> seeds{{0.5, 0.0}, {5.0, 0.0}};
  const auto p = phase_portrait(sys, seeds, 300, 512);
  REQUIRE(p.size() == 2);
  CHECK(p[0].iterates.size() == 300u);
  const auto ref = poincare(sys, seeds[1], 300, {});
  CHECK(p[1].iterates.back().R == doctest::Approx(ref.back().R).epsilon(1e-10));
}
