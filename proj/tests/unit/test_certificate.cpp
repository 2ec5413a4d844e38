#include <doctest.h>

#include <cmath>
#include <random>

#include "kamlattice/actionangle.hpp"
#include "kamlattice/certificate.hpp"

using namespace kamlattice;

namespace {

CertificateInput tuple(double M, double b2, double gamma, double d, double nu) {
  CertificateInput in;
  in.M = M;
  in.b2 = b2;
  in.gamma = gamma;
  in.d = d;
  in.nu = nu;
  return in;
}

CertificateInput random_input(std::mt19937_64& rng, double logM_lo, double logM_hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CertificateInput in;
  in.M = std::pow(10.0, logM_lo + (logM_hi - logM_lo) * u(rng));
  in.b2 = std::pow(10.0, -6.0 + 6.0 * u(rng));
  in.gamma = kGammaMax * std::pow(10.0, -3.0 * u(rng));
  in.d = std::pow(10.0, -3.0 + 4.0 * u(rng));
  in.nu = nu_max() * u(rng);
  return in;
}

bool six_conditions(const TorusCertificate& c) {
  return c.condM && c.cond1 && c.condL && c.condF && c.condb && c.cond_last;
}

}  // namespace

TEST_CASE("necessary lower bound on M") {
  const double b1 = b1_constant();
  CHECK(necessary_M_bound() == doctest::Approx(65536.0 * 27.0 * std::pow(b1, 4)).epsilon(1e-15));
  CHECK(necessary_M_bound() == doctest::Approx(1.033e6).epsilon(1e-3));
  std::mt19937_64 rng(41);
  long passes = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto c = evaluate(random_input(rng, -1.0, 6.0));
    passes += c.pass ? 1 : 0;
  }
  CHECK(passes == 0);
}

TEST_CASE("closed parameter bounds are accepted, values beyond them are not") {
  CertificateInput in = tuple(1e12, 1e-3, kGammaMax, 0.1, nu_max());
  CHECK_NOTHROW(evaluate(in));
  in.gamma = kGammaMax * (1.0 + 1e-12);
  CHECK_THROWS_AS(evaluate(in), DomainError);
  in.gamma = kGammaMax;
  in.nu = nu_max() * (1.0 + 1e-12);
  CHECK_THROWS_AS(evaluate(in), DomainError);
  in.nu = 0.0;
  CHECK_NOTHROW(evaluate(in));
  in.d = 0.0;
  CHECK_THROWS_AS(evaluate(in), DomainError);
  CHECK(nu_max() == doctest::Approx(0.022048).epsilon(1e-4));
}

TEST_CASE("M <= 1 fails condM with a diagnostic") {
  for (double M : {1.0, 0.5, 1e-3}) {
    const auto c = evaluate(tuple(M, 0.1, 0.1, 0.1, 0.01));
    CHECK_FALSE(c.condM);
    CHECK_FALSE(c.pass);
    CHECK_FALSE(c.diagnostics.empty());
  }
}

TEST_CASE("auxiliary quantities satisfy their defining identities") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 2000; ++i) {
    const auto in = random_input(rng, 6.0, 18.0);
    const auto c = evaluate(in);
    const double b1 = b1_constant();
    const double logM = std::log(in.M);
    const double omega = K0_and_derivatives(1.0, in.M).dK0;  // z4 = 1, I0 = M
    CHECK(c.omega == doctest::Approx(omega).epsilon(1e-13));
    const double m = (in.b2 * in.M / logM) * K0_and_derivatives(1.0, in.M).d2K0;
    CHECK(c.m == doctest::Approx(m).epsilon(1e-13));
    CHECK(c.eta == doctest::Approx(18.0 * in.gamma).epsilon(1e-15));
    CHECK(c.rho == doctest::Approx(c.eta / (3.0 * m)).epsilon(1e-13));
    // L bounds |b2 J / log M| on |J| <= rho + 2d.
    CHECK(c.L == doctest::Approx(in.b2 * (c.rho + 2.0 * in.d) / logM).epsilon(1e-12));
    CHECK(c.band_J == doctest::Approx(11.0 / 19.0 * in.d + c.rho).epsilon(1e-15));
    (void)b1;
  }
}

TEST_CASE("the six conditions imply twist, smallness and the lemma bounds") {
  std::mt19937_64 rng(47);
  int checked = 0;
  for (int i = 0; i < 400000 && checked < 500; ++i) {
    const auto in = random_input(rng, 8.0, 18.0);
    const auto c = evaluate(in);
    if (!six_conditions(c)) continue;
    ++checked;
    const double logM = std::log(in.M);
    const double M13 = std::cbrt(in.M);
    const double b1m43 = std::pow(b1_constant(), -4.0 / 3.0);
    CHECK(c.twist);
    CHECK(c.smallness);
    CHECK(c.pass);
    CHECK(2.0 * c.F_norm <= c.m * in.d * (1.0 + 1e-12));
    CHECK(c.F_norm <= in.nu * in.d * b1m43 * in.b2 * M13 / logM * (1.0 + 1e-12));
    // With eta = 18 gamma and 2||F|| <= m d, b collapses to B M^{1/3}.
    CHECK(c.b == doctest::Approx(c.B * M13).epsilon(1e-12));
    CHECK(c.alpha0 <= c.A * M13 / logM * (1.0 + 1e-12));
    CHECK(c.omega0 <= c.A / std::log(2.0) * (1.0 / 3.0 + std::log(c.B) / logM) * M13 * (1.0 + 1e-12));
    CHECK(c.lambert_bound_ok);
  }
  CHECK(checked >= 100);
}

TEST_CASE("strip-norm monotonicity of the last condition") {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 20000; ++i) {
    auto in = random_input(rng, 6.0, 18.0);
    const double base = std::pow(10.0, -12.0 + 14.0 * std::uniform_real_distribution<double>(0, 1)(rng));
    in.z2_strip_norm = base;
    const auto a = evaluate(in);
    in.z2_strip_norm = base * 3.0;
    const auto b = evaluate(in);
    CHECK(!(b.cond_last && !a.cond_last));
    CHECK(!(b.pass && !a.pass));
  }
}

TEST_CASE("certificates are deterministic") {
  CertificateInput in = tuple(3.7e13, 2e-3, 1e-3, 0.05, 0.02);
  in.z2_strip_norm = 1e-4;
  in.z4 = 2.5;
  CHECK(to_json(evaluate(in)).dump() == to_json(evaluate(in)).dump());
  const auto j = to_json(evaluate(in));
  CHECK(j["schema"] == kCertificateSchema);
  for (const char* k : {"L", "A", "B", "delta", "eta", "rho", "b", "alpha0", "C", "omega0"}) {
    CHECK(j["quantities"].contains(k));
  }
}

TEST_CASE("supplied omega is checked against M") {
  CertificateInput in = tuple(1e12, 1e-3, 0.01, 0.05, 0.01);
  const double w = evaluate(in).omega;
  in.omega = w * (1.0 + 1e-12);
  CHECK(evaluate(in).diagnostics.empty());
  in.omega = w * 1.01;
  CHECK_FALSE(evaluate(in).diagnostics.empty());
}

TEST_CASE("fast evaluation agrees with full evaluation") {
  std::mt19937_64 rng(59);
  for (int i = 0; i < 20000; ++i) {
    const auto in = random_input(rng, 6.0, 18.0);
    const auto full = evaluate(in);
    const auto fast = evaluate_fast(certificate_context(in.M), in);
    CHECK(full.pass == fast.pass);
    if (full.pass) CHECK(full.delta == fast.delta);
  }
}

TEST_CASE("Lambert W") {
  CHECK(lambert_w(0.0) == 0.0);
  CHECK(lambert_w(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  // Newton on w e^w - 1.
  double w = 0.5;
  for (int i = 0; i < 50; ++i) w -= (w * std::exp(w) - 1.0) / (std::exp(w) * (w + 1.0));
  CHECK(lambert_w(1.0) == doctest::Approx(w).epsilon(1e-15));
  CHECK(lambert_w(1.0) == doctest::Approx(0.567143).epsilon(1e-6));
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-12.0, 300.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::pow(10.0, u(rng) / 10.0);
    const double W = lambert_w(x);
    CHECK(std::abs(W * std::exp(W) - x) <= 1e-12 * x);
    if (x >= 2.0 * std::log(2.0)) CHECK(W <= std::log(x / std::log(2.0)));
  }
  CHECK_THROWS_AS(lambert_w(-0.1), DomainError);
}

TEST_CASE("strip norm") {
  const auto c = make_normalized(1.0, -0.7);
  CHECK(strip_norm(c, 0.3) == doctest::Approx(0.7));
  const auto one = make_normalized(1.0, 0.2, {{-1.5, 1}});
  CHECK(strip_norm(one, 1e-9) == doctest::Approx(1.7).epsilon(1e-12));
  const auto pure = make_normalized(1.0, 0.0, {{-1.5, 1}});
  const double d = 0.1;
  CHECK(strip_norm(pure, d) == doctest::Approx(1.5 * std::cosh(0.4 * kPi)).epsilon(1e-15));
  // Maximum modulus: sample |z2| on the strip boundary Im xi = 2d.
  double sup = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double x = k / 200000.0;
    const double y = 2.0 * d;
    const double re = std::cos(kTwoPi * x) * std::cosh(kTwoPi * y);
    const double im = -std::sin(kTwoPi * x) * std::sinh(kTwoPi * y);
    sup = std::max(sup, 1.5 * std::hypot(re, im));
  }
  CHECK(std::abs(strip_norm(pure, d) - sup) < 1e-9);
  CHECK_THROWS_AS(strip_norm(pure, 0.0), DomainError);
}

TEST_CASE("constant type: golden mean") {
  const auto r = constant_type(QuadraticSurd::golden_mean(), 1000000);
  CHECK(r.constant_type);
  CHECK(std::abs(r.gamma_empirical - 1.0 / std::sqrt(5.0)) < 1e-3);
  CHECK(r.max_partial_quotient == 1);
  // Brute force over every q <= 10^3.
  const double w = QuadraticSurd::golden_mean().value();
  const auto small = constant_type(QuadraticSurd::golden_mean(), 1000);
  double all = 1e9, tail = 1e9;
  for (int q = 1; q <= 1000; ++q) {
    const double p = std::round(w * q);
    const double v = q * std::abs(q * w - p);
    all = std::min(all, v);
    if (q >= std::sqrt(1000.0)) tail = std::min(tail, v);
  }
  CHECK(small.gamma_uniform == doctest::Approx(all).epsilon(1e-9));
  CHECK(small.gamma_empirical == doctest::Approx(tail).epsilon(1e-9));
}

TEST_CASE("constant type: sqrt 2 and the uniform minimum is non-increasing") {
  const QuadraticSurd s2{0, 2, 1};
  const auto r = constant_type(s2, 1000000);
  CHECK(std::abs(r.gamma_empirical - 1.0 / (2.0 * std::sqrt(2.0))) < 1e-3);
  CHECK(r.max_partial_quotient == 2);
  double prev = 1e9;
  for (std::int64_t Q = 2; Q <= 10000000; Q *= 3) {
    const auto g = constant_type(QuadraticSurd::golden_mean(), Q).gamma_uniform;
    CHECK(g <= prev);
    prev = g;
    const auto h = constant_type(s2, Q).gamma_uniform;
    CHECK(h >= 0.0);
  }
  // Non-reduced input: (1 + sqrt 3) / 3 needs rescaling before the recurrence.
  const QuadraticSurd t{1, 3, 3};
  const auto rt = constant_type(t, 100000);
  CHECK(rt.constant_type);
  double all = 1e9;
  for (int q = 1; q <= 100000; ++q) {
    const double p = std::round(t.value() * q);
    all = std::min(all, q * std::abs(q * t.value() - p));
  }
  CHECK(rt.gamma_uniform == doctest::Approx(all).epsilon(1e-6));
}

TEST_CASE("constant type: rationals") {
  const auto r = constant_type(QuadraticSurd::rational(3, 7), 1000);
  CHECK(r.gamma_empirical == 0.0);
  CHECK(r.gamma_uniform == 0.0);
  CHECK_FALSE(r.constant_type);
  CHECK(r.note.find("not constant type") != std::string::npos);
  const auto sq = constant_type({1, 9, 2}, 1000);  // (1 + 3) / 2
  CHECK_FALSE(sq.constant_type);
  CHECK_THROWS_AS(constant_type(QuadraticSurd::golden_mean(), 1), DomainError);
}

TEST_CASE("physical threshold") {
  PhysicalParams p;
  p.mass = 1.443e-25;
  p.g = -2.0e-37;
  p.mu = 1e-31;
  p.kappa_ref = 7e6;
  p.modes = {{1e-30, Rational(1)}, {3e-31, Rational(3)}};
  const double w = 40.0;
  const double R = physical_threshold(p, w);
  CHECK(physical_threshold(p, 2.0 * w) == doctest::Approx(2.0 * R).epsilon(1e-15));
  PhysicalParams q = p;
  q.g /= 4.0;
  CHECK(physical_threshold(q, w) == doctest::Approx(2.0 * R).epsilon(1e-15));
  // Eliminate I0 between K0'(I0) = omega and R_max = (K0(I0) / z4)^{1/4}.
  const auto sys = normalize(p);
  const double b1 = b1_constant();
  const double I0 = std::pow(3.0 * std::pow(2.0, 4.0 / 3.0) * std::pow(b1, 4.0 / 3.0) * w, 3.0) / sys.z4;
  CHECK(K0_and_derivatives(sys.z4, I0).dK0 == doctest::Approx(w).epsilon(1e-12));
  const double Rm = max_amplitude(sys.z4, energy_from_action(sys.z4, I0));
  CHECK(std::abs(Rm / R - 1.0) < 1e-2);
  CHECK(Rm == doctest::Approx(R).epsilon(1e-12));
  p.g = 1e-37;
  CHECK_THROWS_AS(physical_threshold(p, w), DomainError);
}
