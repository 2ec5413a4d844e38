#include "kamlattice/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kamlattice/actionangle.hpp"

namespace kamlattice {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kC = 126.0 / 25.0;
constexpr double kLog2 = 0.69314718055994530942;

using i128 = __int128;

std::int64_t isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && static_cast<i128>(r) * r > n) --r;
  while (static_cast<i128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

TorusCertificate evaluate_impl(const CertificateContext& ctx, const CertificateInput& in,
                               bool fast) {
  TorusCertificate c;
  c.input = in;
  c.eta = 18.0 * in.gamma;
  c.condM = ctx.valid;
  if (!ctx.valid) {
    c.diagnostics.push_back("M <= 1: log M is not positive, condition 1 < M fails");
    c.logM = kNaN;
    c.omega = in.omega.value_or(kNaN);
    c.m = c.rho = c.L = c.A = c.B = c.delta = kNaN;
    c.z2_norm = in.z2_strip_norm.value_or(kNaN);
    c.z2_bound = c.g_norm = c.dg_norm = c.F1_norm = c.F2_norm = c.F_norm = kNaN;
    c.C = c.alpha0 = c.b = c.lambert = c.omega0 = c.band_J = kNaN;
    return c;
  }
  const double M = ctx.M;
  const double logM = ctx.logM;
  const double M13 = ctx.M13;
  const double Mm13 = 1.0 / M13;
  const double b1 = ctx.b1;
  const double b1m43 = ctx.b1m43;
  const double eta = c.eta;
  const double d = in.d;
  const double b2 = in.b2;
  const double nu = in.nu;
  c.logM = logM;
  c.omega = ctx.omega;
  if (in.omega) {
    if (std::abs(*in.omega - ctx.omega) > 1e-9 * std::abs(ctx.omega)) {
      c.diagnostics.push_back("supplied omega is inconsistent with M");
    }
    c.omega = *in.omega;
  }
  c.m = (b2 / logM) * ctx.omega / 3.0;
  c.rho = eta / (3.0 * c.m);
  c.band_J = 11.0 / 19.0 * d + c.rho;
  if (in.z4) {
    const double I0 = M / *in.z4;
    c.I0 = I0;
    c.band_I = b2 * I0 / logM * c.band_J;
  }

  c.L = std::pow(2.0, 4.0 / 3.0) * 3.0 * std::pow(b1, 4.0 / 3.0) * eta * Mm13 +
        2.0 * b2 * d / logM;
  c.condL = c.L <= 47.0 / 200.0;
  if (fast && !c.condL) return c;

  const double k = 1.0 + 24.0 * b1 * (eta + 2.0 * d);
  const double L = c.L;
  c.condF = b2 <= 18.0 * k * std::pow(1.0 + L, 2.0 / 3.0) * std::cbrt(1.0 - L) * logM;
  if (fast && !c.condF) return c;

  const double eta6 = std::pow(eta, 6.0);
  c.B = std::pow(2.0, -13.0 / 3.0) * 27.0 * 5764801.0 / kC * d * b1m43 * b2 / eta6 *
        (1.0 / logM + std::pow(2.0, -7.0 / 3.0) / 3.0 * b1m43 * b2 * M13 / (logM * logM));
  c.condb = 2.0 <= c.B * M13;
  if (fast && !c.condb) return c;

  const double oneMinusL53 = std::pow(1.0 - L, -5.0 / 3.0);
  const double X = (2.0 * eta / 3.0) * Mm13 * logM +
                   (std::pow(2.0, 2.0 / 3.0) / 9.0 + 3.5 * nu) * d * b1m43 * b2 +
                   std::pow(2.0, -1.0 / 3.0) / 27.0 * b1m43 * oneMinusL53 * L * L * logM;
  const double Y = 2.0 * Mm13 * logM + 1.5 * nu * d * b1m43 * b2;
  c.A = (1.0 + 4.0 * (eta + 2.0 * d)) / d * std::max(X, Y);
  c.cond1 = c.A * (1.0 + 3.0 * std::log(c.B) / logM) <= std::pow(2.0, -4.0 / 3.0) * b1m43 * kLog2;
  if (fast && !c.cond1) return c;

  c.delta = std::pow(2.0, -1.0 / 3.0) / 3.0 * nu * d * b2 * b2 * std::pow(b1, -5.0 / 3.0) *
            std::pow(1.0 + L, -2.0 / 3.0) / (k * k * k);
  c.z2_bound = c.delta * M13 * M13 / (logM * logM);
  c.z2_norm = in.z2_strip_norm.value_or(c.z2_bound);
  c.cond_last = c.z2_norm <= c.z2_bound;
  if (fast && !c.cond_last) return c;

  // dg/dJ bound on |J| <= rho + 2d (the twist condition) and the g bound.
  c.dg_norm = 1.0 / 27.0 * std::pow(2.0, -1.0 / 3.0) * b1m43 * b2 * M13 / logM * oneMinusL53 * L;
  c.twist = c.dg_norm < c.m / 4.0;
  if (fast && !c.twist) return c;
  c.g_norm = std::pow(2.0, -4.0 / 3.0) / 27.0 * b1m43 * oneMinusL53 * L * L * M13;
  c.F1_norm = 1.0 / 3.0 * std::pow(2.0, -2.0 / 3.0) * std::pow(b1, -2.0 / 3.0) * c.z2_norm * k * k *
              Mm13 / std::cbrt(1.0 - L);
  c.F2_norm = 3.0 * std::cbrt(2.0) * std::cbrt(b1) * c.z2_norm * k * k * k / b2 * logM * Mm13 *
              std::pow(1.0 + L, 2.0 / 3.0);
  c.F_norm = std::max(c.F1_norm, c.F2_norm);
  const double Fn = c.F_norm;
  const double m = c.m;
  c.C = 2.0 / 3.0 * std::max(m * (2.0 * d + c.rho) + c.g_norm + Fn, 1.0);
  c.alpha0 = (3.0 + 12.0 * (eta + 2.0 * d)) / (2.0 * d) *
             (Fn + 2.0 * c.C * std::max(1.0, 2.0 * Fn / (m * d)));
  const double eg = eta - 6.0 * in.gamma;
  c.b = (2.0 + 3.0 * m) / (kC * in.gamma * in.gamma) *
        std::max(12.0, 5764801.0 / (108.0 * eg * eg * eg * eg)) * std::max(m * d, 2.0 * Fn);
  c.lambert = lambert_w(c.b * kLog2);
  c.omega0 = c.alpha0 * std::max(1.0, c.lambert / kLog2);
  if (c.b >= 2.0) {
    c.lambert_bound_ok = c.lambert <= std::log(c.b);
    if (!c.lambert_bound_ok) c.diagnostics.push_back("L_W(b log 2) > log b although b >= 2");
  }
  c.smallness = c.omega0 <= c.omega;

  c.pass = c.condM && c.condL && c.condF && c.condb && c.cond1 && c.cond_last && c.twist &&
           c.smallness;
  return c;
}

}  // namespace

double nu_max() { return std::pow(2.0, -7.0 / 3.0) / 9.0; }

double necessary_M_bound() {
  const double b1 = b1_constant();
  return 65536.0 * 27.0 * b1 * b1 * b1 * b1;
}

double strip_norm(const NormalizedSystem& sys, double d) {
  if (!(d > 0.0)) throw DomainError("strip half-width d must be positive");
  double v = std::abs(sys.z2_mean);
  for (const auto& m : sys.z2_modes) v += std::abs(m.amplitude) * std::cosh(4.0 * kPi * m.harmonic * d);
  return v;
}

double lambert_w(double x) {
  if (!(x >= 0.0)) throw DomainError("Lambert W principal branch requires x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  double w = x < 2.718281828459045 ? std::log1p(x) * 0.8 : std::log(x) - std::log(std::log(x));
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
  }
  return w;
}

double QuadraticSurd::value() const {
  return (static_cast<double>(P) + std::sqrt(static_cast<double>(D))) / static_cast<double>(Q);
}

ConstantTypeReport constant_type(const QuadraticSurd& omega, std::int64_t Qmax) {
  if (Qmax < 2) throw DomainError("constant-type check requires Q >= 2");
  if (omega.Q == 0 || omega.D < 0) throw DomainError("invalid quadratic surd");
  ConstantTypeReport rep;
  rep.omega = omega.value();
  rep.Q = Qmax;

  i128 P = omega.P;
  i128 D = omega.D;
  i128 Q = omega.Q;
  const std::int64_t s0 = isqrt(omega.D);
  const bool rational = static_cast<i128>(s0) * s0 == D;
  if (rational) {
    P += s0;
    D = 0;
  } else if ((D - P * P) % Q != 0) {
    // Rescale so that Q divides D - P^2, as the recurrence requires.
    const i128 aq = Q < 0 ? -Q : Q;
    P *= aq;
    D *= aq * aq;
    Q *= aq;
  }
  const std::int64_t s = rational ? 0 : isqrt(static_cast<std::int64_t>(D));
  const long double sqrtD = std::sqrt(static_cast<long double>(D));

  // Convergents p_k / q_k; q^2 |omega - p/q| = 1 / (alpha_{k+1} + q_{k-1}/q_k).
  i128 p_prev = 0;
  i128 q_prev = 1;
  i128 p_cur = 1;
  i128 q_cur = 0;
  double gamma_uniform = std::numeric_limits<double>::infinity();
  double gamma_tail = std::numeric_limits<double>::infinity();
  const double tail_start = std::sqrt(static_cast<double>(Qmax));
  bool terminated = false;
  for (int iter = 0; iter < 10000; ++iter) {
    i128 a;
    if (rational) {
      a = floor_div(P, Q);
    } else {
      a = Q > 0 ? floor_div(P + s, Q) : floor_div(P + s + 1, Q);
    }
    const i128 q_next = a * q_cur + q_prev;
    if (q_next > Qmax) break;
    const i128 p_next = a * p_cur + p_prev;
    rep.partial_quotients.push_back(static_cast<std::int64_t>(a));
    if (iter > 0) rep.max_partial_quotient = std::max(rep.max_partial_quotient, static_cast<std::int64_t>(a));
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;

    // Complete quotient alpha_{k+1}.
    double val;
    if (rational) {
      const i128 rem = P - a * Q;
      if (rem == 0) {
        terminated = true;
        break;
      }
      P = Q;
      Q = rem;
      const double alpha = static_cast<double>(P) / static_cast<double>(Q);
      val = 1.0 / (alpha + static_cast<double>(q_prev) / static_cast<double>(q_cur));
    } else {
      const i128 Pn = a * Q - P;
      Q = (D - Pn * Pn) / Q;
      P = Pn;
      const long double alpha = (static_cast<long double>(P) + sqrtD) / static_cast<long double>(Q);
      val = static_cast<double>(
          1.0L / (alpha + static_cast<long double>(q_prev) / static_cast<long double>(q_cur)));
    }
    gamma_uniform = std::min(gamma_uniform, val);
    if (static_cast<double>(q_cur) >= tail_start) gamma_tail = std::min(gamma_tail, val);
  }
  if (rational) {
    rep.constant_type = false;
    rep.gamma_empirical = 0.0;
    rep.gamma_uniform = 0.0;
    rep.note = terminated ? "rational: not constant type"
                          : "rational: not constant type (denominator exceeds Q)";
    return rep;
  }
  rep.constant_type = true;
  rep.gamma_uniform = std::isfinite(gamma_uniform) ? gamma_uniform : kNaN;
  rep.gamma_empirical = std::isfinite(gamma_tail) ? gamma_tail : rep.gamma_uniform;
  rep.note = "quadratic irrational: periodic continued fraction, constant type";
  return rep;
}

CertificateContext certificate_context(double M) {
  CertificateContext ctx;
  ctx.M = M;
  ctx.b1 = b1_constant();
  ctx.b1m43 = std::pow(ctx.b1, -4.0 / 3.0);
  ctx.valid = M > 1.0 && std::isfinite(M);
  if (ctx.valid) {
    ctx.logM = std::log(M);
    ctx.M13 = std::cbrt(M);
    ctx.omega = 1.0 / 3.0 * std::pow(2.0, -4.0 / 3.0) * ctx.b1m43 * ctx.M13;
  }
  return ctx;
}

void validate(const CertificateInput& in) {
  if (!(in.gamma > 0.0 && in.gamma <= kGammaMax)) throw DomainError("gamma must lie in (0, 49/72]");
  if (!(in.nu >= 0.0 && in.nu <= nu_max())) throw DomainError("nu must lie in [0, 2^{-7/3}/9]");
  if (!(in.d > 0.0) || !std::isfinite(in.d)) throw DomainError("d must be positive");
  if (!(in.b2 > 0.0) || !std::isfinite(in.b2)) throw DomainError("b2 must be positive");
  if (std::isnan(in.M)) throw DomainError("M must be a number");
  if (in.z2_strip_norm && !(*in.z2_strip_norm >= 0.0)) throw DomainError("strip norm must be >= 0");
  if (in.z4 && !(*in.z4 > 0.0)) throw DomainError("z4 must be positive");
}

TorusCertificate evaluate(const CertificateInput& in) {
  validate(in);
  return evaluate_impl(certificate_context(in.M), in, false);
}

TorusCertificate evaluate_fast(const CertificateContext& ctx, const CertificateInput& in) {
  return evaluate_impl(ctx, in, true);
}

double physical_threshold(const PhysicalParams& p, double omega) {
  if (!(p.g < 0.0)) throw DomainError("repulsive regime unbounded");
  const double kappa = period_structure(p.kappa_ref, p.modes).kappa;
  return 3.0 * b1_constant() * p.hbar * kappa * omega / (kPi * std::sqrt(-p.mass * p.g));
}

nlohmann::json to_json(const TorusCertificate& c) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json in = {{"M", c.input.M}, {"b2", c.input.b2}, {"gamma", c.input.gamma},
             {"d", c.input.d}, {"nu", c.input.nu}};
  in["z2_strip_norm"] = c.input.z2_strip_norm ? json(*c.input.z2_strip_norm) : json(nullptr);
  in["omega"] = c.input.omega ? json(*c.input.omega) : json(nullptr);
  in["z4"] = c.input.z4 ? json(*c.input.z4) : json(nullptr);
  json j;
  j["schema"] = kCertificateSchema;
  j["input"] = in;
  j["conditions"] = {{"cond1", c.cond1},   {"condM", c.condM},         {"condL", c.condL},
                     {"condF", c.condF},   {"condb", c.condb},         {"cond_last", c.cond_last},
                     {"twist", c.twist},   {"smallness", c.smallness}, {"lambert_bound", c.lambert_bound_ok}};
  j["pass"] = c.pass;
  j["quantities"] = {{"logM", num(c.logM)},   {"omega", num(c.omega)},     {"m", num(c.m)},
                     {"eta", num(c.eta)},     {"rho", num(c.rho)},         {"L", num(c.L)},
                     {"A", num(c.A)},         {"B", num(c.B)},             {"delta", num(c.delta)},
                     {"z2_norm", num(c.z2_norm)}, {"z2_bound", num(c.z2_bound)},
                     {"g_norm", num(c.g_norm)},   {"dg_norm", num(c.dg_norm)},
                     {"F1_norm", num(c.F1_norm)}, {"F2_norm", num(c.F2_norm)},
                     {"F_norm", num(c.F_norm)},   {"C", num(c.C)},
                     {"alpha0", num(c.alpha0)},   {"b", num(c.b)},
                     {"L_W", num(c.lambert)},     {"omega0", num(c.omega0)}};
  j["torus_band"] = {{"J_half_width", num(c.band_J)},
                     {"I0", c.I0 ? num(*c.I0) : json(nullptr)},
                     {"I_half_width", c.band_I ? num(*c.band_I) : json(nullptr)}};
  j["diagnostics"] = c.diagnostics;
  return j;
}

nlohmann::json to_json(const ConstantTypeReport& r) {
  return {{"omega", r.omega},
          {"Q", r.Q},
          {"gamma_empirical", r.gamma_empirical},
          {"gamma_uniform", r.gamma_uniform},
          {"constant_type", r.constant_type},
          {"max_partial_quotient", r.max_partial_quotient},
          {"partial_quotients", r.partial_quotients},
          {"note", r.note}};
}

}  // namespace kamlattice
