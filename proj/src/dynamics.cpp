#include "kamlattice/dynamics.hpp"

#include <cmath>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "kamlattice/parallel.hpp"

namespace kamlattice {

namespace {

bool escaped_value(double R, double S) {
  return !(std::abs(R) <= kEscapeRadius) || !std::isfinite(S);
}

using RkState = std::array<double, 6>;

struct RkField {
  const NormalizedSystem* sys;
  void operator()(const RkState& x, RkState& dx, double xi) const {
    const double z2 = sys->z2(xi);
    const double R2 = x[0] * x[0];
    const double stiff = 2.0 * z2 + 12.0 * sys->z4 * R2;
    dx[0] = x[1];
    dx[1] = -(2.0 * z2 + 4.0 * sys->z4 * R2) * x[0];
    dx[2] = x[3];
    dx[3] = -stiff * x[2];
    dx[4] = x[5];
    dx[5] = -stiff * x[4];
  }
};

void rk_advance(const NormalizedSystem& sys, RkState& x, double xi0, double xi1, double tol) {
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<RkState>());
  ode::integrate_adaptive(stepper, RkField{&sys}, x, xi0, xi1, (xi1 - xi0) / 64.0);
}

// Symplectic step from arbitrary xi, evaluating z2 directly.
void symplectic_advance(const NormalizedSystem& sys, double& R, double& S, double xi0,
                        double span, int steps) {
  const double h = span / steps;
  const auto& g = kernels::kCompositionWeights;
  for (int k = 0; k < steps; ++k) {
    const double base = xi0 + k * h;
    double c = 0.0;
    for (int i = 0; i < kernels::kStages; ++i) {
      const double prev = i == 0 ? 0.0 : g[i - 1];
      R = R + 0.5 * (prev + g[i]) * h * S;
      const double z2 = sys.z2(base + (c + 0.5 * g[i]) * h);
      S = S - g[i] * h * ((2.0 * z2 + 4.0 * sys.z4 * R * R) * R);
      c += g[i];
    }
    R = R + 0.5 * g[kernels::kStages - 1] * h * S;
  }
}

}  // namespace

void IntegratorConfig::validate() const {
  if (steps_per_period < 16) throw DomainError("steps_per_period must be at least 16");
  if (!(rk_tolerance > 0.0 && rk_tolerance <= 1e-3)) {
    throw DomainError("rk_tolerance must lie in (0, 1e-3]");
  }
}

const char* to_string(Scheme s) { return s == Scheme::symplectic6 ? "symplectic6" : "rk_adaptive"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "symplectic6") return Scheme::symplectic6;
  if (s == "rk_adaptive") return Scheme::rk_adaptive;
  throw ConfigError("unknown scheme \"" + s + "\" (expected symplectic6 or rk_adaptive)");
}

EscapeError::EscapeError(const PhaseState& last, long period)
    : NumericalError("orbit escaped (|R| > 1e12 or non-finite) at period " + std::to_string(period)),
      last_(last),
      period_(period) {}

PhaseState integrate(const NormalizedSystem& sys, const PhaseState& s0, double delta_xi,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(delta_xi >= 0.0)) throw DomainError("delta_xi must be non-negative");
  if (delta_xi == 0.0) return s0;
  double R = s0.R;
  double S = s0.S;
  double xi = s0.xi;
  double remaining = delta_xi;
  long period = 0;
  RkState x{R, S, 0.0, 0.0, 0.0, 0.0};
  while (remaining > 0.0) {
    const double span = std::min(1.0, remaining);
    const PhaseState last{R, S, xi - std::floor(xi)};
    if (cfg.scheme == Scheme::symplectic6) {
      const int steps = std::max(1, static_cast<int>(std::ceil(span * cfg.steps_per_period - 1e-9)));
      symplectic_advance(sys, R, S, xi, span, steps);
    } else {
      x[0] = R;
      x[1] = S;
      rk_advance(sys, x, xi, xi + span, cfg.rk_tolerance);
      R = x[0];
      S = x[1];
    }
    xi += span;
    remaining -= span;
    ++period;
    if (escaped_value(R, S)) throw EscapeError(last, period);
  }
  double frac = xi - std::floor(xi);
  if (frac >= 1.0) frac = 0.0;
  return {R, S, frac};
}

std::vector<PhaseState> poincare(const NormalizedSystem& sys, const PhaseState& s0, long n,
                                 const IntegratorConfig& cfg) {
  cfg.validate();
  if (s0.xi != 0.0) throw DomainError("Poincare seeds must lie on the section xi = 0");
  std::vector<PhaseState> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, n)));
  if (cfg.scheme == Scheme::rk_adaptive) {
    RkState x{s0.R, s0.S, 0.0, 0.0, 0.0, 0.0};
    for (long k = 0; k < n; ++k) {
      const PhaseState last{x[0], x[1], 0.0};
      rk_advance(sys, x, 0.0, 1.0, cfg.rk_tolerance);
      if (escaped_value(x[0], x[1])) throw EscapeError(last, k + 1);
      out.push_back({x[0], x[1], 0.0});
    }
    return out;
  }
  Ensemble ens(sys, cfg.steps_per_period, std::span<const PhaseState>(&s0, 1), 0);
  for (long k = 0; k < n; ++k) {
    ens.step();
    if (ens.escaped(0)) throw EscapeError(ens.escape_state(0), ens.escape_period(0));
    out.push_back({ens.R(0), ens.S(0), 0.0});
  }
  return out;
}

TangentState poincare_tangent(const NormalizedSystem& sys, const PhaseState& s0, long n,
                              const IntegratorConfig& cfg) {
  cfg.validate();
  if (s0.xi != 0.0) throw DomainError("Poincare seeds must lie on the section xi = 0");
  TangentState t;
  t.base = s0;
  if (n <= 0) return t;
  if (cfg.scheme == Scheme::rk_adaptive) {
    RkState x{s0.R, s0.S, 1.0, 0.0, 0.0, 1.0};
    for (long k = 0; k < n; ++k) {
      const PhaseState last{x[0], x[1], 0.0};
      rk_advance(sys, x, 0.0, 1.0, cfg.rk_tolerance);
      if (escaped_value(x[0], x[1])) throw EscapeError(last, k + 1);
    }
    t.base = {x[0], x[1], 0.0};
    t.matrix = {x[2], x[4], x[3], x[5]};
    return t;
  }
  Ensemble ens(sys, cfg.steps_per_period, std::span<const PhaseState>(&s0, 1), 2);
  for (long k = 0; k < n; ++k) {
    ens.step();
    if (ens.escaped(0)) throw EscapeError(ens.escape_state(0), ens.escape_period(0));
  }
  t.base = {ens.R(0), ens.S(0), 0.0};
  t.matrix = {ens.tangent_R(0, 0), ens.tangent_R(1, 0), ens.tangent_S(0, 0), ens.tangent_S(1, 0)};
  return t;
}

double check_reversibility(const NormalizedSystem& sys, std::span<const PhaseState> samples,
                           const IntegratorConfig& cfg) {
  cfg.validate();
  double worst = 0.0;
  for (const auto& x : samples) {
    const PhaseState y = poincare(sys, x, 1, cfg).front();
    const std::array<PhaseState, 2> reflected = {PhaseState{y.R, -y.S, 0.0},
                                                 PhaseState{-y.R, y.S, 0.0}};
    for (int j = 0; j < 2; ++j) {
      const PhaseState z = poincare(sys, reflected[j], 1, cfg).front();
      const PhaseState w = j == 0 ? PhaseState{z.R, -z.S, 0.0} : PhaseState{-z.R, z.S, 0.0};
      worst = std::max(worst, std::hypot(w.R - x.R, w.S - x.S));
    }
  }
  return worst;
}

Ensemble::Ensemble(const NormalizedSystem& sys, int steps_per_period,
                   std::span<const PhaseState> seeds, int tangent_columns, kernels::Kernel kernel)
    : table_(kernels::make_kick_table(sys, steps_per_period)),
      storage_(seeds.size(), tangent_columns),
      kernel_(kernel),
      escaped_(seeds.size(), 0),
      escape_period_(seeds.size(), -1),
      escape_state_(seeds.size()) {
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    if (seeds[j].xi != 0.0) throw DomainError("ensemble seeds must lie on the section xi = 0");
    storage_.R[j] = seeds[j].R;
    storage_.S[j] = seeds[j].S;
    for (int c = 0; c < tangent_columns; ++c) {
      storage_.tR[c][j] = c == 0 ? 1.0 : 0.0;
      storage_.tS[c][j] = c == 0 ? 0.0 : 1.0;
    }
  }
}

void Ensemble::step() {
  const kernels::Lanes lanes = storage_.view();
  prev_R_ = storage_.R;
  prev_S_ = storage_.S;
  const bool simd = kernel_ == kernels::Kernel::avx2 && kernels::avx2_available();
  parallel_chunks(lanes.count, 4, [&](std::size_t b, std::size_t e) {
    if (simd) {
      kernels::advance_period_avx2(table_, lanes, b, e);
    } else {
      kernels::advance_period_scalar(table_, lanes, b, e);
    }
  });
  ++periods_;
  for (std::size_t j = 0; j < lanes.count; ++j) {
    if (escaped_[j] || !escaped_value(storage_.R[j], storage_.S[j])) continue;
    escaped_[j] = 1;
    escape_period_[j] = periods_;
    escape_state_[j] = {prev_R_[j], prev_S_[j], 0.0};
    storage_.R[j] = storage_.S[j] = storage_.W[j] = 0.0;
    for (int c = 0; c < lanes.tangent_columns; ++c) storage_.tR[c][j] = storage_.tS[c][j] = 0.0;
  }
}

double Ensemble::lift(std::size_t j) const {
  return std::atan2(storage_.R[j], storage_.S[j]) + kTwoPi * storage_.W[j];
}

void Ensemble::set_tangent(int c, std::size_t j, double dR, double dS) {
  storage_.tR[c][j] = dR;
  storage_.tS[c][j] = dS;
}

bool Ensemble::any_escaped() const {
  for (char e : escaped_) {
    if (e) return true;
  }
  return false;
}

}  // namespace kamlattice
