#pragma once

// Evaluation of the invariant-torus certificate for the localized system, plus
// the number-theoretic and special-function helpers it needs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kamlattice/model.hpp"

namespace kamlattice {

inline constexpr double kGammaMax = 49.0 / 72.0;
/// (1/9) 2^{-7/3}
double nu_max();
/// 2^16 3^3 b1^4: no tuple with smaller M can pass.
double necessary_M_bound();

/// Closed-form bound |mean| + sum |a_j| cosh(4 pi j d) of |z2| on |Im xi| <= 2d.
double strip_norm(const NormalizedSystem& sys, double d);

/// Principal branch of Lambert W on [0, inf).
double lambert_w(double x);

/// Exact frequency (P + sqrt(D)) / Q with integer P, D >= 0, Q != 0. D = 0 or a
/// perfect square gives a rational.
struct QuadraticSurd {
  std::int64_t P = 0;
  std::int64_t D = 0;
  std::int64_t Q = 1;

  double value() const;
  static QuadraticSurd golden_mean() { return {1, 5, 2}; }
  static QuadraticSurd rational(std::int64_t p, std::int64_t q) { return {p, 0, q}; }
};

struct ConstantTypeReport {
  double omega = 0.0;
  std::int64_t Q = 0;
  /// min of q^2 |omega - p/q| over convergents with sqrt(Q) <= q <= Q.
  double gamma_empirical = 0.0;
  /// min over all convergents with q <= Q; non-increasing in Q.
  double gamma_uniform = 0.0;
  bool constant_type = false;
  std::int64_t max_partial_quotient = 0;
  std::vector<std::int64_t> partial_quotients;
  std::string note;
};

ConstantTypeReport constant_type(const QuadraticSurd& omega, std::int64_t Q);

struct CertificateInput {
  double M = 0.0;
  double b2 = 0.0;
  double gamma = 0.0;
  double d = 0.0;
  double nu = 0.0;
  /// ||z2|| on the strip; absent means the largest value the last condition admits.
  std::optional<double> z2_strip_norm;
  /// Target frequency; derived from M when absent, checked against M when given.
  std::optional<double> omega;
  /// Quartic coefficient, only used to express the torus band in action units.
  std::optional<double> z4;
};

struct TorusCertificate {
  CertificateInput input;
  bool cond1 = false;
  bool condM = false;
  bool condL = false;
  bool condF = false;
  bool condb = false;
  bool cond_last = false;
  bool twist = false;
  bool smallness = false;
  bool lambert_bound_ok = true;
  bool pass = false;

  double logM = 0.0;
  double omega = 0.0;
  double m = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  double L = 0.0;
  double A = 0.0;
  double B = 0.0;
  double delta = 0.0;
  double z2_norm = 0.0;
  double z2_bound = 0.0;  // delta M^{2/3} / log^2 M
  double g_norm = 0.0;
  double dg_norm = 0.0;
  double F1_norm = 0.0;
  double F2_norm = 0.0;
  double F_norm = 0.0;
  double C = 0.0;
  double alpha0 = 0.0;
  double b = 0.0;
  double lambert = 0.0;  // L_W(b log 2)
  double omega0 = 0.0;
  double band_J = 0.0;   // |J| <= 11/19 d + rho
  std::optional<double> I0;
  std::optional<double> band_I;  // beta (11/19 d + rho)
  std::vector<std::string> diagnostics;
};

/// Per-M constants shared by many evaluations.
struct CertificateContext {
  double M = 0.0;
  double logM = 0.0;
  double M13 = 0.0;
  double b1 = 0.0;
  double b1m43 = 0.0;
  double omega = 0.0;
  bool valid = false;  // M > 1
};

CertificateContext certificate_context(double M);

/// Full evaluation: every quantity that is defined is computed.
TorusCertificate evaluate(const CertificateInput& in);

/// Cheap conditions first, stopping at the first failure; fields after the
/// failing check are left unset. Gives the same values as evaluate() for the
/// quantities it computes.
TorusCertificate evaluate_fast(const CertificateContext& ctx, const CertificateInput& in);

void validate(const CertificateInput& in);

/// R_max = 3 b1 hbar kappa omega / (pi sqrt(-m g)), kappa the gcd wavenumber.
double physical_threshold(const PhysicalParams& p, double omega);

inline constexpr const char* kCertificateSchema = "kamlattice.certificate/1";
nlohmann::json to_json(const TorusCertificate& c);
nlohmann::json to_json(const ConstantTypeReport& r);

}  // namespace kamlattice
