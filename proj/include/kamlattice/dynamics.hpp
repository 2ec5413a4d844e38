#pragma once

// Flow and Poincare return map of the suspended system
//   R' = S,  S' = -(2 z2(xi) R + 4 z4 R^3),  xi' = 1.

#include <array>
#include <span>
#include <vector>

#include "kamlattice/kernels/splitting.hpp"
#include "kamlattice/model.hpp"

namespace kamlattice {

inline constexpr double kEscapeRadius = 1e12;

enum class Scheme { symplectic6, rk_adaptive };

struct IntegratorConfig {
  int steps_per_period = 512;
  Scheme scheme = Scheme::symplectic6;
  double rk_tolerance = 1e-12;

  void validate() const;
};

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Linearized return map d(R, S)/d(R0, S0), row-major.
struct TangentState {
  PhaseState base;
  std::array<double, 4> matrix{1.0, 0.0, 0.0, 1.0};

  double det() const { return matrix[0] * matrix[3] - matrix[1] * matrix[2]; }
};

/// Raised when |R| exceeds kEscapeRadius or the state turns non-finite. The
/// carried state is the last finite one, at the start of the failing period.
class EscapeError : public NumericalError {
public:
  EscapeError(const PhaseState& last, long period);
  const PhaseState& last_state() const { return last_; }
  long period() const { return period_; }

private:
  PhaseState last_;
  long period_;
};

PhaseState integrate(const NormalizedSystem& sys, const PhaseState& s0, double delta_xi,
                     const IntegratorConfig& cfg);

/// n successive returns to xi = 0 (the seed itself is not included).
std::vector<PhaseState> poincare(const NormalizedSystem& sys, const PhaseState& s0, long n,
                                 const IntegratorConfig& cfg);

TangentState poincare_tangent(const NormalizedSystem& sys, const PhaseState& s0, long n,
                              const IntegratorConfig& cfg);

/// max over samples and j = 1, 2 of |(R_j P R_j P)(x) - x|, with R_1(R, S) = (R, -S)
/// and R_2(R, S) = (-R, S).
double check_reversibility(const NormalizedSystem& sys, std::span<const PhaseState> samples,
                           const IntegratorConfig& cfg);

/// Ensemble of orbits advanced one period at a time on the shared kick table.
/// Escaped orbits are frozen at the origin and flagged; escape_state is the
/// last finite section point.
class Ensemble {
public:
  Ensemble(const NormalizedSystem& sys, int steps_per_period, std::span<const PhaseState> seeds,
           int tangent_columns, kernels::Kernel kernel = kernels::default_kernel());

  void step();
  long periods() const { return periods_; }
  std::size_t size() const { return storage_.R.size(); }

  double R(std::size_t j) const { return storage_.R[j]; }
  double S(std::size_t j) const { return storage_.S[j]; }
  double winding(std::size_t j) const { return storage_.W[j]; }
  /// atan2(R, S) + 2 pi W: clockwise polar angle measured from the positive S axis.
  double lift(std::size_t j) const;
  double tangent_R(int c, std::size_t j) const { return storage_.tR[c][j]; }
  double tangent_S(int c, std::size_t j) const { return storage_.tS[c][j]; }
  void set_tangent(int c, std::size_t j, double dR, double dS);

  bool escaped(std::size_t j) const { return escaped_[j] != 0; }
  long escape_period(std::size_t j) const { return escape_period_[j]; }
  const PhaseState& escape_state(std::size_t j) const { return escape_state_[j]; }
  bool any_escaped() const;

  const kernels::KickTable& table() const { return table_; }

private:
  kernels::KickTable table_;
  kernels::LaneStorage storage_;
  kernels::Kernel kernel_;
  long periods_ = 0;
  std::vector<char> escaped_;
  std::vector<long> escape_period_;
  std::vector<PhaseState> escape_state_;
  std::vector<double> prev_R_, prev_S_;
};

}  // namespace kamlattice
