#pragma once

// Orbit diagnostics on the Poincare section: rotation numbers, finite-time
// Lyapunov indicators, the innermost-invariant-curve scan and the threshold
// scaling study.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kamlattice/dynamics.hpp"

namespace kamlattice {

struct ClassifyConfig {
  long iterates = 10000;
  double rotation_tol = 1e-7;
  double chaos_threshold = 1e-3;
  /// Orbits that are bounded with indicator below threshold but fail the
  /// rotation test at `iterates` are continued, doubling the length up to this
  /// bound and re-testing on windows (L/2, L). Equal to `iterates` disables it.
  long max_iterates = 40000;
  /// 0 selects a resolution from the largest seed radius (see steps_for_radius).
  int steps_per_period = 0;
};

struct OrbitSummary {
  std::optional<double> rotation_number;  // empty = undefined
  bool rotation_converged = false;
  bool bounded = true;
  double chaos_indicator = 0.0;
  double max_abs_R = 0.0;
  long iterates_used = 0;
  long escape_period = -1;

  bool regular(const ClassifyConfig& c) const {
    return bounded && rotation_number && rotation_converged && chaos_indicator < c.chaos_threshold;
  }
};

/// Smallest 512 * 2^k with at least 48 steps per revolution for seeds up to R_max.
int steps_for_radius(const NormalizedSystem& sys, double R_max, int base = 512);

/// Weight exp(-1 / (t (1 - t))) on (0, 1).
double birkhoff_weight(double t);

/// All diagnostics for a batch of seeds on xi = 0, integrated together. The
/// rotation number is the weighted Birkhoff average of per-iterate polar-angle
/// increments over windows n/2 and n; the indicator is the least-squares slope
/// of log|v_k| against k over n/2 < k <= n for a renormalized tangent vector,
/// clamped at 0.
std::vector<OrbitSummary> summarize(const NormalizedSystem& sys, std::span<const PhaseState> seeds,
                                    long n, int steps_per_period, double rotation_tol = 1e-7,
                                    kernels::Kernel kernel = kernels::default_kernel());

/// Classification run with the adaptive continuation of ClassifyConfig.
/// steps_per_period = 0 defers to the config; if that is 0 too, seeds run in
/// groups of four by radius at steps_for_radius of the group, and orbits whose
/// max |R| needs more steps are rerun at that radius (up to two reruns).
std::vector<OrbitSummary> classify(const NormalizedSystem& sys, std::span<const PhaseState> seeds,
                                   const ClassifyConfig& c, int steps_per_period = 0);

OrbitSummary rotation_number(const NormalizedSystem& sys, const PhaseState& s0, long n,
                             const IntegratorConfig& cfg);

struct ChaosIndicator {
  double value = 0.0;
  bool escaped = false;
};

ChaosIndicator chaos_indicator(const NormalizedSystem& sys, const PhaseState& s0, long n,
                               const IntegratorConfig& cfg);

struct RadialScan {
  double R_min = 0.0;
  double R_max = 0.0;
  int seeds = 24;
  std::uint64_t rng_seed = 0;  // 0: exact log spacing, otherwise jittered
  double rel_tol = 1e-2;
  ClassifyConfig classify;
};

struct InnermostResult {
  double R_star = 0.0;
  double bracket_low = 0.0;  // largest non-regular radius found, 0 if none
  int steps_per_period = 0;  // resolution at R_max, or the fixed one
  bool found_irregular = false;
  std::vector<double> radii;
  std::vector<OrbitSummary> summaries;
};

InnermostResult innermost_invariant_radius(const NormalizedSystem& sys, const RadialScan& scan);

struct ScalingPoint {
  double V1 = 0.0;
  double R_star = 0.0;
  bool found_irregular = false;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // max |log10 R - fit| over points
};

/// Least-squares line through (log10 x, log10 y).
ScalingFit fit_loglog(std::vector<ScalingPoint> points);

/// Figure-family scan: for each V1, the system (alpha1, alpha3, kappa, V1) is
/// scanned over R in [lo, hi] * sqrt(1 + V1) (raw x units).
struct ScalingStudyConfig {
  double alpha1 = -1.0;
  double alpha3 = -1.0;
  double kappa = 1.0;
  double lo = 0.5;
  double hi = 8.0;
  RadialScan scan;
};

/// One point of the study.
ScalingPoint scaling_point(double V1, const ScalingStudyConfig& cfg);

ScalingFit threshold_scaling_study(std::span<const double> V1_list, const ScalingStudyConfig& cfg);

struct PortraitOrbit {
  PhaseState seed;
  std::vector<PhaseState> iterates;
  OrbitSummary summary;
};

/// Poincare iterates of every seed plus their summaries.
std::vector<PortraitOrbit> phase_portrait(const NormalizedSystem& sys,
                                          std::span<const PhaseState> seeds, long n,
                                          int steps_per_period);

}  // namespace kamlattice
