#pragma once

// Grid search of the certificate over (M, b2, gamma, d, nu): for each M, the
// largest delta among passing tuples.

#include <cstddef>
#include <string>
#include <vector>

#include "kamlattice/certificate.hpp"

namespace kamlattice {

enum class AxisScale { log, linear };

struct Axis {
  double min = 0.0;
  double max = 0.0;
  int count = 2;
  AxisScale scale = AxisScale::log;

  void validate(const char* name) const;
  std::vector<double> values() const;
  /// Grid spacing, in log10 units for log axes.
  double step() const;
};

struct GridSpec {
  Axis M, b2, gamma, d, nu;

  void validate() const;
  std::size_t size() const;
  /// [1e6, 1e18] x [1e-6, 1] x [1e-3, 10] x [1e-3, 10] x [1e-3, nu_max], log in all but nu.
  static GridSpec cube(int nM, int nb2, int ngamma, int nd, int nnu);
  static GridSpec desk() { return cube(36, 18, 12, 12, 10); }
  static GridSpec full() { return cube(360, 180, 120, 120, 20); }
};

struct FrontierPoint {
  double M = 0.0;
  double delta_max = 0.0;
  double b2 = 0.0;
  double gamma = 0.0;
  double d = 0.0;
  double nu = 0.0;
  long pass_count = 0;
};

struct SweepStats {
  long evaluations = 0;  // tuples with gamma <= 49/72
  long skipped = 0;      // tuples with gamma > 49/72
};

/// Best tuple for one M. Ties in delta go to the lexicographically smallest
/// (b2, gamma, d, nu).
FrontierPoint sweep_slice(double M, const std::vector<double>& b2, const std::vector<double>& gamma,
                          const std::vector<double>& d, const std::vector<double>& nu,
                          SweepStats* stats = nullptr);

std::vector<FrontierPoint> run(const GridSpec& grid, SweepStats* stats = nullptr);

struct RefineResult {
  FrontierPoint point;
  double gain = 1.0;  // delta_max after / before (1 when nothing passed)
  std::vector<double> b2, gamma, d, nu;
};

/// Re-grids an odd-count cube centred on the argmax at frontier[M_index], each
/// axis spanning one original step / zoom on either side, clipped to the axis
/// range. The argmax itself is a grid point, so delta never decreases.
RefineResult refine(const GridSpec& grid, const std::vector<FrontierPoint>& frontier,
                    std::size_t M_index, double zoom);

/// Refine from an explicit centre point with an explicit per-axis half-width
/// (log10 units for log axes).
RefineResult refine_around(const GridSpec& grid, const FrontierPoint& centre, double half_b2,
                           double half_gamma, double half_d, double half_nu);

}  // namespace kamlattice
