#pragma once

// One-period advance of orbit ensembles under the sixth-order symmetric
// composition of drift-kick-drift steps. Scalar and AVX2 variants produce
// bit-identical results; the AVX2 path handles four orbits per vector.

#include <array>
#include <cstddef>
#include <vector>

#include "kamlattice/model.hpp"

namespace kamlattice::kernels {

inline constexpr int kStages = 9;

/// Kahan-Li s9odr6a weights, symmetric.
inline constexpr std::array<double, kStages> kCompositionWeights = {
    0.39216144400731413928,  0.33259913678935943860, -0.70624617255763935981,
    0.082213596293550800230, 0.79854399093482996340, 0.082213596293550800230,
    -0.70624617255763935981, 0.33259913678935943860, 0.39216144400731413928};

/// Per-system, per-resolution constants shared by every orbit.
struct KickTable {
  int steps = 0;  // steps per unit of xi
  double h = 0.0;
  std::array<double, kStages> kick_w{};       // gamma_i h
  std::array<double, kStages + 1> drift_w{};  // merged half-drifts
  double four_z4 = 0.0;
  double twelve_z4 = 0.0;
  std::vector<double> two_z2;  // 2 z2 at (k + c_i) h, row-major [k][i]
};

KickTable make_kick_table(const NormalizedSystem& sys, int steps_per_period);

/// Structure-of-arrays view of an orbit ensemble. W counts signed crossings of
/// R = 0 in the lower half plane (clockwise positive). Tangent columns are
/// (tR[c], tS[c]) for c < tangent_columns.
struct Lanes {
  std::size_t count = 0;
  int tangent_columns = 0;
  double* R = nullptr;
  double* S = nullptr;
  double* W = nullptr;
  std::array<double*, 2> tR{nullptr, nullptr};
  std::array<double*, 2> tS{nullptr, nullptr};
};

void advance_period_scalar(const KickTable& t, const Lanes& lanes, std::size_t begin,
                           std::size_t end);
void advance_period_avx2(const KickTable& t, const Lanes& lanes, std::size_t begin,
                         std::size_t end);

enum class Kernel { scalar, avx2 };

bool avx2_available();
/// AVX2 when the CPU supports it, unless KAMLATTICE_KERNEL=scalar.
Kernel default_kernel();
const char* to_string(Kernel k);

void advance_period(const KickTable& t, const Lanes& lanes, Kernel k);

/// Owning SoA buffer behind a Lanes view.
struct LaneStorage {
  std::vector<double> R, S, W;
  std::array<std::vector<double>, 2> tR, tS;

  LaneStorage(std::size_t count, int tangent_columns);
  Lanes view();
  int tangent_columns() const { return columns_; }

private:
  int columns_ = 0;
};

}  // namespace kamlattice::kernels
