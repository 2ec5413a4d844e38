#include <cmath>

#include "kamlattice/kernels/splitting.hpp"

namespace kamlattice::kernels {

namespace {

template <int Cols>
void orbit_period(const KickTable& t, const Lanes& L, std::size_t j) {
  double R = L.R[j];
  double S = L.S[j];
  double W = L.W[j];
  double tR[2] = {0.0, 0.0};
  double tS[2] = {0.0, 0.0};
  for (int c = 0; c < Cols; ++c) {
    tR[c] = L.tR[c][j];
    tS[c] = L.tS[c][j];
  }
  const double* z2 = t.two_z2.data();
  for (int k = 0; k < t.steps; ++k, z2 += kStages) {
    for (int i = 0; i < kStages; ++i) {
      const double a = t.drift_w[i];
      const double Rn = R + a * S;
      const double up = (R >= 0.0 && Rn < 0.0 && S < 0.0) ? 1.0 : 0.0;
      const double down = (R < 0.0 && Rn >= 0.0 && S < 0.0) ? 1.0 : 0.0;
      W = (W + up) - down;
      R = Rn;
      for (int c = 0; c < Cols; ++c) tR[c] = tR[c] + a * tS[c];

      const double w = t.kick_w[i];
      const double R2 = R * R;
      const double force = (z2[i] + t.four_z4 * R2) * R;
      S = S - w * force;
      if constexpr (Cols > 0) {
        const double stiff = z2[i] + t.twelve_z4 * R2;
        for (int c = 0; c < Cols; ++c) tS[c] = tS[c] - w * (stiff * tR[c]);
      }
    }
    const double a = t.drift_w[kStages];
    const double Rn = R + a * S;
    const double up = (R >= 0.0 && Rn < 0.0 && S < 0.0) ? 1.0 : 0.0;
    const double down = (R < 0.0 && Rn >= 0.0 && S < 0.0) ? 1.0 : 0.0;
    W = (W + up) - down;
    R = Rn;
    for (int c = 0; c < Cols; ++c) tR[c] = tR[c] + a * tS[c];
  }
  L.R[j] = R;
  L.S[j] = S;
  L.W[j] = W;
  for (int c = 0; c < Cols; ++c) {
    L.tR[c][j] = tR[c];
    L.tS[c][j] = tS[c];
  }
}

}  // namespace

KickTable make_kick_table(const NormalizedSystem& sys, int steps_per_period) {
  if (steps_per_period < 1) throw DomainError("steps per period must be positive");
  KickTable t;
  t.steps = steps_per_period;
  t.h = 1.0 / steps_per_period;
  std::array<double, kStages> c{};
  double acc = 0.0;
  for (int i = 0; i < kStages; ++i) {
    const double g = kCompositionWeights[i];
    c[i] = acc + 0.5 * g;
    acc += g;
    t.kick_w[i] = g * t.h;
  }
  t.drift_w[0] = 0.5 * kCompositionWeights[0] * t.h;
  for (int i = 1; i < kStages; ++i) {
    t.drift_w[i] = 0.5 * (kCompositionWeights[i - 1] + kCompositionWeights[i]) * t.h;
  }
  t.drift_w[kStages] = 0.5 * kCompositionWeights[kStages - 1] * t.h;
  t.four_z4 = 4.0 * sys.z4;
  t.twelve_z4 = 12.0 * sys.z4;
  t.two_z2.resize(static_cast<std::size_t>(steps_per_period) * kStages);
  for (int k = 0; k < steps_per_period; ++k) {
    for (int i = 0; i < kStages; ++i) {
      t.two_z2[static_cast<std::size_t>(k) * kStages + i] = 2.0 * sys.z2((k + c[i]) * t.h);
    }
  }
  return t;
}

void advance_period_scalar(const KickTable& t, const Lanes& lanes, std::size_t begin,
                           std::size_t end) {
  for (std::size_t j = begin; j < end; ++j) {
    switch (lanes.tangent_columns) {
      case 0: orbit_period<0>(t, lanes, j); break;
      case 1: orbit_period<1>(t, lanes, j); break;
      default: orbit_period<2>(t, lanes, j); break;
    }
  }
}

LaneStorage::LaneStorage(std::size_t count, int tangent_columns)
    : R(count, 0.0), S(count, 0.0), W(count, 0.0), columns_(tangent_columns) {
  if (tangent_columns < 0 || tangent_columns > 2) throw DomainError("0, 1 or 2 tangent columns");
  for (int c = 0; c < tangent_columns; ++c) {
    tR[c].assign(count, 0.0);
    tS[c].assign(count, 0.0);
  }
}

Lanes LaneStorage::view() {
  Lanes l;
  l.count = R.size();
  l.tangent_columns = columns_;
  l.R = R.data();
  l.S = S.data();
  l.W = W.data();
  for (int c = 0; c < columns_; ++c) {
    l.tR[c] = tR[c].data();
    l.tS[c] = tS[c].data();
  }
  return l;
}

}  // namespace kamlattice::kernels
