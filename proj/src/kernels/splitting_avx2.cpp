#include "kamlattice/kernels/splitting.hpp"

#if defined(KAMLATTICE_HAVE_AVX2_TU)
#include <immintrin.h>
#endif

namespace kamlattice::kernels {

#if defined(KAMLATTICE_HAVE_AVX2_TU)

namespace {

// Same operation order as the scalar kernel; the build disables FMA contraction.
inline void drift(__m256d a, __m256d& R, __m256d S, __m256d& W) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d Rn = _mm256_add_pd(R, _mm256_mul_pd(a, S));
  const __m256d s_neg = _mm256_cmp_pd(S, zero, _CMP_LT_OQ);
  const __m256d up = _mm256_and_pd(
      _mm256_and_pd(_mm256_cmp_pd(R, zero, _CMP_GE_OQ), _mm256_cmp_pd(Rn, zero, _CMP_LT_OQ)), s_neg);
  const __m256d down = _mm256_and_pd(
      _mm256_and_pd(_mm256_cmp_pd(R, zero, _CMP_LT_OQ), _mm256_cmp_pd(Rn, zero, _CMP_GE_OQ)), s_neg);
  W = _mm256_sub_pd(_mm256_add_pd(W, _mm256_and_pd(up, one)), _mm256_and_pd(down, one));
  R = Rn;
}

template <int Cols>
void group_period(const KickTable& t, const Lanes& L, std::size_t j) {
  __m256d R = _mm256_loadu_pd(L.R + j);
  __m256d S = _mm256_loadu_pd(L.S + j);
  __m256d W = _mm256_loadu_pd(L.W + j);
  __m256d tR[2] = {_mm256_setzero_pd(), _mm256_setzero_pd()};
  __m256d tS[2] = {_mm256_setzero_pd(), _mm256_setzero_pd()};
  for (int c = 0; c < Cols; ++c) {
    tR[c] = _mm256_loadu_pd(L.tR[c] + j);
    tS[c] = _mm256_loadu_pd(L.tS[c] + j);
  }
  const __m256d four_z4 = _mm256_set1_pd(t.four_z4);
  const __m256d twelve_z4 = _mm256_set1_pd(t.twelve_z4);
  const double* z2 = t.two_z2.data();
  for (int k = 0; k < t.steps; ++k, z2 += kStages) {
    for (int i = 0; i < kStages; ++i) {
      const __m256d a = _mm256_set1_pd(t.drift_w[i]);
      drift(a, R, S, W);
      for (int c = 0; c < Cols; ++c) tR[c] = _mm256_add_pd(tR[c], _mm256_mul_pd(a, tS[c]));

      const __m256d w = _mm256_set1_pd(t.kick_w[i]);
      const __m256d zz = _mm256_set1_pd(z2[i]);
      const __m256d R2 = _mm256_mul_pd(R, R);
      const __m256d force = _mm256_mul_pd(_mm256_add_pd(zz, _mm256_mul_pd(four_z4, R2)), R);
      S = _mm256_sub_pd(S, _mm256_mul_pd(w, force));
      if constexpr (Cols > 0) {
        const __m256d stiff = _mm256_add_pd(zz, _mm256_mul_pd(twelve_z4, R2));
        for (int c = 0; c < Cols; ++c) {
          tS[c] = _mm256_sub_pd(tS[c], _mm256_mul_pd(w, _mm256_mul_pd(stiff, tR[c])));
        }
      }
    }
    const __m256d a = _mm256_set1_pd(t.drift_w[kStages]);
    drift(a, R, S, W);
    for (int c = 0; c < Cols; ++c) tR[c] = _mm256_add_pd(tR[c], _mm256_mul_pd(a, tS[c]));
  }
  _mm256_storeu_pd(L.R + j, R);
  _mm256_storeu_pd(L.S + j, S);
  _mm256_storeu_pd(L.W + j, W);
  for (int c = 0; c < Cols; ++c) {
    _mm256_storeu_pd(L.tR[c] + j, tR[c]);
    _mm256_storeu_pd(L.tS[c] + j, tS[c]);
  }
}

}  // namespace

void advance_period_avx2(const KickTable& t, const Lanes& lanes, std::size_t begin,
                         std::size_t end) {
  std::size_t j = begin;
  for (; j + 4 <= end; j += 4) {
    switch (lanes.tangent_columns) {
      case 0: group_period<0>(t, lanes, j); break;
      case 1: group_period<1>(t, lanes, j); break;
      default: group_period<2>(t, lanes, j); break;
    }
  }
  advance_period_scalar(t, lanes, j, end);
}

#else

void advance_period_avx2(const KickTable& t, const Lanes& lanes, std::size_t begin,
                         std::size_t end) {
  advance_period_scalar(t, lanes, begin, end);
}

#endif

}  // namespace kamlattice::kernels
