#include <cstdlib>
#include <string>

#include "kamlattice/kernels/splitting.hpp"

namespace kamlattice::kernels {

bool avx2_available() {
#if defined(KAMLATTICE_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
#else
  return false;
#endif
}

Kernel default_kernel() {
  static const Kernel k = [] {
    const char* env = std::getenv("KAMLATTICE_KERNEL");
    if (env != nullptr && std::string(env) == "scalar") return Kernel::scalar;
    return avx2_available() ? Kernel::avx2 : Kernel::scalar;
  }();
  return k;
}

const char* to_string(Kernel k) { return k == Kernel::avx2 ? "avx2" : "scalar"; }

void advance_period(const KickTable& t, const Lanes& lanes, Kernel k) {
  if (k == Kernel::avx2 && avx2_available()) {
    advance_period_avx2(t, lanes, 0, lanes.count);
  } else {
    advance_period_scalar(t, lanes, 0, lanes.count);
  }
}

}  // namespace kamlattice::kernels
