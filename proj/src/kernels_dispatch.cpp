#include "aqmsim/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace aqmsim::kernels {
namespace {

bool scalar_forced_by_env() {
    const char* v = std::getenv("AQMSIM_SIMD");
    return v != nullptr && std::strcmp(v, "scalar") == 0;
}

} // namespace

ScaledShiftFn scaled_shift(bool force_scalar) {
#if defined(AQMSIM_HAVE_AVX2)
    static const bool use_avx2 = __builtin_cpu_supports("avx2") && !scalar_forced_by_env();
    if (use_avx2 && !force_scalar)
        return scaled_shift_avx2;
#else
    (void)force_scalar;
#endif
    return scaled_shift_scalar;
}

const char* scaled_shift_name(bool force_scalar) {
    return scaled_shift(force_scalar) == &scaled_shift_scalar ? "scalar" : "avx2";
}

} // namespace aqmsim::kernels
