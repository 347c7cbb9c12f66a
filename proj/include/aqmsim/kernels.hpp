#pragma once

#include <cstddef>
#include <cstdint>

// Batch form of the shift-based estimators, used to fill whole trace columns
// after a run. The arithmetic is pure elementwise integer work, so there is
// a scalar reference kernel plus an AVX2 variant selected at runtime; both
// produce bit-identical output by construction (same fixed-point formulas,
// no floating point anywhere).

namespace aqmsim::kernels {

// For each i: lg_out[i] and clz_out[i] are sojourn[i] scaled by the power of
// two chosen from (b_deq[i], b_enq[i]) by the lg and clz rules. Inputs must
// satisfy sojourn >= 0 and b_enq, b_deq >= 1. Output arrays may not alias
// the inputs.
using ScaledShiftFn = void (*)(const std::int64_t* sojourn,
                               const std::uint32_t* b_enq,
                               const std::uint32_t* b_deq,
                               std::size_t n,
                               std::int64_t* lg_out,
                               std::int64_t* clz_out);

void scaled_shift_scalar(const std::int64_t* sojourn, const std::uint32_t* b_enq,
                         const std::uint32_t* b_deq, std::size_t n,
                         std::int64_t* lg_out, std::int64_t* clz_out);

#if defined(AQMSIM_HAVE_AVX2)
void scaled_shift_avx2(const std::int64_t* sojourn, const std::uint32_t* b_enq,
                       const std::uint32_t* b_deq, std::size_t n,
                       std::int64_t* lg_out, std::int64_t* clz_out);
#endif

// Best kernel for this machine. force_scalar pins the reference kernel;
// setting AQMSIM_SIMD=scalar in the environment does the same globally.
ScaledShiftFn scaled_shift(bool force_scalar = false);

// Name of the kernel scaled_shift() would return ("scalar", "avx2").
const char* scaled_shift_name(bool force_scalar = false);

} // namespace aqmsim::kernels
