#pragma once

#include <bit>
#include <cassert>
#include <cstdint>

// Integer building blocks for the shift-based delay estimators. Everything
// here is exact integer arithmetic; no floating point is involved so the
// scalar and vector paths can agree bit for bit.

namespace aqmsim {

// Leading zeros of a 32-bit value. Defined for x >= 1.
inline constexpr unsigned clz32(std::uint32_t x) {
    assert(x != 0);
    return static_cast<unsigned>(std::countl_zero(x));
}

// floor(log2(x)) for x >= 1.
inline constexpr unsigned ilog2(std::uint32_t x) {
    assert(x != 0);
    return 31u - clz32(x);
}

inline constexpr unsigned ilog2_u64(std::uint64_t x) {
    assert(x != 0);
    return 63u - static_cast<unsigned>(std::countl_zero(x));
}

// Shift amount k = floor(log2(num/den) + 1/2): the exponent of the power of
// two nearest to num/den in log space. num, den >= 1.
//
// Both operands are normalized to [2^31, 2^32); whether their ratio clears
// 1/sqrt(2) or sqrt(2) is decided by squaring, so the whole computation is
// exact and the band holds for every input, not just away from boundaries.
// The squares fill 64 bits and cannot be doubled in place; "2a >= b" is
// phrased as "a has its top bit set, or a << 1 >= b" instead. Equality with
// a boundary is impossible (2 m^2 = n^2 has no integer solutions), so ties
// never need breaking.
inline constexpr int lg_shift_amount(std::uint32_t num, std::uint32_t den) {
    assert(num != 0 && den != 0);
    const int an = static_cast<int>(ilog2(num));
    const int ad = static_cast<int>(ilog2(den));
    const std::uint64_t mn = static_cast<std::uint64_t>(num) << (31 - an);
    const std::uint64_t md = static_cast<std::uint64_t>(den) << (31 - ad);
    const std::uint64_t nn = mn * mn;
    const std::uint64_t dd = md * md;
    int k = an - ad - 1;
    if ((nn >> 63) != 0 || (nn << 1) >= dd) ++k;    // mn/md >= 1/sqrt(2)
    if ((dd >> 63) == 0 && nn >= (dd << 1)) ++k;    // mn/md >= sqrt(2)
    return k;
}

// Shift amount for the clz variant: clz(den) - clz(num) = floor(log2 num) -
// floor(log2 den). Truncates both logs, so the error is one-sided per
// operand; the combined factor stays inside (1/2, 2).
inline constexpr int clz_shift_amount(std::uint32_t num, std::uint32_t den) {
    assert(num != 0 && den != 0);
    return static_cast<int>(clz32(den)) - static_cast<int>(clz32(num));
}

// Apply a power-of-two scale to a non-negative time value. Left shifts wrap
// in unsigned arithmetic (unreachable at sane queue scales); right shifts
// truncate toward zero.
inline constexpr std::int64_t shift_time(std::int64_t t, int k) {
    assert(t >= 0);
    const std::uint64_t u = static_cast<std::uint64_t>(t);
    if (k >= 0) {
        return k >= 64 ? 0 : static_cast<std::int64_t>(u << k);
    }
    const int r = -k;
    return r >= 64 ? 0 : static_cast<std::int64_t>(u >> r);
}

// Truncate a backlog byte count to the 32-bit domain the shift estimators
// operate in, keeping it nonzero so the bit scans stay defined.
inline constexpr std::uint32_t backlog32(std::uint64_t b) {
    assert(b != 0);
    const std::uint32_t t = static_cast<std::uint32_t>(b);
    return t == 0 ? 1u : t;
}

} // namespace aqmsim
