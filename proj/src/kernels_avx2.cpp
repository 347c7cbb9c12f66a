#include "aqmsim/kernels.hpp"

#if defined(AQMSIM_HAVE_AVX2)

#include <immintrin.h>

#include "aqmsim/bitops.hpp"

namespace aqmsim::kernels {
namespace {

inline __m256i popcount_bytes(__m256i v) {
    const __m256i lut = _mm256_setr_epi8(
        0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
        0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i mask = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, mask);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), mask);
    return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

// floor(log2) per 64-bit lane, lanes in [1, 2^32): smear the top bit down,
// then count the ones.
inline __m256i ilog2_lanes(__m256i x) {
    x = _mm256_or_si256(x, _mm256_srli_epi64(x, 1));
    x = _mm256_or_si256(x, _mm256_srli_epi64(x, 2));
    x = _mm256_or_si256(x, _mm256_srli_epi64(x, 4));
    x = _mm256_or_si256(x, _mm256_srli_epi64(x, 8));
    x = _mm256_or_si256(x, _mm256_srli_epi64(x, 16));
    const __m256i pc = _mm256_sad_epu8(popcount_bytes(x), _mm256_setzero_si256());
    return _mm256_sub_epi64(pc, _mm256_set1_epi64x(1));
}

// a < b on unsigned 64-bit lanes (sign-bias trick).
inline __m256i cmplt_u64(__m256i a, __m256i b) {
    const __m256i bias = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ull));
    return _mm256_cmpgt_epi64(_mm256_xor_si256(b, bias), _mm256_xor_si256(a, bias));
}

// sojourn << k for k >= 0, sojourn >> -k otherwise.
inline __m256i apply_shift(__m256i s, __m256i k) {
    const __m256i zero = _mm256_setzero_si256();
    const __m256i neg = _mm256_cmpgt_epi64(zero, k);
    const __m256i kl = _mm256_andnot_si256(neg, k);
    const __m256i kr = _mm256_and_si256(neg, _mm256_sub_epi64(zero, k));
    return _mm256_blendv_epi8(_mm256_sllv_epi64(s, kl), _mm256_srlv_epi64(s, kr), neg);
}

} // namespace

void scaled_shift_avx2(const std::int64_t* sojourn, const std::uint32_t* b_enq,
                       const std::uint32_t* b_deq, std::size_t n,
                       std::int64_t* lg_out, std::int64_t* clz_out) {
    const __m256i zero = _mm256_setzero_si256();
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i c31 = _mm256_set1_epi64x(31);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i d = _mm256_cvtepu32_epi64(
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(b_deq + i)));
        const __m256i e = _mm256_cvtepu32_epi64(
            _mm_loadu_si128(reinterpret_cast<const __m128i*>(b_enq + i)));
        const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(sojourn + i));

        const __m256i ad = ilog2_lanes(d);
        const __m256i ae = ilog2_lanes(e);
        const __m256i kclz = _mm256_sub_epi64(ad, ae);

        // Normalized mantissas in [2^31, 2^32); their squares (exact, the
        // mantissas sit in the low halves so mul_epu32 gives the full
        // product) place the ratio against 1/sqrt(2) and sqrt(2) the same
        // way the scalar kernel does. A square with its top bit set stands
        // in for the doubling that would overflow.
        const __m256i mn = _mm256_sllv_epi64(d, _mm256_sub_epi64(c31, ad));
        const __m256i md = _mm256_sllv_epi64(e, _mm256_sub_epi64(c31, ae));
        const __m256i nn = _mm256_mul_epu32(mn, mn);
        const __m256i dd = _mm256_mul_epu32(md, md);
        const __m256i nn_top = _mm256_cmpgt_epi64(zero, nn);
        const __m256i dd_top = _mm256_cmpgt_epi64(zero, dd);
        const __m256i lt_lo =
            _mm256_andnot_si256(nn_top, cmplt_u64(_mm256_slli_epi64(nn, 1), dd));
        const __m256i lt_hi =
            _mm256_or_si256(dd_top, cmplt_u64(nn, _mm256_slli_epi64(dd, 1)));

        // k = kclz + 1 minus one for each boundary the ratio sits below;
        // the compare masks are 0 or -1, so plain adds do it.
        const __m256i klg = _mm256_add_epi64(_mm256_add_epi64(kclz, one),
                                             _mm256_add_epi64(lt_lo, lt_hi));

        _mm256_storeu_si256(reinterpret_cast<__m256i*>(lg_out + i), apply_shift(s, klg));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(clz_out + i), apply_shift(s, kclz));
    }
    if (i < n)
        scaled_shift_scalar(sojourn + i, b_enq + i, b_deq + i, n - i, lg_out + i, clz_out + i);
}

} // namespace aqmsim::kernels

#endif // AQMSIM_HAVE_AVX2
