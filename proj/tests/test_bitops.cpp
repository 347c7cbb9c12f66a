#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "aqmsim/bitops.hpp"

using namespace aqmsim;
using u128 = unsigned __int128;

TEST_CASE("ilog2 and clz32 basics") {
    CHECK(ilog2(1) == 0);
    CHECK(ilog2(2) == 1);
    CHECK(ilog2(3) == 1);
    CHECK(ilog2(4) == 2);
    CHECK(ilog2(0x80000000u) == 31);
    CHECK(ilog2(0xffffffffu) == 31);
    CHECK(clz32(1) == 31);
    CHECK(clz32(0x80000000u) == 0);
    CHECK(clz32(3000) == 20);
    CHECK(clz32(30000) == 17);
    CHECK(ilog2_u64(1) == 0);
    CHECK(ilog2_u64(1ull << 63) == 63);
}

TEST_CASE("lg shift resolves ratios arbitrarily close to the boundary") {
    // Continued-fraction convergents p/q of sqrt(2) land alternately just
    // below and just above it; the last pair under 2^32 is within 2e-19 of
    // the boundary, far beyond what any fixed-point constant could place.
    std::uint64_t p = 1, q = 1;
    bool above = false; // 1/1 starts below sqrt(2)
    while (p <= 0xffffffffull && q <= 0xffffffffull) {
        const auto n = static_cast<std::uint32_t>(p);
        const auto d = static_cast<std::uint32_t>(q);
        CHECK(lg_shift_amount(n, d) == (above ? 1 : 0));
        CHECK(lg_shift_amount(d, n) == (above ? -1 : 0));
        if (n <= 0x7fffffffu) CHECK(lg_shift_amount(2 * n, d) == (above ? 2 : 1));
        if (d <= 0x7fffffffu) CHECK(lg_shift_amount(n, 2 * d) == (above ? 0 : -1));
        const std::uint64_t next = p + 2 * q;
        q = p + q;
        p = next;
        above = !above;
    }
}

TEST_CASE("shift_time") {
    CHECK(shift_time(1000, 0) == 1000);
    CHECK(shift_time(1000, 3) == 8000);
    CHECK(shift_time(1000, -2) == 250);
    CHECK(shift_time(1001, -1) == 500); // truncates toward zero
    CHECK(shift_time(7, -3) == 0);
    CHECK(shift_time(5, -64) == 0);
    CHECK(shift_time(0, 5) == 0);
}

TEST_CASE("backlog32 truncation keeps the operand nonzero") {
    CHECK(backlog32(1) == 1);
    CHECK(backlog32(0xffffffffull) == 0xffffffffu);
    CHECK(backlog32(0x100000000ull) == 1);     // wraps to zero, nudged back
    CHECK(backlog32(0x100000005ull) == 5);
}

namespace {

// Exact check that 2^k * den / num lies in [lo, hi) where the bounds are
// half powers of two; works entirely in 128-bit integers. With num, den
// rational the ratio can never equal an irrational bound, so strict
// comparisons on the squares are equivalent to the closed interval.
struct Ratio2k {
    u128 shifted; // den * 2^k or den, depending on sign
    u128 base;    // num or num * 2^-k
};

Ratio2k place(std::uint32_t num, std::uint32_t den, int k) {
    if (k >= 0) return {u128(den) << k, u128(num)};
    return {u128(den), u128(num) << (-k)};
}

bool lg_factor_in_band(std::uint32_t num, std::uint32_t den, int k) {
    // factor f = 2^k * den / num must satisfy 1/2 < f^2 < 2.
    const auto [a, b] = place(num, den, k);
    return a * a * 2 > b * b && a * a < b * b * 2;
}

bool clz_factor_in_band(std::uint32_t num, std::uint32_t den, int k) {
    // factor must lie strictly inside (1/2, 2).
    const auto [a, b] = place(num, den, k);
    return 2 * a > b && a < 2 * b;
}

} // namespace

TEST_CASE("lg shift picks the nearest power of two in log space") {
    CHECK(lg_shift_amount(1, 1) == 0);
    CHECK(lg_shift_amount(8, 1) == 3);
    CHECK(lg_shift_amount(1, 8) == -3);
    CHECK(lg_shift_amount(3, 1) == 2);   // 3 is closer to 4 than 2 in log space
    CHECK(lg_shift_amount(30000, 3000) == 3);
    CHECK(lg_shift_amount(3000, 30000) == -3);
    // 1.5 sits above sqrt(2): rounds up. 1.4 sits below: rounds down.
    CHECK(lg_shift_amount(3, 2) == 1);
    CHECK(lg_shift_amount(7, 5) == 0);

    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::uint32_t> dist(1, 0xffffffffu);
    for (int i = 0; i < 200000; ++i) {
        const std::uint32_t n = dist(gen);
        const std::uint32_t d = dist(gen);
        const int k = lg_shift_amount(n, d);
        REQUIRE(lg_factor_in_band(n, d, k));
    }
    // Adversarial neighborhoods around powers of two and equal operands.
    for (std::uint32_t bit = 1; bit < 31; ++bit) {
        const std::uint32_t p = 1u << bit;
        for (int dn = -2; dn <= 2; ++dn) {
            for (int dd = -2; dd <= 2; ++dd) {
                const std::uint32_t n = p + static_cast<std::uint32_t>(dn);
                const std::uint32_t d = p + static_cast<std::uint32_t>(dd);
                if (n == 0 || d == 0) continue; // operands start at 1
                const int k = lg_shift_amount(n, d);
                REQUIRE(lg_factor_in_band(n, d, k));
            }
        }
    }
}

TEST_CASE("lg shift agrees with a floating-point oracle away from boundaries") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<std::uint32_t> dist(1, 0xffffffffu);
    for (int i = 0; i < 50000; ++i) {
        const std::uint32_t n = dist(gen);
        const std::uint32_t d = dist(gen);
        const double x = std::log2(static_cast<double>(n) / static_cast<double>(d)) + 0.5;
        // Skip pairs whose log lands within double rounding of an integer;
        // the fixed-point compare is the authority there.
        if (std::fabs(x - std::round(x)) < 1e-9) continue;
        CHECK(lg_shift_amount(n, d) == static_cast<int>(std::floor(x)));
    }
}

TEST_CASE("clz shift is the difference of truncated logs") {
    CHECK(clz_shift_amount(30000, 3000) == 3);
    CHECK(clz_shift_amount(3000, 30000) == -3);
    CHECK(clz_shift_amount(5, 5) == 0);
    CHECK(clz_shift_amount(0xffffffffu, 1) == 31);

    std::mt19937_64 gen(13);
    std::uniform_int_distribution<std::uint32_t> dist(1, 0xffffffffu);
    for (int i = 0; i < 200000; ++i) {
        const std::uint32_t n = dist(gen);
        const std::uint32_t d = dist(gen);
        const int k = clz_shift_amount(n, d);
        CHECK(k == static_cast<int>(ilog2(n)) - static_cast<int>(ilog2(d)));
        REQUIRE(clz_factor_in_band(n, d, k));
    }
}
