#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aqmsim {

// Deterministic RNG with independent substreams. Transforms are written out
// by hand because the standard distribution objects are implementation
// defined: the same seed must replay the same trace on any toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : gen_(mix(seed, stream)) {}

    // Uniform in [0, 1), 53 usable bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Exponential with the given mean. uniform() can return exactly zero;
    // nudge it so log stays finite.
    double exponential(double mean) {
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(u) * mean;
    }

    std::uint64_t bits() { return gen_(); }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finalizer over (seed, stream) so adjacent seeds do not
        // produce correlated engines.
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 gen_;
};

} // namespace aqmsim
