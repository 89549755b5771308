#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hairseg {

/// SplitMix64 generator with explicitly specified derived distributions.
///
/// The standard library's distributions are implementation-defined, so every
/// random draw that has to be reproduced outside this library (dataset
/// manifests, trainer cross-checks) goes through this class. The derivations
/// are part of the contract:
///   next_u64   : state += 0x9E3779B97F4A7C15; z = state;
///                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///                z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
///                return z ^ (z >> 31)
///   uniform()  : (next_u64() >> 11) * 2^-53, in [0, 1)
///   uniform(a, b) : a + (b - a) * uniform()
///   normal()   : u1 = 1 - uniform(), u2 = uniform();
///                sqrt(-2 ln u1) * cos(2 pi u2)   (one draw per pair)
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    return g.next_u64();
}

} // namespace hairseg
