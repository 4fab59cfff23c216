#pragma once

#include <cstdint>

namespace mflock::rng {

// Counter-based generator built on the SplitMix64 finalizer: every draw is a
// pure function of (seed, stream, index), so seeds reproduce across
// implementations and any draw can be computed independently.
//
//   mix(z)           = splitmix64 finalizer
//   raw(seed, s, i)  = mix( mix(seed ^ (s + 1) * 0x9E3779B97F4A7C15)
//                           + (i + 1) * 0x9E3779B97F4A7C15 )
//   u01              = raw >> 11, scaled by 2^-53   (uniform in [0, 1))
//   normal(pair i)   = Box-Muller from u01 at counters (2i, 2i+1)

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t raw(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    return mix(mix(seed ^ ((stream + 1) * golden)) + (index + 1) * golden);
}

inline double u01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(raw(seed, stream, index) >> 11) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t pair_index);

} // namespace mflock::rng
