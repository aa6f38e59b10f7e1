#pragma once

#include <cstdint>

namespace subexp {

/**
 * Stateless counter-based uniform stream. Every draw is a pure function of
 * (seed, stream, substream, counter), so results are identical under any
 * partitioning of the work across workers.
 */
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream,
                         std::uint64_t counter) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ stream);
    k = mix64(k ^ substream);
    return mix64(k ^ counter);
}

/// Uniform double in [0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream,
                      std::uint64_t counter) {
    return static_cast<double>(key(seed, stream, substream, counter) >> 11) * 0x1.0p-53;
}

} // namespace rng

} // namespace subexp
