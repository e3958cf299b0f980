#pragma once

#include <cstdint>
#include <random>

namespace erlab {

/// Independent engine for stream `index` under a master seed. Streams are
/// derived by hashing, so results do not depend on which thread draws them.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x65726c62u};
  return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) with 53 random bits; identical across standard libraries.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

}  // namespace erlab
