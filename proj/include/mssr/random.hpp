#pragma once

#include <cstdint>
#include <random>

namespace mssr {

// Uniform double in [0, 1). Implemented directly on the mt19937_64 output so
// results are identical across standard libraries (uniform_real_distribution
// is implementation-defined).
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n). Modulo bias is ~n/2^64, irrelevant at our sizes.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace mssr
