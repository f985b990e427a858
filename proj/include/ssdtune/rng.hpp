#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace ssdtune {

// Draw helpers layered on top of mt19937_64. The standard distribution
// objects are implementation-defined, so anything that must reproduce
// bit-identically across toolchains goes through these instead.

inline double rand_u01(std::mt19937_64& rng) {
    // 53 uniform mantissa bits in [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline size_t rand_index(std::mt19937_64& rng, size_t n) {
    if (n <= 1)
        return 0;
    size_t i = static_cast<size_t>(rand_u01(rng) * static_cast<double>(n));
    return i < n ? i : n - 1;
}

inline double rand_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * rand_u01(rng);
}

} // namespace ssdtune
