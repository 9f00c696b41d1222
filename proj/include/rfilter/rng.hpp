#pragma once

#include <cstdint>
#include <random>

namespace rfilter {

enum class StreamPurpose : std::uint64_t {
    theta = 1,
    particle = 2,
    simulate = 3,
    harness = 4,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent generator for (seed, index, purpose); the same triple always gives the same stream.
inline std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0xD1B54A32D192ED03ULL) ^ (static_cast<std::uint64_t>(purpose) << 56);
    splitmix64(s);
    return std::mt19937_64(splitmix64(s));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace rfilter
