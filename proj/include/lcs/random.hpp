#pragma once

#include <cstdint>
#include <span>

namespace lcs {

// Stateless counter-based random numbers. Every draw is a pure function of
// (seed, stream, a, b), so draws can be made in any order from any thread.
namespace rng {

// Stream tags keep draws for different purposes uncorrelated.
enum class Stream : std::uint64_t {
    lattice_init = 0x1a77,
    decode = 0xdec0,
    dynamics = 0x5ca0,
    test = 0x7e57,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t a,
                                    std::uint64_t b) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ a);
    return splitmix64(h ^ b);
}

// Uniform double in [0, 1) with 53 random bits.
inline constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline constexpr double uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
                                std::uint64_t b) {
    return to_unit(hash(seed, stream, a, b));
}

// Inverse-CDF draw from a cumulative distribution (last entry ~ 1).
// Zero-probability outcomes are never returned.
inline std::size_t sample_cdf(std::span<const double> cdf, double u) {
    std::size_t lo = 0, hi = cdf.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cdf[mid] > u) hi = mid;
        else lo = mid + 1;
    }
    if (lo >= cdf.size()) {
        // u beyond the rounded total: take the last outcome with mass.
        lo = cdf.size() - 1;
        while (lo > 0 && cdf[lo] == cdf[lo - 1]) --lo;
    }
    return lo;
}

} // namespace rng
} // namespace lcs
