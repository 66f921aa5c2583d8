#pragma once

#include <cstdint>
#include <random>

namespace mimolab {

using rng_engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (master seed, index). Trials draw only from their own
// stream, so results do not depend on how work is scheduled.
inline rng_engine make_stream(std::uint64_t seed, std::uint64_t index) {
    return rng_engine(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

inline double standard_normal(rng_engine& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return nd(rng);
}

inline int random_spin(rng_engine& rng) { return (rng() >> 63) ? 1 : -1; }

inline double uniform01(rng_engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mimolab
