#pragma once

#include <cstdint>
#include <random>

namespace form {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for item `index` of a run seeded with `seed`, so
/// serial and parallel runs draw identical streams.
inline Rng stream_rng(uint64_t seed, uint64_t index) { return Rng(splitmix64(splitmix64(seed) ^ splitmix64(~index))); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace form
