// rng.hpp
// Deterministic seeded random streams. Every stochastic operation in the
// toolkit takes a 64-bit seed and derives independent substreams from it,
// so results are bit-identical regardless of execution order or thread
// count.

#pragma once

#include <cstdint>
#include <random>

namespace gpt {

// splitmix64 finalizer; good avalanche, used purely for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
    return mix64(mix64(seed) ^ mix64(a + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

// Independent engine for logical substream (seed, a) or (seed, a, b).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a) {
    return std::mt19937_64(derive_seed(seed, a));
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return std::mt19937_64(derive_seed(seed, a, b));
}

} // namespace gpt
