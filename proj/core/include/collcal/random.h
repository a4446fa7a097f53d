// Seeded random streams. Every stochastic routine takes an Rng by reference;
// independent streams are derived from (seed, stream index) by seed-splitting.
#ifndef COLLCAL_RANDOM_H_
#define COLLCAL_RANDOM_H_

#include <cstdint>
#include <random>

namespace collcal {

using Rng = std::mt19937_64;

// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// A generator for stream `stream` of `seed`. Distinct (seed, stream) pairs
// give statistically independent generators.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream);

// Uniform double in [0,1) with 53 random bits.
double uniform01(Rng& rng);

// Standard normal via Box-Muller (cosine branch only). No cached second
// variate, so each value depends only on the generator state.
double standard_normal(Rng& rng);

// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace collcal

#endif  // COLLCAL_RANDOM_H_
