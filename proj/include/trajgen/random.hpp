#pragma once

#include <cstdint>
#include <random>

namespace trajgen {

/** Stateless splitmix64 round; the workhorse behind seed derivation. */
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/** Derive a child seed from (parent, key); collisions across keys are negligible. */
inline std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t key) {
    return splitmix64(splitmix64(parent) ^ splitmix64(key * 0x9e3779b97f4a7c15ULL + 1ULL));
}

inline std::mt19937_64 make_stream(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

/**
 * Stream used to draw everything belonging to one trajectory (initial condition
 * first, then the perturbation sequence).  Keyed so that concurrent batch
 * workers never share state and results do not depend on scheduling order.
 */
inline std::mt19937_64 trajectory_stream(std::uint64_t seed, std::uint64_t episode, std::uint64_t index) {
    return make_stream(mix_seed(mix_seed(seed, episode), index));
}

}  // namespace trajgen
