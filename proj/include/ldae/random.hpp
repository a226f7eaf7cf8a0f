#pragma once

#include "ldae/linalg.hpp"

#include <cstdint>
#include <random>

namespace ldae {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-trial seed. For a fixed base the map (point, trial) -> seed is
/// injective as long as both indices fit in 32 bits: the packing is
/// injective and every other step is a bijection.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t point, std::uint64_t trial) {
    const std::uint64_t packed = (point << 32) | (trial & 0xffffffffULL);
    return mix64(mix64(base) ^ mix64(packed ^ 0x5851f42d4c957f2dULL));
}

/// Named sub-stream of a seed, so independent draws inside one trial
/// (train noise, test noise, init) never share a generator state.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// Entries i.i.d. N(0, 1), filled column by column.
Matrix standard_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Uniformly distributed unit vector.
Vector random_unit_vector(Eigen::Index dim, Rng& rng);

}  // namespace ldae
