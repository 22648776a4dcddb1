#pragma once

#include <cstdint>
#include <random>

namespace tfr {

// splitmix64 step; used to derive independent stream seeds from a master
// seed plus a counter so results do not depend on thread scheduling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t counter = 0) {
    return std::mt19937_64(mix_seed(seed, counter));
}

}  // namespace tfr
