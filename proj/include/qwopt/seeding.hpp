#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qwopt {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used as a cheap mixing function for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based seed fan-out: every (experiment, state, repeat, component)
// tuple gets its own stream, so adding repeats or states never shifts the
// draws of an existing run.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t id : ids) {
        h = mix64(h ^ id);
    }
    return h;
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t target = 0x01;
inline constexpr std::uint64_t oracle = 0x02;
inline constexpr std::uint64_t optimizer = 0x03;
inline constexpr std::uint64_t algorithm = 0x04;
}  // namespace stream

}  // namespace qwopt
