#pragma once

#include <cstdint>
#include <random>

namespace blockade {

/// SplitMix64 finalizer (Steele, Lea, Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream splitting: the seed of sub-stream `index` under `master`.
/// Derived seeds depend only on (master, index), never on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(master ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

/// Engine used for all stochastic simulation.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

} // namespace blockade
