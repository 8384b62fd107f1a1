#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace b2opt {

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent child seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic child seed for a (master, k0, k1, ...) path.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t s = mix_seed(master);
    for (std::uint64_t k : path)
        s = mix_seed(s ^ mix_seed(k + 0x632be59bd9b4e019ULL));
    return s;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace b2opt
