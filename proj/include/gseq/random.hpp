#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gseq {

using Rng = std::mt19937_64;

/// Uniform index in [0, n). n > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Seed for an independent substream, derived from a parent seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Fisher-Yates with uniform_index, so results do not depend on std::shuffle's implementation.
template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

} // namespace gseq
