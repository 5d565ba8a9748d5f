#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace fusion {

using Rng = std::mt19937_64;

/// One round of the splitmix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for a numbered stream. Pure function of its inputs, so a
/// stream never depends on which other streams were consumed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Child seed for a named stream ("sample", "rhd", ...).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return derive_seed(base, h);
}

/// Uniform draw from {0, ..., n-1}; n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng);
}

/// Tie-break protocol shared by every nearest-neighbour matcher: the
/// position chosen among `n_ties` equally distant donors (in donor order)
/// for recipient `recipient`. Depends only on (seed, recipient), which keeps
/// the parallel kernels reproducible.
inline std::size_t tie_break(std::uint64_t seed, std::size_t recipient, std::size_t n_ties) {
    if (n_ties <= 1) return 0;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(recipient)));
    return uniform_index(rng, n_ties);
}

}  // namespace fusion
