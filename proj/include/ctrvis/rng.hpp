#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ctrvis {

// Portable helpers on top of mt19937_64. The std distributions are
// implementation-defined, so results would differ between standard libraries.

using Rng = std::mt19937_64;

/// Uniform integer in [0, n), by rejection sampling. n must be > 0.
std::uint64_t uniform_index(Rng& gen, std::uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& gen);

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(Rng& gen);

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// 0..n-1 in random order.
std::vector<std::size_t> permutation(std::size_t n, Rng& gen);

/// Seed for stream `index` derived from a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace ctrvis
