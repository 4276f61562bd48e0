#include "ctrvis/rng.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace ctrvis {

std::uint64_t uniform_index(Rng& gen, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = gen();
    while (v >= limit) v = gen();
    return v % n;
}

double uniform01(Rng& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double standard_normal(Rng& gen) {
    double u1 = uniform01(gen);
    while (u1 <= 0.0) u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> permutation(std::size_t n, Rng& gen) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(p), gen);
    return p;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace ctrvis
