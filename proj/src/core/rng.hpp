#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bsqz {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to derive independent sub-seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Draws an index from unnormalised nonnegative weights. Falls back to the last
/// positive weight when rounding leaves the cumulative sum short of the draw.
template <class Weights>
std::size_t sample_index(Rng& rng, const Weights& w) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) total += w[i];
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) {
            last_positive = static_cast<std::size_t>(i);
            acc += w[i];
            if (u < acc) return static_cast<std::size_t>(i);
        }
    }
    return last_positive;
}

}  // namespace bsqz
