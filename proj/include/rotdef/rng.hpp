#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace rotdef {

// Deterministic helpers on top of std::mt19937_64. Only raw engine draws are
// used, so sequences are identical across standard library implementations.

inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Uniform draw from [0,n). Modulo bias is negligible for n far below 2^64.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return rng() % n;
}

inline double gaussian(std::mt19937_64& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Fisher-Yates shuffle spelled out so the permutation is engine-defined only.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle_in_place(idx, rng);
    return idx;
}

}  // namespace rotdef
