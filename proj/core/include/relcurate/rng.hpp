// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace relcurate {

using Rng = std::mt19937_64;

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for (base, tag, index). Stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(base ^ h) + index);
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

/// Index drawn from unnormalised non-negative weights.
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

}  // namespace relcurate
