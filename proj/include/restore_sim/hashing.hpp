#pragma once

#include <cstdint>

namespace restore_sim {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// 64-bit multiply-xor-shift finalizer. Bijective on uint64.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Seedless block hash (the fixed constant keeps it distinct from the
/// seeded family below).
constexpr std::uint64_t hash_block(std::uint64_t x) noexcept {
    return mix64(x + 0x6a09e667f3bcc909ULL);
}

/// Seeded hash family; the seed is folded in by xor before mixing.
constexpr std::uint64_t hash_seeded(std::uint64_t seed, std::uint64_t x) noexcept {
    return mix64(x ^ mix64(seed + kGoldenGamma));
}

/// index-th element of the deterministic seed stream rooted at base.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base + (index + 1) * kGoldenGamma);
}

/// Deterministic, platform-independent random generator (splitmix64
/// stream). All consumers of randomness in this project draw from it so
/// that identical seeds give identical results everywhere.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    /// Unbiased uniform value in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

private:
    std::uint64_t state_;
};

}  // namespace restore_sim
