#pragma once

#include <array>
#include <cstdint>

namespace restore_sim {

/// Seeded bijection on [0, domain_size), built from a balanced Feistel
/// network over the smallest even-bit-width power-of-two domain covering
/// the requested size, restricted to [0, domain_size) by cycle walking.
/// O(1) space, no stored table; forward and inverse are exact mirrors and
/// use fixed-width unsigned arithmetic only.
class RangePermutation {
public:
    static constexpr int kRounds = 8;

    RangePermutation(std::uint64_t domain_size, std::uint64_t seed);

    [[nodiscard]] std::uint64_t forward(std::uint64_t value) const;
    [[nodiscard]] std::uint64_t inverse(std::uint64_t value) const;

    [[nodiscard]] std::uint64_t domain_size() const noexcept { return domain_size_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    [[nodiscard]] std::uint64_t encrypt(std::uint64_t value) const noexcept;
    [[nodiscard]] std::uint64_t decrypt(std::uint64_t value) const noexcept;

    std::uint64_t domain_size_;
    std::uint64_t seed_;
    std::uint32_t half_bits_;
    std::uint64_t half_mask_;
    std::array<std::uint64_t, kRounds> round_keys_;
};

}  // namespace restore_sim
