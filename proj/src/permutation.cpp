#include "restore_sim/permutation.hpp"

#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"

namespace restore_sim {

RangePermutation::RangePermutation(std::uint64_t domain_size, std::uint64_t seed)
    : domain_size_(domain_size), seed_(seed) {
    if (domain_size == 0) {
        throw DomainError("permutation domain must be non-empty");
    }
    std::uint32_t half_bits = 1;
    while (half_bits < 32 && (std::uint64_t{1} << (2 * half_bits)) < domain_size) {
        ++half_bits;
    }
    half_bits_ = half_bits;
    half_mask_ = (std::uint64_t{1} << half_bits) - 1;
    for (int round = 0; round < kRounds; ++round) {
        round_keys_[static_cast<std::size_t>(round)] =
            derive_seed(seed, static_cast<std::uint64_t>(round));
    }
}

std::uint64_t RangePermutation::encrypt(std::uint64_t value) const noexcept {
    std::uint64_t left = value >> half_bits_;
    std::uint64_t right = value & half_mask_;
    for (const std::uint64_t key : round_keys_) {
        const std::uint64_t mixed = mix64(right ^ key) & half_mask_;
        const std::uint64_t next_right = left ^ mixed;
        left = right;
        right = next_right;
    }
    return (left << half_bits_) | right;
}

std::uint64_t RangePermutation::decrypt(std::uint64_t value) const noexcept {
    std::uint64_t left = value >> half_bits_;
    std::uint64_t right = value & half_mask_;
    for (int round = kRounds - 1; round >= 0; --round) {
        const std::uint64_t key = round_keys_[static_cast<std::size_t>(round)];
        const std::uint64_t mixed = mix64(left ^ key) & half_mask_;
        const std::uint64_t prev_left = right ^ mixed;
        right = left;
        left = prev_left;
    }
    return (left << half_bits_) | right;
}

std::uint64_t RangePermutation::forward(std::uint64_t value) const {
    if (value >= domain_size_) {
        throw DomainError("permutation input outside domain");
    }
    if (domain_size_ == 1) {
        return 0;
    }
    std::uint64_t result = value;
    do {
        result = encrypt(result);
    } while (result >= domain_size_);
    return result;
}

std::uint64_t RangePermutation::inverse(std::uint64_t value) const {
    if (value >= domain_size_) {
        throw DomainError("permutation input outside domain");
    }
    if (domain_size_ == 1) {
        return 0;
    }
    std::uint64_t result = value;
    do {
        result = decrypt(result);
    } while (result >= domain_size_);
    return result;
}

}  // namespace restore_sim
