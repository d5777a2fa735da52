#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "restore_sim/permutation.hpp"
#include "restore_sim/types.hpp"

namespace restore_sim {

/// Global placement parameters shared by every rank.
///
/// Every block gets `replication` copies; copies of block x live on ranks
/// floor(x' * ranks / blocks) + k * (ranks / replication) mod ranks, where
/// x' is the block index after the optional range permutation.
struct DistributionConfig {
    rank_t ranks = 1;                 // p
    block_id_t blocks = 1;            // n
    rank_t replication = 1;           // r
    block_id_t blocks_per_range = 1;  // blocks per permutation range
    bool permute = false;
    std::uint64_t seed = 0;

    /// Throws ConfigError on violated invariants. Divisibility of ranks by
    /// replication is NOT required here; reliability analysis checks it on
    /// its own entry points.
    void validate() const;

    [[nodiscard]] range_id_t num_ranges() const noexcept {
        return (blocks + blocks_per_range - 1) / blocks_per_range;
    }
    /// Distance between consecutive copies; floor(p / r) when r does not
    /// divide p (see README for the caveat).
    [[nodiscard]] rank_t copy_stride() const noexcept { return ranks / replication; }
    [[nodiscard]] bool replication_divides_ranks() const noexcept {
        return ranks % replication == 0;
    }
};

RangePermutation build_range_permutation(range_id_t num_ranges, std::uint64_t seed);

/// Permutation for cfg when cfg.permute is set, std::nullopt otherwise.
std::optional<RangePermutation> make_permutation(const DistributionConfig& cfg);

range_id_t permutation_range_of(block_id_t block, block_id_t blocks_per_range);

/// Index of `block` after permuting whole ranges. When the last range is
/// short (blocks % blocks_per_range != 0) the permuted order is compacted
/// so the result is always a bijection on [0, blocks).
block_id_t permuted_block_index(block_id_t block, const DistributionConfig& cfg,
                                const RangePermutation& perm);
block_id_t original_block_index(block_id_t permuted, const DistributionConfig& cfg,
                                const RangePermutation& perm);

/// Rank holding the first copy of (possibly already permuted) index x:
/// floor(x * p / n).
rank_t first_copy_rank_of_index(block_id_t index, const DistributionConfig& cfg);

/// Block indices whose first copy lands on `rank`:
/// [ceil(rank * n / p), ceil((rank + 1) * n / p)).
BlockRange first_copy_index_range(rank_t rank, const DistributionConfig& cfg);

/// All r holder ranks shared by blocks with the given first-copy rank.
std::vector<rank_t> holder_ranks(rank_t first_copy, const DistributionConfig& cfg);

std::vector<rank_t> basic_target_ranks(block_id_t block, const DistributionConfig& cfg);
std::vector<rank_t> permuted_target_ranks(block_id_t block, const DistributionConfig& cfg,
                                          const RangePermutation& perm);
/// Dispatches on perm being present.
std::vector<rank_t> target_ranks(block_id_t block, const DistributionConfig& cfg,
                                 const RangePermutation* perm);

/// A maximal run of consecutive block ids sharing one holder set.
struct PlacementSegment {
    BlockRange blocks;   // original block ids
    rank_t first_copy;   // first-copy rank of the run
};

/// Decomposes `interval` into maximal segments of constant holder set,
/// in block-id order.
std::vector<PlacementSegment> placement_segments(BlockRange interval,
                                                 const DistributionConfig& cfg,
                                                 const RangePermutation* perm);

/// Exact inverse of the placement: sorted disjoint intervals of all blocks
/// with rank among their holders.
std::vector<BlockRange> blocks_of_rank(rank_t rank, const DistributionConfig& cfg,
                                       const RangePermutation* perm);

/// group index per rank, derived by enumerating the placement itself (ranks
/// holding identical block sets share a group). Requires r | p.
std::vector<std::uint32_t> replica_group_of_rank(rank_t ranks, rank_t replication);

}  // namespace restore_sim
