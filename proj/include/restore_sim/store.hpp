#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "restore_sim/cluster.hpp"
#include "restore_sim/distribution.hpp"
#include "restore_sim/types.hpp"

namespace restore_sim {

/// How requesters describe what they want to load.
/// GlobalList: the full request list is known everywhere, so no
/// request-forwarding round is needed. LocalLists (the default): each rank
/// states only its own needs and a sparse request round precedes the data
/// exchange.
enum class LoadMode { GlobalList, LocalLists };

struct BlockRangeRequest {
    rank_t requester = 0;
    std::vector<BlockRange> intervals;  // sorted, disjoint, within [0, n)
};

struct Assignment {
    rank_t server = 0;
    rank_t receiver = 0;
    BlockRange blocks;
};

struct RequestPlan {
    std::vector<Assignment> assignments;
    std::uint64_t seed = 0;
};

/// Per-rank serialized payloads to submit. Rank q's bytes cover its
/// contributed blocks in ascending id order. Without explicit intervals,
/// rank q contributes [floor(q n / p), floor((q+1) n / p)).
struct SubmitInput {
    std::vector<std::vector<std::byte>> payloads;
    std::optional<std::vector<std::vector<BlockRange>>> contributed;
};

struct ReceivedRange {
    BlockRange blocks;
    std::vector<std::byte> payload;
};

/// load() output indexed by rank; each entry sorted by block id.
using LoadResult = std::vector<std::vector<ReceivedRange>>;

/// The replicated store: per-rank block intervals with their payload bytes.
/// Mutation (submit fills it, mark_failed shrinks it) needs exclusive
/// access; planning and loading are read-only.
class StoreImage {
public:
    StoreImage(DistributionConfig cfg, std::size_t block_size);

    [[nodiscard]] const DistributionConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const RangePermutation* permutation() const noexcept {
        return perm_ ? &*perm_ : nullptr;
    }
    [[nodiscard]] std::size_t block_size() const noexcept { return block_size_; }

    [[nodiscard]] bool is_alive(rank_t rank) const;
    [[nodiscard]] const std::vector<bool>& alive() const noexcept { return alive_; }
    [[nodiscard]] rank_t alive_count() const noexcept { return alive_count_; }

    [[nodiscard]] block_id_t stored_block_count(rank_t rank) const;
    [[nodiscard]] std::vector<BlockRange> stored_ranges(rank_t rank) const;
    [[nodiscard]] std::uint64_t total_stored_bytes() const;

    /// Alive ranks holding the blocks whose first copy is `first_copy`,
    /// ascending.
    [[nodiscard]] std::vector<rank_t> alive_holders(rank_t first_copy) const;

    /// Flags ranks dead and drops their payload buffers. StateError if a
    /// rank is already dead.
    void mark_failed(std::span<const rank_t> ranks);

    void store_blocks(rank_t rank, BlockRange blocks, std::span<const std::byte> payload);
    /// Copies the payload of `blocks` held by `rank` into out. StateError
    /// if the rank is dead or does not hold the interval.
    void read_blocks(rank_t rank, BlockRange blocks, std::span<std::byte> out) const;
    /// Merges adjacent stored intervals into contiguous buffers.
    void coalesce();

private:
    struct StoredRange {
        BlockRange blocks;
        std::vector<std::byte> payload;
    };

    DistributionConfig cfg_;
    std::optional<RangePermutation> perm_;
    std::size_t block_size_;
    std::vector<std::vector<StoredRange>> ranks_;
    std::vector<bool> alive_;
    rank_t alive_count_;
};

/// Default contribution of `rank`: the contiguous slice
/// [floor(rank n / p), floor((rank+1) n / p)).
std::vector<BlockRange> default_contribution(rank_t rank, const DistributionConfig& cfg);

/// Routes r copies of every contributed block to its target ranks through
/// `cluster` (one message per sender/receiver pair, metered under
/// `phase`). Single-shot: the returned image is the whole store.
StoreImage submit(const SubmitInput& input, const DistributionConfig& cfg,
                  std::size_t block_size, Cluster& cluster, std::string_view phase = "submit");

/// Assigns every requested block to exactly one alive serving rank. Each
/// maximal run of consecutive blocks with identical alive-holder sets gets
/// one server, drawn uniformly (seeded) from that set. Throws
/// IrrecoverableDataLoss listing the intervals with no alive holder.
RequestPlan plan_requests(const std::vector<BlockRangeRequest>& requests,
                          const StoreImage& store, std::uint64_t seed);

/// Executes a plan for `requests`: optional request-forwarding round
/// (LocalLists only) followed by the sparse data exchange, both metered on
/// `cluster` as phases "<prefix>-requests" / "<prefix>-data".
LoadResult load(const std::vector<BlockRangeRequest>& requests, LoadMode mode,
                const StoreImage& store, Cluster& cluster, std::uint64_t seed,
                std::string_view phase_prefix = "load");

}  // namespace restore_sim
