#include "restore_sim/distribution.hpp"

#include <algorithm>
#include <cassert>

#include "restore_sim/errors.hpp"

namespace restore_sim {

namespace {

using u128 = unsigned __int128;

struct PositionSpan {
    block_id_t start;   // first permuted index of the range position
    block_id_t length;  // number of blocks at this position
};

// Span of the permuted position `pos` in the permuted index space. With a
// short trailing range the positions after it are shifted down so the
// permuted ids stay dense in [0, n).
PositionSpan position_span(range_id_t pos, const DistributionConfig& cfg,
                           const RangePermutation& perm) {
    const block_id_t s = cfg.blocks_per_range;
    if (cfg.blocks % s == 0) {
        return {pos * s, s};
    }
    const range_id_t last_range = cfg.num_ranges() - 1;
    const block_id_t last_len = cfg.blocks - last_range * s;
    const range_id_t pos_short = perm.forward(last_range);
    block_id_t start = pos * s;
    if (pos > pos_short) {
        start -= s - last_len;
    }
    return {start, pos == pos_short ? last_len : s};
}

void check_block(block_id_t block, const DistributionConfig& cfg) {
    if (block >= cfg.blocks) {
        throw DomainError("block id " + std::to_string(block) + " outside [0, " +
                          std::to_string(cfg.blocks) + ")");
    }
}

}  // namespace

void DistributionConfig::validate() const {
    if (ranks < 1) {
        throw ConfigError("rank count must be positive");
    }
    if (blocks < 1) {
        throw ConfigError("block count must be positive");
    }
    if (replication < 1 || replication > ranks) {
        throw ConfigError("replication level must be in [1, ranks]");
    }
    if (blocks_per_range < 1 || blocks_per_range > blocks) {
        throw ConfigError("blocks per permutation range must be in [1, blocks]");
    }
}

RangePermutation build_range_permutation(range_id_t num_ranges, std::uint64_t seed) {
    if (num_ranges < 1) {
        throw ConfigError("permutation needs at least one range");
    }
    return RangePermutation(num_ranges, seed);
}

std::optional<RangePermutation> make_permutation(const DistributionConfig& cfg) {
    cfg.validate();
    if (!cfg.permute) {
        return std::nullopt;
    }
    return build_range_permutation(cfg.num_ranges(), cfg.seed);
}

range_id_t permutation_range_of(block_id_t block, block_id_t blocks_per_range) {
    if (blocks_per_range < 1) {
        throw ConfigError("blocks per permutation range must be positive");
    }
    return block / blocks_per_range;
}

block_id_t permuted_block_index(block_id_t block, const DistributionConfig& cfg,
                                const RangePermutation& perm) {
    check_block(block, cfg);
    if (perm.domain_size() != cfg.num_ranges()) {
        throw ConfigError("permutation domain does not match the range count");
    }
    const range_id_t range = block / cfg.blocks_per_range;
    const block_id_t offset = block % cfg.blocks_per_range;
    const PositionSpan span = position_span(perm.forward(range), cfg, perm);
    return span.start + offset;
}

block_id_t original_block_index(block_id_t permuted, const DistributionConfig& cfg,
                                const RangePermutation& perm) {
    check_block(permuted, cfg);
    if (perm.domain_size() != cfg.num_ranges()) {
        throw ConfigError("permutation domain does not match the range count");
    }
    const block_id_t s = cfg.blocks_per_range;
    range_id_t pos;
    block_id_t offset;
    if (cfg.blocks % s == 0) {
        pos = permuted / s;
        offset = permuted % s;
    } else {
        const range_id_t last_range = cfg.num_ranges() - 1;
        const block_id_t last_len = cfg.blocks - last_range * s;
        const range_id_t pos_short = perm.forward(last_range);
        const block_id_t short_start = pos_short * s;
        if (permuted < short_start) {
            pos = permuted / s;
            offset = permuted % s;
        } else if (permuted < short_start + last_len) {
            pos = pos_short;
            offset = permuted - short_start;
        } else {
            const block_id_t shifted = permuted + (s - last_len);
            pos = shifted / s;
            offset = shifted % s;
        }
    }
    return perm.inverse(pos) * s + offset;
}

rank_t first_copy_rank_of_index(block_id_t index, const DistributionConfig& cfg) {
    check_block(index, cfg);
    return static_cast<rank_t>(static_cast<u128>(index) * cfg.ranks / cfg.blocks);
}

BlockRange first_copy_index_range(rank_t rank, const DistributionConfig& cfg) {
    if (rank >= cfg.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    const auto ceil_div = [&](u128 numerator) {
        return static_cast<block_id_t>((numerator + cfg.ranks - 1) / cfg.ranks);
    };
    return {ceil_div(static_cast<u128>(rank) * cfg.blocks),
            ceil_div(static_cast<u128>(rank + 1) * cfg.blocks)};
}

std::vector<rank_t> holder_ranks(rank_t first_copy, const DistributionConfig& cfg) {
    const rank_t stride = cfg.copy_stride();
    std::vector<rank_t> holders;
    holders.reserve(cfg.replication);
    for (rank_t k = 0; k < cfg.replication; ++k) {
        holders.push_back(static_cast<rank_t>(
            (first_copy + static_cast<std::uint64_t>(k) * stride) % cfg.ranks));
    }
    return holders;
}

std::vector<rank_t> basic_target_ranks(block_id_t block, const DistributionConfig& cfg) {
    cfg.validate();
    return holder_ranks(first_copy_rank_of_index(block, cfg), cfg);
}

std::vector<rank_t> permuted_target_ranks(block_id_t block, const DistributionConfig& cfg,
                                          const RangePermutation& perm) {
    cfg.validate();
    return holder_ranks(first_copy_rank_of_index(permuted_block_index(block, cfg, perm), cfg),
                        cfg);
}

std::vector<rank_t> target_ranks(block_id_t block, const DistributionConfig& cfg,
                                 const RangePermutation* perm) {
    if (perm != nullptr) {
        return permuted_target_ranks(block, cfg, *perm);
    }
    return basic_target_ranks(block, cfg);
}

std::vector<PlacementSegment> placement_segments(BlockRange interval,
                                                 const DistributionConfig& cfg,
                                                 const RangePermutation* perm) {
    cfg.validate();
    if (interval.empty()) {
        return {};
    }
    if (interval.end > cfg.blocks) {
        throw DomainError("interval outside [0, n)");
    }

    std::vector<PlacementSegment> segments;
    const auto emit = [&](BlockRange blocks, rank_t first_copy) {
        if (!segments.empty() && segments.back().first_copy == first_copy &&
            segments.back().blocks.end == blocks.begin) {
            segments.back().blocks.end = blocks.end;
        } else {
            segments.push_back({blocks, first_copy});
        }
    };

    // Walks first-copy boundaries inside a run that is contiguous in the
    // (possibly permuted) index space.
    const auto split_run = [&](block_id_t block, block_id_t index, block_id_t length) {
        while (length > 0) {
            const rank_t v = first_copy_rank_of_index(index, cfg);
            const block_id_t region_end = first_copy_index_range(v, cfg).end;
            const block_id_t step = std::min<block_id_t>(length, region_end - index);
            assert(step > 0);
            emit({block, block + step}, v);
            block += step;
            index += step;
            length -= step;
        }
    };

    if (perm == nullptr) {
        split_run(interval.begin, interval.begin, interval.size());
        return segments;
    }

    block_id_t block = interval.begin;
    while (block < interval.end) {
        const range_id_t range = block / cfg.blocks_per_range;
        const block_id_t range_blocks_end =
            std::min<block_id_t>({interval.end, (range + 1) * cfg.blocks_per_range, cfg.blocks});
        const PositionSpan span = position_span(perm->forward(range), cfg, *perm);
        const block_id_t index = span.start + block % cfg.blocks_per_range;
        split_run(block, index, range_blocks_end - block);
        block = range_blocks_end;
    }
    return segments;
}

std::vector<BlockRange> blocks_of_rank(rank_t rank, const DistributionConfig& cfg,
                                       const RangePermutation* perm) {
    cfg.validate();
    if (rank >= cfg.ranks) {
        throw DomainError("rank outside [0, p)");
    }

    // First-copy ranks whose holder set contains `rank`.
    std::vector<rank_t> firsts;
    firsts.reserve(cfg.replication);
    const rank_t stride = cfg.copy_stride();
    for (rank_t k = 0; k < cfg.replication; ++k) {
        const std::uint64_t offset = static_cast<std::uint64_t>(k) * stride % cfg.ranks;
        firsts.push_back(static_cast<rank_t>((rank + cfg.ranks - offset) % cfg.ranks));
    }
    std::sort(firsts.begin(), firsts.end());
    firsts.erase(std::unique(firsts.begin(), firsts.end()), firsts.end());

    std::vector<BlockRange> result;
    for (const rank_t v : firsts) {
        const BlockRange index_range = first_copy_index_range(v, cfg);
        if (perm == nullptr) {
            result.push_back(index_range);
            continue;
        }
        // Map the permuted-index interval back to original block intervals,
        // one permuted range position at a time.
        block_id_t index = index_range.begin;
        while (index < index_range.end) {
            const block_id_t original = original_block_index(index, cfg, *perm);
            const range_id_t range = original / cfg.blocks_per_range;
            const PositionSpan span = position_span(perm->forward(range), cfg, *perm);
            const block_id_t chunk_end =
                std::min<block_id_t>(index_range.end, span.start + span.length);
            result.push_back({original, original + (chunk_end - index)});
            index = chunk_end;
        }
    }
    return normalize_ranges(std::move(result));
}

std::vector<std::uint32_t> replica_group_of_rank(rank_t ranks, rank_t replication) {
    DistributionConfig cfg;
    cfg.ranks = ranks;
    cfg.blocks = ranks;  // one representative block per first-copy rank
    cfg.replication = replication;
    cfg.blocks_per_range = 1;
    cfg.validate();
    if (!cfg.replication_divides_ranks()) {
        throw ConfigError("replication level must divide the rank count");
    }

    constexpr std::uint32_t kUnassigned = 0xffffffffu;
    std::vector<std::uint32_t> group_of(ranks, kUnassigned);
    std::uint32_t next_group = 0;
    for (rank_t v = 0; v < ranks; ++v) {
        if (group_of[v] != kUnassigned) {
            continue;
        }
        for (const rank_t holder : basic_target_ranks(v, cfg)) {
            assert(group_of[holder] == kUnassigned);
            group_of[holder] = next_group;
        }
        ++next_group;
    }
    assert(next_group == ranks / replication);
    return group_of;
}

}  // namespace restore_sim
