#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <vector>

namespace restore_sim {

using rank_t = std::uint32_t;
using block_id_t = std::uint64_t;
using range_id_t = std::uint64_t;

/// Half-open interval [begin, end) of block identifiers.
struct BlockRange {
    block_id_t begin = 0;
    block_id_t end = 0;

    [[nodiscard]] constexpr block_id_t size() const noexcept { return end - begin; }
    [[nodiscard]] constexpr bool empty() const noexcept { return begin >= end; }
    [[nodiscard]] constexpr bool contains(block_id_t id) const noexcept {
        return id >= begin && id < end;
    }

    friend constexpr bool operator==(const BlockRange&, const BlockRange&) = default;
    friend constexpr auto operator<=>(const BlockRange&, const BlockRange&) = default;
};

/// Sorts ranges, merges overlapping or adjacent ones, and drops empties.
inline std::vector<BlockRange> normalize_ranges(std::vector<BlockRange> ranges) {
    std::erase_if(ranges, [](const BlockRange& r) { return r.empty(); });
    std::sort(ranges.begin(), ranges.end());
    std::vector<BlockRange> merged;
    for (const BlockRange& range : ranges) {
        if (!merged.empty() && range.begin <= merged.back().end) {
            merged.back().end = std::max(merged.back().end, range.end);
        } else {
            merged.push_back(range);
        }
    }
    return merged;
}

}  // namespace restore_sim
