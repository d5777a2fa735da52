#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "restore_sim/distribution.hpp"
#include "restore_sim/errors.hpp"

using namespace restore_sim;

namespace {

DistributionConfig make_cfg(rank_t p, block_id_t n, rank_t r, block_id_t s_pr = 1,
                            bool permute = false, std::uint64_t seed = 42) {
    DistributionConfig cfg;
    cfg.ranks = p;
    cfg.blocks = n;
    cfg.replication = r;
    cfg.blocks_per_range = s_pr;
    cfg.permute = permute;
    cfg.seed = seed;
    return cfg;
}

block_id_t count_blocks(const std::vector<BlockRange>& ranges) {
    block_id_t count = 0;
    for (const BlockRange& range : ranges) {
        count += range.size();
    }
    return count;
}

bool ranges_contain(const std::vector<BlockRange>& ranges, block_id_t block) {
    return std::any_of(ranges.begin(), ranges.end(),
                       [&](const BlockRange& range) { return range.contains(block); });
}

}  // namespace

TEST_CASE("basic placement matches the p=4, n=16, r=2 layout") {
    const DistributionConfig cfg = make_cfg(4, 16, 2);
    CHECK(basic_target_ranks(5, cfg) == std::vector<rank_t>{1, 3});
    CHECK(basic_target_ranks(0, cfg) == std::vector<rank_t>{0, 2});
    CHECK(basic_target_ranks(7, make_cfg(8, 8, 1)) == std::vector<rank_t>{7});
    CHECK_THROWS_AS(basic_target_ranks(16, cfg), DomainError);
}

TEST_CASE("config invariants are validated") {
    CHECK_THROWS_AS(make_cfg(0, 16, 1).validate(), ConfigError);
    CHECK_THROWS_AS(make_cfg(4, 0, 1).validate(), ConfigError);
    CHECK_THROWS_AS(make_cfg(4, 16, 5).validate(), ConfigError);
    CHECK_THROWS_AS(make_cfg(4, 16, 0).validate(), ConfigError);
    CHECK_THROWS_AS(make_cfg(4, 16, 2, 17).validate(), ConfigError);
    CHECK_NOTHROW(make_cfg(4, 16, 2, 16).validate());
}

TEST_CASE("permutation ranges are floor divisions") {
    CHECK(permutation_range_of(13, 2) == 6);
    CHECK(permutation_range_of(0, 2) == 0);
    CHECK(permutation_range_of(15, 16) == 0);
}

TEST_CASE("replication cardinality and stride structure") {
    for (const auto& [p, r] : std::vector<std::pair<rank_t, rank_t>>{
             {4, 2}, {8, 4}, {12, 3}, {16, 16}, {9, 3}}) {
        const DistributionConfig cfg = make_cfg(p, 64, r);
        for (block_id_t x = 0; x < 64; ++x) {
            const std::vector<rank_t> targets = basic_target_ranks(x, cfg);
            REQUIRE(targets.size() == r);
            const std::set<rank_t> unique(targets.begin(), targets.end());
            REQUIRE(unique.size() == r);
            for (rank_t k = 0; k < r; ++k) {
                REQUIRE(targets[k] == (targets[0] + k * (p / r)) % p);
            }
        }
    }
}

TEST_CASE("single range behaves as the identity permutation") {
    // With one permutation range forward(0) == 0, so the permuted placement
    // must coincide with the basic one for every block.
    const DistributionConfig cfg = make_cfg(4, 16, 2, 16, true);
    const auto perm = make_permutation(cfg);
    REQUIRE(perm.has_value());
    for (block_id_t x = 0; x < 16; ++x) {
        CHECK(permuted_target_ranks(x, cfg, *perm) == basic_target_ranks(x, cfg));
    }
}

TEST_CASE("permuted placement keeps the stride and balances first copies") {
    const DistributionConfig cfg = make_cfg(4, 16, 2, 2, true, 42);
    const auto perm = make_permutation(cfg);
    REQUIRE(perm.has_value());

    std::map<rank_t, int> first_copy_count;
    for (block_id_t x = 0; x < 16; ++x) {
        const std::vector<rank_t> targets = permuted_target_ranks(x, cfg, *perm);
        REQUIRE(targets.size() == 2);
        CHECK(targets[1] == (targets[0] + 2) % 4);
        CHECK(targets[0] != targets[1]);
        first_copy_count[targets[0]] += 1;
    }
    // The permutation is a bijection on ranges, so per-rank first-copy load
    // is preserved: four blocks per rank.
    for (rank_t rank = 0; rank < 4; ++rank) {
        CHECK(first_copy_count[rank] == 4);
    }
}

TEST_CASE("permuted index is a bijection, also with a short trailing range") {
    for (const auto& [n, s_pr] : std::vector<std::pair<block_id_t, block_id_t>>{
             {16, 2}, {16, 3}, {10, 4}, {17, 5}, {33, 32}}) {
        const DistributionConfig cfg = make_cfg(4, n, 2, s_pr, true, 7);
        const auto perm = make_permutation(cfg);
        std::vector<bool> seen(n, false);
        for (block_id_t x = 0; x < n; ++x) {
            const block_id_t index = permuted_block_index(x, cfg, *perm);
            REQUIRE(index < n);
            REQUIRE_FALSE(seen[index]);
            seen[index] = true;
            REQUIRE(original_block_index(index, cfg, *perm) == x);
        }
    }
}

TEST_CASE("blocks within a range keep their offset and move as a unit") {
    const DistributionConfig cfg = make_cfg(4, 16, 2, 2, true, 42);
    const auto perm = make_permutation(cfg);
    for (block_id_t x = 0; x < 16; x += 2) {
        const block_id_t a = permuted_block_index(x, cfg, *perm);
        const block_id_t b = permuted_block_index(x + 1, cfg, *perm);
        CHECK(b == a + 1);
        CHECK(a % 2 == 0);
    }
}

TEST_CASE("blocks_of_rank inverts the placement") {
    SUBCASE("basic example") {
        const DistributionConfig cfg = make_cfg(4, 16, 2);
        const std::vector<BlockRange> held = blocks_of_rank(0, cfg, nullptr);
        CHECK(held == std::vector<BlockRange>{{0, 4}, {8, 12}});
    }
    SUBCASE("single rank holds everything") {
        const DistributionConfig cfg = make_cfg(1, 32, 1);
        CHECK(blocks_of_rank(0, cfg, nullptr) == std::vector<BlockRange>{{0, 32}});
    }
    SUBCASE("exhaustive cross-check") {
        for (const auto& [p, n, r, s_pr, permute] :
             std::vector<std::tuple<rank_t, block_id_t, rank_t, block_id_t, bool>>{
                 {4, 16, 2, 1, false},
                 {4, 16, 2, 2, true},
                 {4, 17, 2, 3, true},
                 {6, 23, 3, 4, true},
                 {5, 19, 3, 2, true},  // r does not divide p
                 {8, 64, 4, 8, false},
                 {8, 3, 2, 1, false},  // fewer blocks than ranks
                 {8, 3, 2, 2, true},
                 {3, 7, 3, 7, true}}) {
            const DistributionConfig cfg = make_cfg(p, n, r, s_pr, permute, 11);
            const auto perm = make_permutation(cfg);
            const RangePermutation* perm_ptr = perm ? &*perm : nullptr;

            std::vector<std::vector<BlockRange>> held(p);
            block_id_t total = 0;
            for (rank_t rank = 0; rank < p; ++rank) {
                held[rank] = blocks_of_rank(rank, cfg, perm_ptr);
                total += count_blocks(held[rank]);
            }
            // Every copy is accounted for exactly once.
            REQUIRE(total == static_cast<block_id_t>(n) * r);
            for (block_id_t x = 0; x < n; ++x) {
                const std::vector<rank_t> targets = target_ranks(x, cfg, perm_ptr);
                for (rank_t rank = 0; rank < p; ++rank) {
                    const bool is_target =
                        std::find(targets.begin(), targets.end(), rank) != targets.end();
                    REQUIRE(ranges_contain(held[rank], x) == is_target);
                }
            }
        }
    }
}

TEST_CASE("load balance: each rank holds exactly r n / p blocks when p | n and r | p") {
    for (const auto& [p, n, r, s_pr, permute] :
         std::vector<std::tuple<rank_t, block_id_t, rank_t, block_id_t, bool>>{
             {4, 16, 2, 2, false},
             {4, 16, 2, 2, true},
             {4, 16, 2, 3, true},  // short trailing range
             {8, 64, 4, 4, true},
             {6, 36, 3, 5, true},
             {16, 160, 4, 10, true}}) {
        const DistributionConfig cfg = make_cfg(p, n, r, s_pr, permute, 3);
        const auto perm = make_permutation(cfg);
        const RangePermutation* perm_ptr = perm ? &*perm : nullptr;
        for (rank_t rank = 0; rank < p; ++rank) {
            REQUIRE(count_blocks(blocks_of_rank(rank, cfg, perm_ptr)) ==
                    static_cast<block_id_t>(r) * n / p);
        }
    }
}

TEST_CASE("placement segments tile an interval and agree with target_ranks") {
    for (const auto& [p, n, r, s_pr, permute] :
         std::vector<std::tuple<rank_t, block_id_t, rank_t, block_id_t, bool>>{
             {4, 16, 2, 1, false}, {4, 16, 2, 2, true}, {4, 17, 2, 3, true}, {6, 23, 3, 4, true},
             {7, 29, 2, 5, true}}) {
        const DistributionConfig cfg = make_cfg(p, n, r, s_pr, permute, 13);
        const auto perm = make_permutation(cfg);
        const RangePermutation* perm_ptr = perm ? &*perm : nullptr;

        for (const BlockRange interval :
             {BlockRange{0, n}, BlockRange{1, n / 2 + 1}, BlockRange{n / 3, n - 1}}) {
            if (interval.empty()) {
                continue;
            }
            block_id_t cursor = interval.begin;
            for (const PlacementSegment& segment : placement_segments(interval, cfg, perm_ptr)) {
                REQUIRE(segment.blocks.begin == cursor);
                cursor = segment.blocks.end;
                for (block_id_t x = segment.blocks.begin; x < segment.blocks.end; ++x) {
                    REQUIRE(target_ranks(x, cfg, perm_ptr)[0] == segment.first_copy);
                }
            }
            REQUIRE(cursor == interval.end);
        }
    }
}

TEST_CASE("permutation domain mismatch is a configuration error") {
    const DistributionConfig cfg = make_cfg(4, 16, 2, 2, true, 42);
    const RangePermutation wrong(5, 42);
    CHECK_THROWS_AS(permuted_target_ranks(0, cfg, wrong), ConfigError);
}

TEST_CASE("identical configuration yields identical placements") {
    const DistributionConfig cfg = make_cfg(8, 128, 4, 8, true, 77);
    const auto perm_a = make_permutation(cfg);
    const auto perm_b = make_permutation(cfg);
    for (block_id_t x = 0; x < 128; ++x) {
        CHECK(permuted_target_ranks(x, cfg, *perm_a) == permuted_target_ranks(x, cfg, *perm_b));
    }
}

TEST_CASE("replica groups derived from the placement") {
    const std::vector<std::uint32_t> group_of = replica_group_of_rank(8, 2);
    REQUIRE(group_of.size() == 8);
    // Ranks p/r apart hold the same data.
    for (rank_t rank = 0; rank < 4; ++rank) {
        CHECK(group_of[rank] == group_of[rank + 4]);
    }
    const std::set<std::uint32_t> groups(group_of.begin(), group_of.end());
    CHECK(groups.size() == 4);

    CHECK_THROWS_AS(replica_group_of_rank(8, 3), ConfigError);
}
