#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "restore_sim/cluster.hpp"
#include "restore_sim/store.hpp"

namespace restore_sim {

/// Communication benchmark of the three store operations on the simulated
/// cluster. The performance surface is bottleneck message/byte counts, not
/// wall-clock time.
struct BenchSpec {
    rank_t ranks = 64;
    std::uint64_t bytes_per_rank = 64 * 1024;
    std::uint32_t block_size = 64;
    rank_t replication = 4;
    block_id_t blocks_per_range = 64;
    /// Unset: permutations on for submit and the 1%-load, off for the
    /// full load (which they only slow down).
    std::optional<bool> permute;
    LoadMode mode = LoadMode::LocalLists;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] block_id_t blocks_per_rank() const { return bytes_per_rank / block_size; }
    [[nodiscard]] block_id_t total_blocks() const {
        return blocks_per_rank() * static_cast<block_id_t>(ranks);
    }
};

struct BenchRecord {
    std::string operation;
    block_id_t blocks_per_range = 0;
    PhaseRecord phase;
};

/// Requests reproducing a 1% data loss: a random alive rank i is chosen and
/// blocks [i n/p, i n/p + n/100) (wrapping modulo n) are split evenly over
/// all alive ranks, each receiving one contiguous chunk.
std::vector<BlockRangeRequest> load_one_percent_requests(const DistributionConfig& cfg,
                                                         const std::vector<bool>& alive,
                                                         std::uint64_t seed);

/// Every rank requests the slice submitted by its successor, so the whole
/// store travels over the network once.
std::vector<BlockRangeRequest> load_all_requests(const DistributionConfig& cfg);

/// Runs submit, load-1%, and load-all each on a fresh cluster and store.
std::vector<BenchRecord> run_bench_operations(const BenchSpec& spec);

/// Varies blocks-per-range over powers of two up to one rank's data and
/// re-runs submit + load-1% per point.
std::vector<BenchRecord> run_permutation_range_sweep(const BenchSpec& spec);

/// Deterministic per-rank payload for the benchmarks.
std::vector<std::byte> bench_rank_payload(const BenchSpec& spec, rank_t rank);

}  // namespace restore_sim
