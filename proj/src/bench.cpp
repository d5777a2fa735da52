#include "restore_sim/bench.hpp"

#include <algorithm>

#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"

namespace restore_sim {

void BenchSpec::validate() const {
    if (ranks < 2) {
        throw ConfigError("benchmarks need at least two ranks");
    }
    if (block_size < 1 || bytes_per_rank < block_size || bytes_per_rank % block_size != 0) {
        throw ConfigError("bytes per rank must be a positive multiple of the block size");
    }
    if (replication < 1 || replication > ranks) {
        throw ConfigError("replication level must be in [1, ranks]");
    }
    if (blocks_per_range < 1) {
        throw ConfigError("blocks per permutation range must be positive");
    }
}

std::vector<std::byte> bench_rank_payload(const BenchSpec& spec, rank_t rank) {
    SplitMix64 rng(derive_seed(spec.seed, 0x50000 + rank));
    std::vector<std::byte> payload(spec.bytes_per_rank);
    for (std::byte& byte : payload) {
        byte = static_cast<std::byte>(rng.next() & 0xff);
    }
    return payload;
}

std::vector<BlockRangeRequest> load_one_percent_requests(const DistributionConfig& cfg,
                                                         const std::vector<bool>& alive,
                                                         std::uint64_t seed) {
    if (alive.size() != cfg.ranks) {
        throw DomainError("alive vector size disagrees with the rank count");
    }
    std::vector<rank_t> receivers;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        if (alive[rank]) {
            receivers.push_back(rank);
        }
    }
    if (receivers.empty()) {
        throw StateError("no alive rank left to request data");
    }

    SplitMix64 rng(seed);
    const rank_t start_rank = receivers[rng.below(receivers.size())];
    const block_id_t blocks_per_rank = cfg.blocks / cfg.ranks;
    const block_id_t start = static_cast<block_id_t>(start_rank) * blocks_per_rank;
    const block_id_t total = std::max<block_id_t>(1, cfg.blocks / 100);

    std::vector<BlockRangeRequest> requests;
    block_id_t assigned = 0;
    for (std::size_t i = 0; i < receivers.size(); ++i) {
        const block_id_t share = total * (i + 1) / receivers.size() - assigned;
        if (share == 0) {
            assigned += share;
            continue;
        }
        const block_id_t chunk_begin = (start + assigned) % cfg.blocks;
        const block_id_t chunk_end_raw = chunk_begin + share;
        BlockRangeRequest request;
        request.requester = receivers[i];
        if (chunk_end_raw <= cfg.blocks) {
            request.intervals.push_back({chunk_begin, chunk_end_raw});
        } else {
            // The chunk wraps around the end of the id space.
            request.intervals.push_back({0, chunk_end_raw - cfg.blocks});
            request.intervals.push_back({chunk_begin, cfg.blocks});
        }
        assigned += share;
        requests.push_back(std::move(request));
    }
    return requests;
}

std::vector<BlockRangeRequest> load_all_requests(const DistributionConfig& cfg) {
    std::vector<BlockRangeRequest> requests;
    const block_id_t blocks_per_rank = cfg.blocks / cfg.ranks;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        const rank_t source = (rank + 1) % cfg.ranks;
        BlockRangeRequest request;
        request.requester = rank;
        request.intervals.push_back({static_cast<block_id_t>(source) * blocks_per_rank,
                                     static_cast<block_id_t>(source + 1) * blocks_per_rank});
        requests.push_back(std::move(request));
    }
    return requests;
}

namespace {

DistributionConfig bench_config(const BenchSpec& spec, bool permute,
                                block_id_t blocks_per_range) {
    DistributionConfig cfg;
    cfg.ranks = spec.ranks;
    cfg.blocks = spec.total_blocks();
    cfg.replication = spec.replication;
    cfg.blocks_per_range = std::min<block_id_t>(blocks_per_range, cfg.blocks);
    cfg.permute = permute;
    cfg.seed = spec.seed;
    return cfg;
}

SubmitInput bench_input(const BenchSpec& spec) {
    SubmitInput input;
    input.payloads.resize(spec.ranks);
    for (rank_t rank = 0; rank < spec.ranks; ++rank) {
        input.payloads[rank] = bench_rank_payload(spec, rank);
    }
    return input;
}

void append_records(std::vector<BenchRecord>& records, const Cluster& cluster,
                    std::string_view operation, std::string_view prefix,
                    block_id_t blocks_per_range) {
    for (const PhaseRecord& phase : cluster.phase_records()) {
        if (phase.phase.starts_with(prefix)) {
            records.push_back({std::string(operation), blocks_per_range, phase});
        }
    }
}

void run_operations(const BenchSpec& spec, block_id_t blocks_per_range, bool include_load_all,
                    std::vector<BenchRecord>& records) {
    const SubmitInput input = bench_input(spec);

    {
        Cluster cluster(spec.ranks, derive_seed(spec.seed, 1));
        submit(input, bench_config(spec, spec.permute.value_or(true), blocks_per_range),
               spec.block_size, cluster, "submit");
        append_records(records, cluster, "submit", "submit", blocks_per_range);
    }
    {
        Cluster cluster(spec.ranks, derive_seed(spec.seed, 2));
        const DistributionConfig cfg =
            bench_config(spec, spec.permute.value_or(true), blocks_per_range);
        const StoreImage store = submit(input, cfg, spec.block_size, cluster, "setup");
        const std::vector<BlockRangeRequest> requests =
            load_one_percent_requests(cfg, cluster.alive(), derive_seed(spec.seed, 3));
        load(requests, spec.mode, store, cluster, derive_seed(spec.seed, 4), "load-1pct");
        append_records(records, cluster, "load-1pct", "load-1pct", blocks_per_range);
    }
    if (include_load_all) {
        Cluster cluster(spec.ranks, derive_seed(spec.seed, 5));
        const DistributionConfig cfg =
            bench_config(spec, spec.permute.value_or(false), blocks_per_range);
        const StoreImage store = submit(input, cfg, spec.block_size, cluster, "setup");
        const std::vector<BlockRangeRequest> requests = load_all_requests(cfg);
        load(requests, spec.mode, store, cluster, derive_seed(spec.seed, 6), "load-all");
        append_records(records, cluster, "load-all", "load-all", blocks_per_range);
    }
}

}  // namespace

std::vector<BenchRecord> run_bench_operations(const BenchSpec& spec) {
    spec.validate();
    std::vector<BenchRecord> records;
    run_operations(spec, spec.blocks_per_range, true, records);
    return records;
}

std::vector<BenchRecord> run_permutation_range_sweep(const BenchSpec& spec) {
    spec.validate();
    // The full load runs with permutations off, so the sweep covers only the
    // two operations the range size actually affects.
    std::vector<BenchRecord> records;
    for (block_id_t blocks_per_range = 1; blocks_per_range <= spec.blocks_per_rank();
         blocks_per_range *= 2) {
        run_operations(spec, blocks_per_range, false, records);
    }
    return records;
}

}  // namespace restore_sim
