#include "restore_sim/store.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>

#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"

namespace restore_sim {

namespace {

void validate_request(const BlockRangeRequest& request, const DistributionConfig& cfg) {
    block_id_t previous_end = 0;
    bool first = true;
    for (const BlockRange& interval : request.intervals) {
        if (interval.empty()) {
            throw DataError("request contains an empty interval");
        }
        if (interval.end > cfg.blocks) {
            throw DataError("request interval outside [0, n)");
        }
        if (!first && interval.begin < previous_end) {
            throw DataError("request intervals must be sorted and disjoint");
        }
        previous_end = interval.end;
        first = false;
    }
}

}  // namespace

StoreImage::StoreImage(DistributionConfig cfg, std::size_t block_size)
    : cfg_(cfg), perm_(make_permutation(cfg)), block_size_(block_size), ranks_(cfg.ranks),
      alive_(cfg.ranks, true), alive_count_(cfg.ranks) {
    if (block_size < 1) {
        throw ConfigError("block size must be positive");
    }
}

bool StoreImage::is_alive(rank_t rank) const {
    if (rank >= cfg_.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    return alive_[rank];
}

block_id_t StoreImage::stored_block_count(rank_t rank) const {
    if (rank >= cfg_.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    block_id_t count = 0;
    for (const StoredRange& stored : ranks_[rank]) {
        count += stored.blocks.size();
    }
    return count;
}

std::vector<BlockRange> StoreImage::stored_ranges(rank_t rank) const {
    if (rank >= cfg_.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    std::vector<BlockRange> out;
    out.reserve(ranks_[rank].size());
    for (const StoredRange& stored : ranks_[rank]) {
        out.push_back(stored.blocks);
    }
    return out;
}

std::uint64_t StoreImage::total_stored_bytes() const {
    std::uint64_t total = 0;
    for (rank_t rank = 0; rank < cfg_.ranks; ++rank) {
        total += stored_block_count(rank) * block_size_;
    }
    return total;
}

std::vector<rank_t> StoreImage::alive_holders(rank_t first_copy) const {
    std::vector<rank_t> holders = holder_ranks(first_copy, cfg_);
    std::erase_if(holders, [&](rank_t rank) { return !alive_[rank]; });
    std::sort(holders.begin(), holders.end());
    return holders;
}

void StoreImage::mark_failed(std::span<const rank_t> ranks) {
    for (const rank_t rank : ranks) {
        if (rank >= cfg_.ranks) {
            throw DomainError("rank outside [0, p)");
        }
        if (!alive_[rank]) {
            throw StateError("rank " + std::to_string(rank) + " is already dead");
        }
    }
    for (const rank_t rank : ranks) {
        alive_[rank] = false;
        --alive_count_;
        ranks_[rank].clear();
        ranks_[rank].shrink_to_fit();
    }
}

void StoreImage::store_blocks(rank_t rank, BlockRange blocks,
                              std::span<const std::byte> payload) {
    if (rank >= cfg_.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    if (!alive_[rank]) {
        throw StateError("cannot store on a dead rank");
    }
    if (payload.size() != blocks.size() * block_size_) {
        throw DataError("payload size does not match the interval");
    }
    ranks_[rank].push_back({blocks, {payload.begin(), payload.end()}});
}

void StoreImage::read_blocks(rank_t rank, BlockRange blocks, std::span<std::byte> out) const {
    if (rank >= cfg_.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    if (!alive_[rank]) {
        throw StateError("cannot read from a dead rank");
    }
    if (out.size() != blocks.size() * block_size_) {
        throw DataError("output buffer size does not match the interval");
    }
    block_id_t cursor = blocks.begin;
    while (cursor < blocks.end) {
        const StoredRange* covering = nullptr;
        for (const StoredRange& stored : ranks_[rank]) {
            if (stored.blocks.contains(cursor)) {
                covering = &stored;
                break;
            }
        }
        if (covering == nullptr) {
            throw StateError("rank " + std::to_string(rank) + " does not hold block " +
                             std::to_string(cursor));
        }
        const block_id_t step = std::min(blocks.end, covering->blocks.end) - cursor;
        const std::size_t src_offset =
            static_cast<std::size_t>(cursor - covering->blocks.begin) * block_size_;
        const std::size_t dst_offset =
            static_cast<std::size_t>(cursor - blocks.begin) * block_size_;
        std::copy_n(covering->payload.begin() + static_cast<std::ptrdiff_t>(src_offset),
                    step * block_size_, out.begin() + static_cast<std::ptrdiff_t>(dst_offset));
        cursor += step;
    }
}

void StoreImage::coalesce() {
    for (auto& stored_ranges : ranks_) {
        std::sort(stored_ranges.begin(), stored_ranges.end(),
                  [](const StoredRange& a, const StoredRange& b) {
                      return a.blocks.begin < b.blocks.begin;
                  });
        std::vector<StoredRange> merged;
        for (StoredRange& stored : stored_ranges) {
            if (!merged.empty() && merged.back().blocks.end == stored.blocks.begin) {
                merged.back().blocks.end = stored.blocks.end;
                merged.back().payload.insert(merged.back().payload.end(),
                                             stored.payload.begin(), stored.payload.end());
            } else {
                merged.push_back(std::move(stored));
            }
        }
        stored_ranges = std::move(merged);
    }
}

std::vector<BlockRange> default_contribution(rank_t rank, const DistributionConfig& cfg) {
    if (rank >= cfg.ranks) {
        throw DomainError("rank outside [0, p)");
    }
    const auto begin = static_cast<block_id_t>(
        static_cast<unsigned __int128>(rank) * cfg.blocks / cfg.ranks);
    const auto end = static_cast<block_id_t>(
        static_cast<unsigned __int128>(rank + 1) * cfg.blocks / cfg.ranks);
    if (begin == end) {
        return {};
    }
    return {{begin, end}};
}

StoreImage submit(const SubmitInput& input, const DistributionConfig& cfg,
                  std::size_t block_size, Cluster& cluster, std::string_view phase) {
    cfg.validate();
    if (cluster.size() != cfg.ranks) {
        throw ConfigError("cluster size disagrees with the distribution");
    }
    if (input.payloads.size() != cfg.ranks) {
        throw DataError("need one payload buffer per rank");
    }
    if (input.contributed && input.contributed->size() != cfg.ranks) {
        throw DataError("need one contribution list per rank");
    }

    // Resolve contributions and check they partition [0, n).
    std::vector<std::vector<BlockRange>> contributions(cfg.ranks);
    std::vector<BlockRange> all_contributed;
    block_id_t contributed_count = 0;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        contributions[rank] = input.contributed ? (*input.contributed)[rank]
                                                : default_contribution(rank, cfg);
        block_id_t rank_blocks = 0;
        for (const BlockRange& interval : contributions[rank]) {
            if (interval.empty() || interval.end > cfg.blocks) {
                throw DataError("contributed interval outside [0, n)");
            }
            rank_blocks += interval.size();
            all_contributed.push_back(interval);
        }
        if (input.payloads[rank].size() != rank_blocks * block_size) {
            throw DataError("payload size of rank " + std::to_string(rank) +
                            " does not match its contribution");
        }
        if (rank_blocks > 0 && !cluster.is_alive(rank)) {
            throw StateError("contributing rank " + std::to_string(rank) + " is dead");
        }
        contributed_count += rank_blocks;
    }
    all_contributed = normalize_ranges(std::move(all_contributed));
    if (contributed_count != cfg.blocks || all_contributed.size() != 1 ||
        all_contributed.front() != BlockRange{0, cfg.blocks}) {
        throw DataError("contributions must cover every block exactly once");
    }

    StoreImage image(cfg, block_size);
    const RangePermutation* perm = image.permutation();

    // One outgoing buffer per (src, dst) pair; the interval list is the
    // framing metadata and is not charged to the byte counters.
    struct Envelope {
        std::vector<BlockRange> intervals;
        std::vector<std::byte> bytes;
    };
    std::map<std::pair<rank_t, rank_t>, Envelope> envelopes;

    for (rank_t src = 0; src < cfg.ranks; ++src) {
        std::size_t payload_offset = 0;
        for (const BlockRange& interval : contributions[src]) {
            for (const PlacementSegment& segment : placement_segments(interval, cfg, perm)) {
                const std::size_t seg_bytes =
                    static_cast<std::size_t>(segment.blocks.size()) * block_size;
                const std::size_t seg_offset =
                    payload_offset +
                    static_cast<std::size_t>(segment.blocks.begin - interval.begin) * block_size;
                for (const rank_t dst : holder_ranks(segment.first_copy, cfg)) {
                    Envelope& envelope = envelopes[{src, dst}];
                    envelope.intervals.push_back(segment.blocks);
                    envelope.bytes.insert(
                        envelope.bytes.end(), input.payloads[src].begin() + seg_offset,
                        input.payloads[src].begin() + seg_offset + seg_bytes);
                }
            }
            payload_offset += static_cast<std::size_t>(interval.size()) * block_size;
        }
    }

    std::vector<Message> messages;
    messages.reserve(envelopes.size());
    for (auto& [key, envelope] : envelopes) {
        messages.push_back({key.first, key.second, envelope.bytes.size(),
                            std::move(envelope.bytes)});
    }

    cluster.phase_begin(std::string(phase));
    std::vector<Message> delivered = cluster.exchange(std::move(messages));
    cluster.phase_end();

    for (Message& message : delivered) {
        const Envelope& envelope = envelopes.at({message.src, message.dst});
        std::size_t offset = 0;
        for (const BlockRange& interval : envelope.intervals) {
            const std::size_t nbytes = static_cast<std::size_t>(interval.size()) * block_size;
            image.store_blocks(message.dst, interval,
                               std::span(message.payload).subspan(offset, nbytes));
            offset += nbytes;
        }
        assert(offset == message.payload.size());
    }
    image.coalesce();
    return image;
}

RequestPlan plan_requests(const std::vector<BlockRangeRequest>& requests,
                          const StoreImage& store, std::uint64_t seed) {
    const DistributionConfig& cfg = store.config();
    RequestPlan plan;
    plan.seed = seed;
    std::vector<BlockRange> lost;

    for (const BlockRangeRequest& request : requests) {
        if (request.requester >= cfg.ranks) {
            throw DomainError("requester outside [0, p)");
        }
        if (!store.is_alive(request.requester)) {
            throw StateError("requester " + std::to_string(request.requester) + " is dead");
        }
        validate_request(request, cfg);

        // Touching intervals form one run of consecutive blocks.
        for (const BlockRange& interval : normalize_ranges(request.intervals)) {
            // Maximal runs of consecutive blocks with identical alive-holder
            // sets; one server per run.
            BlockRange run;
            std::vector<rank_t> run_holders;
            const auto flush = [&]() {
                if (run.empty()) {
                    return;
                }
                if (run_holders.empty()) {
                    lost.push_back(run);
                } else {
                    const std::uint64_t pick =
                        mix64(seed ^ hash_seeded(request.requester, run.begin));
                    const rank_t server = run_holders[pick % run_holders.size()];
                    plan.assignments.push_back({server, request.requester, run});
                }
                run = {};
            };
            for (const PlacementSegment& segment :
                 placement_segments(interval, cfg, store.permutation())) {
                std::vector<rank_t> holders = store.alive_holders(segment.first_copy);
                if (!run.empty() && run.end == segment.blocks.begin && holders == run_holders) {
                    run.end = segment.blocks.end;
                    continue;
                }
                flush();
                run = segment.blocks;
                run_holders = std::move(holders);
            }
            flush();
        }
    }

    if (!lost.empty()) {
        throw IrrecoverableDataLoss(normalize_ranges(std::move(lost)));
    }
    return plan;
}

LoadResult load(const std::vector<BlockRangeRequest>& requests, LoadMode mode,
                const StoreImage& store, Cluster& cluster, std::uint64_t seed,
                std::string_view phase_prefix) {
    const DistributionConfig& cfg = store.config();
    if (cluster.size() != cfg.ranks) {
        throw ConfigError("cluster size disagrees with the distribution");
    }
    const RequestPlan plan = plan_requests(requests, store, seed);

    // Group assignments per (server, receiver) pair.
    std::map<std::pair<rank_t, rank_t>, std::vector<BlockRange>> pairs;
    for (const Assignment& assignment : plan.assignments) {
        if (!store.is_alive(assignment.server)) {
            throw StateError("plan chose a dead serving rank");
        }
        pairs[{assignment.server, assignment.receiver}].push_back(assignment.blocks);
    }

    if (mode == LoadMode::LocalLists) {
        // Request-forwarding round: receivers tell each chosen server which
        // intervals they need. 16 bytes per interval (two block ids).
        std::vector<Message> request_messages;
        request_messages.reserve(pairs.size());
        for (const auto& [key, intervals] : pairs) {
            request_messages.push_back(
                {key.second, key.first, intervals.size() * 2 * sizeof(block_id_t), {}});
        }
        cluster.phase_begin(std::string(phase_prefix) + "-requests");
        cluster.exchange(std::move(request_messages));
        cluster.phase_end();
    }

    std::vector<Message> data_messages;
    data_messages.reserve(pairs.size());
    for (const auto& [key, intervals] : pairs) {
        std::size_t total = 0;
        for (const BlockRange& interval : intervals) {
            total += static_cast<std::size_t>(interval.size()) * store.block_size();
        }
        Message message{key.first, key.second, total, std::vector<std::byte>(total)};
        std::size_t offset = 0;
        for (const BlockRange& interval : intervals) {
            const std::size_t nbytes =
                static_cast<std::size_t>(interval.size()) * store.block_size();
            store.read_blocks(key.first, interval,
                              std::span(message.payload).subspan(offset, nbytes));
            offset += nbytes;
        }
        data_messages.push_back(std::move(message));
    }

    cluster.phase_begin(std::string(phase_prefix) + "-data");
    std::vector<Message> delivered = cluster.exchange(std::move(data_messages));
    cluster.phase_end();

    LoadResult result(cfg.ranks);
    for (Message& message : delivered) {
        const auto& intervals = pairs.at({message.src, message.dst});
        std::size_t offset = 0;
        for (const BlockRange& interval : intervals) {
            const std::size_t nbytes =
                static_cast<std::size_t>(interval.size()) * store.block_size();
            result[message.dst].push_back(
                {interval,
                 {message.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                  message.payload.begin() + static_cast<std::ptrdiff_t>(offset + nbytes)}});
            offset += nbytes;
        }
    }
    for (auto& received : result) {
        std::sort(received.begin(), received.end(),
                  [](const ReceivedRange& a, const ReceivedRange& b) {
                      return a.blocks.begin < b.blocks.begin;
                  });
    }
    return result;
}

}  // namespace restore_sim
