#include "restore_sim/kmeans.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>

#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"
#include "restore_sim/store.hpp"

namespace restore_sim {

namespace {

constexpr std::uint64_t kGridCells = std::uint64_t{1} << 20;
constexpr double kGridScale = 1.0 / static_cast<double>(kGridCells);

double grid_coordinate(SplitMix64& rng) {
    return static_cast<double>(rng.below(kGridCells)) * kGridScale;
}

std::vector<std::byte> serialize_points(const std::vector<double>& coords) {
    std::vector<std::byte> bytes(coords.size() * sizeof(double));
    std::memcpy(bytes.data(), coords.data(), bytes.size());
    return bytes;
}

void append_points(std::vector<double>& coords, const std::vector<std::byte>& bytes) {
    const std::size_t old_size = coords.size();
    coords.resize(old_size + bytes.size() / sizeof(double));
    std::memcpy(coords.data() + old_size, bytes.data(), bytes.size());
}

}  // namespace

void KMeansSpec::validate() const {
    if (ranks < 1 || points_per_rank < 1 || dims < 1 || clusters < 1 || iterations < 1) {
        throw ConfigError("k-means parameters must be positive");
    }
    if (failure_fraction < 0.0 || failure_fraction >= 1.0) {
        throw ConfigError("failure fraction must be in [0, 1)");
    }
    if (replication < 1 || replication > ranks) {
        throw ConfigError("replication level must be in [1, ranks]");
    }
}

std::vector<double> kmeans_rank_points(const KMeansSpec& spec, rank_t rank) {
    SplitMix64 rng(derive_seed(spec.seed, 0x10000 + rank));
    std::vector<double> coords;
    coords.reserve(static_cast<std::size_t>(spec.points_per_rank) * spec.dims);
    for (std::uint32_t i = 0; i < spec.points_per_rank * spec.dims; ++i) {
        coords.push_back(grid_coordinate(rng));
    }
    return coords;
}

std::vector<double> kmeans_initial_centers(const KMeansSpec& spec) {
    SplitMix64 rng(derive_seed(spec.seed, 0x20000));
    std::vector<double> centers;
    centers.reserve(static_cast<std::size_t>(spec.clusters) * spec.dims);
    for (std::uint32_t i = 0; i < spec.clusters * spec.dims; ++i) {
        centers.push_back(grid_coordinate(rng));
    }
    return centers;
}

KMeansReport run_kmeans(const KMeansSpec& spec) {
    spec.validate();
    const std::uint32_t dims = spec.dims;
    const std::uint32_t k = spec.clusters;

    DistributionConfig cfg;
    cfg.ranks = spec.ranks;
    cfg.blocks = static_cast<block_id_t>(spec.ranks) * spec.points_per_rank;
    cfg.replication = spec.replication;
    cfg.blocks_per_range = std::min<block_id_t>(spec.blocks_per_range, cfg.blocks);
    cfg.permute = spec.permute;
    cfg.seed = spec.seed;

    Cluster cluster(spec.ranks, derive_seed(spec.seed, 0x30000));

    // Each point is one block.
    SubmitInput input;
    input.payloads.resize(spec.ranks);
    std::vector<std::vector<double>> points(spec.ranks);
    for (rank_t rank = 0; rank < spec.ranks; ++rank) {
        points[rank] = kmeans_rank_points(spec, rank);
        input.payloads[rank] = serialize_points(points[rank]);
    }
    StoreImage store =
        submit(input, cfg, dims * sizeof(double), cluster, "restore-submit");

    // Block intervals currently worked on by each rank; the load balancer
    // state that failure recovery re-distributes.
    std::vector<std::vector<BlockRange>> owned(spec.ranks);
    for (rank_t rank = 0; rank < spec.ranks; ++rank) {
        owned[rank] = default_contribution(rank, cfg);
    }

    std::vector<double> centers = kmeans_initial_centers(spec);
    const double step_probability =
        spec.failure_fraction > 0.0
            ? FailureSpec::step_probability_for_target(1.0 - spec.failure_fraction,
                                                       spec.iterations)
            : 0.0;

    KMeansReport report;
    std::vector<double> sums(static_cast<std::size_t>(k) * dims);
    std::vector<std::uint64_t> counts(k);

    for (std::uint32_t iteration = 0; iteration < spec.iterations; ++iteration) {
        if (step_probability > 0.0) {
            const std::vector<rank_t> newly_dead = cluster.kill_step(step_probability);
            if (!newly_dead.empty()) {
                report.failures.push_back({iteration, newly_dead});
                store.mark_failed(newly_dead);

                // Divide the dead ranks' blocks evenly among the survivors.
                std::vector<BlockRange> orphaned;
                for (const rank_t dead : newly_dead) {
                    orphaned.insert(orphaned.end(), owned[dead].begin(), owned[dead].end());
                    owned[dead].clear();
                    points[dead].clear();
                }
                orphaned = normalize_ranges(std::move(orphaned));
                block_id_t orphan_count = 0;
                for (const BlockRange& range : orphaned) {
                    orphan_count += range.size();
                }
                const std::vector<rank_t> survivors = cluster.alive_ranks();
                if (survivors.empty()) {
                    throw StateError("every rank has failed");
                }

                std::vector<BlockRangeRequest> requests;
                block_id_t assigned = 0;
                std::size_t range_index = 0;
                block_id_t range_used = 0;
                for (std::size_t s = 0; s < survivors.size(); ++s) {
                    const block_id_t share =
                        orphan_count * (s + 1) / survivors.size() - assigned;
                    BlockRangeRequest request;
                    request.requester = survivors[s];
                    block_id_t remaining = share;
                    while (remaining > 0) {
                        const BlockRange& source = orphaned[range_index];
                        const block_id_t available = source.size() - range_used;
                        const block_id_t take = std::min(remaining, available);
                        request.intervals.push_back({source.begin + range_used,
                                                     source.begin + range_used + take});
                        range_used += take;
                        remaining -= take;
                        if (range_used == source.size()) {
                            ++range_index;
                            range_used = 0;
                        }
                    }
                    assigned += share;
                    if (!request.intervals.empty()) {
                        requests.push_back(std::move(request));
                    }
                }

                try {
                    const LoadResult loaded =
                        load(requests, LoadMode::LocalLists, store, cluster,
                             derive_seed(spec.seed, 0x40000 + iteration), "restore-recover");
                    for (rank_t rank = 0; rank < spec.ranks; ++rank) {
                        for (const ReceivedRange& received : loaded[rank]) {
                            owned[rank].push_back(received.blocks);
                            append_points(points[rank], received.payload);
                        }
                        owned[rank] = normalize_ranges(std::move(owned[rank]));
                    }
                } catch (const IrrecoverableDataLoss& loss) {
                    report.data_loss = true;
                    report.lost = loss.lost_ranges();
                    report.iterations_run = iteration;
                    report.centers = std::move(centers);
                    report.assignment_counts.assign(k, 0);
                    report.phases = cluster.phase_records();
                    return report;
                }
            }
        }

        // Assignment and reduction. Point coordinates sit on a fixed grid,
        // so the per-cluster sums are exact and independent of summation
        // order; recovery therefore never perturbs the result.
        cluster.phase_begin("kmeans");
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), std::uint64_t{0});
        const std::vector<rank_t> alive = cluster.alive_ranks();
        const rank_t root = alive.front();
        std::vector<Message> reduce_messages;
        for (const rank_t rank : alive) {
            const std::vector<double>& coords = points[rank];
            const std::size_t local_points = coords.size() / dims;
            for (std::size_t point = 0; point < local_points; ++point) {
                const double* position = coords.data() + point * dims;
                std::uint32_t best = 0;
                double best_distance = std::numeric_limits<double>::infinity();
                for (std::uint32_t center = 0; center < k; ++center) {
                    const double* c = centers.data() + static_cast<std::size_t>(center) * dims;
                    double distance = 0.0;
                    for (std::uint32_t d = 0; d < dims; ++d) {
                        const double diff = position[d] - c[d];
                        distance += diff * diff;
                    }
                    if (distance < best_distance) {
                        best_distance = distance;
                        best = center;
                    }
                }
                counts[best] += 1;
                double* sum = sums.data() + static_cast<std::size_t>(best) * dims;
                for (std::uint32_t d = 0; d < dims; ++d) {
                    sum[d] += position[d];
                }
            }
            if (rank != root) {
                // Partial sums and counts travel to the root.
                reduce_messages.push_back(
                    {rank, root,
                     static_cast<std::uint64_t>(k) * (dims * sizeof(double) + sizeof(std::uint64_t)),
                     {}});
            }
        }
        cluster.exchange(std::move(reduce_messages));

        double movement = 0.0;
        for (std::uint32_t center = 0; center < k; ++center) {
            double* c = centers.data() + static_cast<std::size_t>(center) * dims;
            if (counts[center] == 0) {
                continue;  // empty cluster keeps its position
            }
            for (std::uint32_t d = 0; d < dims; ++d) {
                const double updated =
                    sums[static_cast<std::size_t>(center) * dims + d] /
                    static_cast<double>(counts[center]);
                movement = std::max(movement, std::abs(updated - c[d]));
                c[d] = updated;
            }
        }

        // Broadcast of the new centers from the root.
        std::vector<Message> broadcast_messages;
        for (const rank_t rank : alive) {
            if (rank != root) {
                broadcast_messages.push_back(
                    {root, rank, static_cast<std::uint64_t>(k) * dims * sizeof(double), {}});
            }
        }
        cluster.exchange(std::move(broadcast_messages));
        cluster.phase_end();

        report.iterations_run = iteration + 1;
        if (spec.tolerance > 0.0 && movement <= spec.tolerance) {
            break;
        }
    }

    report.centers = std::move(centers);
    report.assignment_counts.assign(counts.begin(), counts.end());
    report.phases = cluster.phase_records();
    return report;
}

}  // namespace restore_sim
