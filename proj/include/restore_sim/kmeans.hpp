#pragma once

#include <cstdint>
#include <vector>

#include "restore_sim/cluster.hpp"
#include "restore_sim/types.hpp"

namespace restore_sim {

/// Fault-tolerant k-means on the simulated cluster: every rank submits its
/// points to the store once; when ranks die mid-run their points are
/// reloaded from the surviving replicas and divided evenly among the
/// survivors, then the iteration continues.
struct KMeansSpec {
    rank_t ranks = 48;
    std::uint32_t points_per_rank = 1024;
    std::uint32_t dims = 8;
    std::uint32_t clusters = 20;
    std::uint32_t iterations = 100;
    /// Expected fraction of ranks failed over the whole run; converted to a
    /// per-iteration kill probability 1 - (1 - fraction)^(1/iterations).
    double failure_fraction = 0.01;
    std::uint64_t seed = 1;
    /// Early stop when no center moves more than this (0 = run all
    /// iterations).
    double tolerance = 0.0;
    rank_t replication = 4;
    block_id_t blocks_per_range = 64;
    bool permute = false;

    void validate() const;
};

struct KMeansFailureEvent {
    std::uint32_t iteration = 0;
    std::vector<rank_t> ranks;
};

struct KMeansReport {
    std::vector<double> centers;  // clusters x dims, row-major
    std::vector<std::uint64_t> assignment_counts;
    std::uint32_t iterations_run = 0;
    std::vector<KMeansFailureEvent> failures;
    std::vector<PhaseRecord> phases;  // "restore-*" phases vs "kmeans" phases
    bool data_loss = false;
    std::vector<BlockRange> lost;
};

KMeansReport run_kmeans(const KMeansSpec& spec);

/// Synthetic input of one rank: points_per_rank x dims coordinates on a
/// 2^-20 grid in [0, 1). On that grid per-cluster coordinate sums stay
/// exactly representable in doubles, so reductions are order-independent
/// and failure recovery is bit-transparent.
std::vector<double> kmeans_rank_points(const KMeansSpec& spec, rank_t rank);

/// The shared initial centers.
std::vector<double> kmeans_initial_centers(const KMeansSpec& spec);

}  // namespace restore_sim
