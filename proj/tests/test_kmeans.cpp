#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "restore_sim/cluster.hpp"
#include "restore_sim/kmeans.hpp"

using namespace restore_sim;

namespace {

// Plain single-threaded k-means over the same synthetic input; the oracle
// for the distributed runs.
struct PlainResult {
    std::vector<double> centers;
    std::vector<std::uint64_t> counts;
};

PlainResult plain_kmeans(const KMeansSpec& spec) {
    std::vector<double> points;
    for (rank_t rank = 0; rank < spec.ranks; ++rank) {
        const std::vector<double> rank_points = kmeans_rank_points(spec, rank);
        points.insert(points.end(), rank_points.begin(), rank_points.end());
    }
    std::vector<double> centers = kmeans_initial_centers(spec);
    const std::size_t total_points = points.size() / spec.dims;
    std::vector<double> sums(static_cast<std::size_t>(spec.clusters) * spec.dims);
    std::vector<std::uint64_t> counts(spec.clusters);
    for (std::uint32_t iteration = 0; iteration < spec.iterations; ++iteration) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), std::uint64_t{0});
        for (std::size_t point = 0; point < total_points; ++point) {
            const double* position = points.data() + point * spec.dims;
            std::uint32_t best = 0;
            double best_distance = std::numeric_limits<double>::infinity();
            for (std::uint32_t center = 0; center < spec.clusters; ++center) {
                const double* c = centers.data() + static_cast<std::size_t>(center) * spec.dims;
                double distance = 0.0;
                for (std::uint32_t d = 0; d < spec.dims; ++d) {
                    const double diff = position[d] - c[d];
                    distance += diff * diff;
                }
                if (distance < best_distance) {
                    best_distance = distance;
                    best = center;
                }
            }
            counts[best] += 1;
            for (std::uint32_t d = 0; d < spec.dims; ++d) {
                sums[static_cast<std::size_t>(best) * spec.dims + d] += position[d];
            }
        }
        for (std::uint32_t center = 0; center < spec.clusters; ++center) {
            if (counts[center] == 0) {
                continue;
            }
            for (std::uint32_t d = 0; d < spec.dims; ++d) {
                centers[static_cast<std::size_t>(center) * spec.dims + d] =
                    sums[static_cast<std::size_t>(center) * spec.dims + d] /
                    static_cast<double>(counts[center]);
            }
        }
    }
    return {centers, counts};
}

KMeansSpec small_spec(std::uint64_t seed) {
    KMeansSpec spec;
    spec.ranks = 16;
    spec.points_per_rank = 64;
    spec.dims = 4;
    spec.clusters = 5;
    spec.iterations = 25;
    spec.failure_fraction = 0.0;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("without failures the distributed run equals plain k-means bit for bit") {
    const KMeansSpec spec = small_spec(3);
    const KMeansReport report = run_kmeans(spec);
    const PlainResult plain = plain_kmeans(spec);
    REQUIRE(report.iterations_run == spec.iterations);
    REQUIRE(report.failures.empty());
    REQUIRE(report.centers == plain.centers);
    REQUIRE(report.assignment_counts == plain.counts);
}

TEST_CASE("failure recovery does not change the result") {
    KMeansSpec spec = small_spec(0);
    spec.iterations = 40;
    spec.failure_fraction = 0.10;  // aggressive so failures actually happen

    // Find seeds whose runs include at least one failure; deterministic.
    int with_failures = 0;
    for (std::uint64_t seed = 1; seed <= 30 && with_failures < 3; ++seed) {
        spec.seed = seed;
        const KMeansReport faulty = run_kmeans(spec);
        if (faulty.data_loss || faulty.failures.empty()) {
            continue;
        }
        ++with_failures;

        KMeansSpec clean_spec = spec;
        clean_spec.failure_fraction = 0.0;
        const KMeansReport clean = run_kmeans(clean_spec);

        REQUIRE(faulty.centers.size() == clean.centers.size());
        double max_delta = 0.0;
        for (std::size_t i = 0; i < faulty.centers.size(); ++i) {
            max_delta = std::max(max_delta, std::abs(faulty.centers[i] - clean.centers[i]));
        }
        CHECK(max_delta <= 1e-9);
        CHECK(faulty.assignment_counts == clean.assignment_counts);

        // Recovery traffic is accounted separately from the algorithm.
        bool saw_recovery_phase = false;
        for (const PhaseRecord& phase : faulty.phases) {
            saw_recovery_phase =
                saw_recovery_phase || phase.phase.starts_with("restore-recover");
        }
        CHECK(saw_recovery_phase);
    }
    REQUIRE(with_failures == 3);
}

TEST_CASE("expected failed-rank count follows the per-step process") {
    // Survivor target 0.99 over the run; each rank fails with probability
    // 0.01 total, so p=48 gives 0.48 expected failures.
    const double q = FailureSpec::step_probability_for_target(0.99, 100);
    const int rounds = 400;
    double failed = 0.0;
    for (int round = 0; round < rounds; ++round) {
        Cluster cluster(48, 1000 + round);
        for (int step = 0; step < 100; ++step) {
            failed += static_cast<double>(cluster.kill_step(q).size());
        }
    }
    const double mean = failed / rounds;
    const double sigma = std::sqrt(48 * 0.01 * 0.99 / rounds);
    CHECK(std::abs(mean - 0.48) <= 4 * sigma);
}

TEST_CASE("unrecoverable failures abort the run with a loss report") {
    KMeansSpec spec = small_spec(0);
    spec.replication = 1;  // any failure loses data
    spec.failure_fraction = 0.5;
    spec.iterations = 30;
    bool saw_loss = false;
    for (std::uint64_t seed = 1; seed <= 10 && !saw_loss; ++seed) {
        spec.seed = seed;
        const KMeansReport report = run_kmeans(spec);
        if (report.data_loss) {
            saw_loss = true;
            CHECK_FALSE(report.lost.empty());
        }
    }
    REQUIRE(saw_loss);
}

TEST_CASE("tolerance stops converged runs early") {
    KMeansSpec spec = small_spec(5);
    spec.iterations = 500;
    spec.tolerance = 1e-12;
    const KMeansReport report = run_kmeans(spec);
    CHECK(report.iterations_run < 500);
}
