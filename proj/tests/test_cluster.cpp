#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "restore_sim/cluster.hpp"
#include "restore_sim/errors.hpp"

using namespace restore_sim;

TEST_CASE("spawn starts with all ranks alive and zeroed metrics") {
    const Cluster cluster(4, 1);
    CHECK(cluster.size() == 4);
    CHECK(cluster.alive_count() == 4);
    for (rank_t rank = 0; rank < 4; ++rank) {
        CHECK(cluster.is_alive(rank));
        CHECK(cluster.metrics().messages_sent[rank] == 0);
        CHECK(cluster.metrics().bytes_received[rank] == 0);
    }
    CHECK_THROWS_AS(Cluster(0, 1), DomainError);
}

TEST_CASE("exchange updates both endpoints and conserves bytes") {
    Cluster cluster(4, 1);

    SUBCASE("empty exchange changes nothing") {
        cluster.exchange({});
        CHECK(cluster.metrics().total_bytes_sent() == 0);
        CHECK(cluster.metrics().total_bytes_received() == 0);
    }

    SUBCASE("a single 64-byte message") {
        cluster.exchange({{1, 2, 64, {}}});
        CHECK(cluster.metrics().messages_sent[1] == 1);
        CHECK(cluster.metrics().messages_received[2] == 1);
        CHECK(cluster.metrics().bytes_sent[1] == 64);
        CHECK(cluster.metrics().bytes_received[2] == 64);
    }

    SUBCASE("conservation over random message sets") {
        SplitMix64 rng(9);
        for (int round = 0; round < 20; ++round) {
            std::vector<Message> messages;
            const std::uint64_t count = rng.below(30);
            for (std::uint64_t i = 0; i < count; ++i) {
                messages.push_back({static_cast<rank_t>(rng.below(4)),
                                    static_cast<rank_t>(rng.below(4)), rng.below(1000), {}});
            }
            cluster.exchange(std::move(messages));
            CHECK(cluster.metrics().total_bytes_sent() ==
                  cluster.metrics().total_bytes_received());
        }
    }
}

TEST_CASE("delivery order is deterministic (dst, then src)") {
    Cluster cluster(4, 1);
    const std::vector<Message> delivered =
        cluster.exchange({{3, 2, 1, {}}, {0, 2, 1, {}}, {1, 0, 1, {}}});
    REQUIRE(delivered.size() == 3);
    CHECK(delivered[0].dst == 0);
    CHECK(delivered[1].src == 0);
    CHECK(delivered[1].dst == 2);
    CHECK(delivered[2].src == 3);
}

TEST_CASE("messaging a dead endpoint is a state error") {
    Cluster cluster(4, 1);
    const rank_t dead[] = {2};
    cluster.kill(dead);
    CHECK_THROWS_AS(cluster.exchange({{0, 2, 8, {}}}), StateError);
    CHECK_THROWS_AS(cluster.exchange({{2, 0, 8, {}}}), StateError);
    CHECK_THROWS_AS(cluster.kill(dead), StateError);
}

TEST_CASE("uniform-count failure injection") {
    SUBCASE("zero kills nothing") {
        Cluster cluster(8, 1);
        CHECK(cluster.inject_failures(FailureSpec::uniform_count(0, 5)).empty());
        CHECK(cluster.alive_count() == 8);
    }
    SUBCASE("kills exactly k distinct ranks") {
        Cluster cluster(8, 1);
        const std::vector<rank_t> killed = cluster.inject_failures(FailureSpec::uniform_count(3, 5));
        CHECK(killed.size() == 3);
        CHECK(std::set<rank_t>(killed.begin(), killed.end()).size() == 3);
        CHECK(cluster.alive_count() == 5);
    }
    SUBCASE("overkill is a domain error") {
        Cluster cluster(4, 1);
        CHECK_THROWS_AS(cluster.inject_failures(FailureSpec::uniform_count(5, 5)), DomainError);
    }
    SUBCASE("same seed kills the same set") {
        Cluster a(16, 1);
        Cluster b(16, 2);  // cluster seed does not matter for seeded specs
        CHECK(a.inject_failures(FailureSpec::uniform_count(4, 77)) ==
              b.inject_failures(FailureSpec::uniform_count(4, 77)));
    }
    SUBCASE("each rank fails with frequency k/p") {
        const int rounds = 3000;
        const rank_t p = 12;
        const rank_t k = 3;
        std::vector<int> failures(p, 0);
        for (int round = 0; round < rounds; ++round) {
            Cluster cluster(p, 1);
            for (const rank_t rank :
                 cluster.inject_failures(FailureSpec::uniform_count(k, 1000 + round))) {
                ++failures[rank];
            }
        }
        const double expected = static_cast<double>(k) / p;
        const double sigma = std::sqrt(expected * (1 - expected) / rounds);
        for (const int count : failures) {
            const double frequency = static_cast<double>(count) / rounds;
            CHECK(std::abs(frequency - expected) <= 3 * sigma + 1e-12);
        }
    }
}

TEST_CASE("per-step probability matches the closed form") {
    // 1 - 0.99^(1/500), evaluated independently.
    CHECK(FailureSpec::step_probability_for_target(0.99, 500) ==
          doctest::Approx(2.010046968980994e-05).epsilon(1e-9));
    CHECK_THROWS_AS(FailureSpec::step_probability_for_target(0.0, 10), ConfigError);
    CHECK_THROWS_AS(FailureSpec::step_probability_for_target(0.5, 0), ConfigError);
}

TEST_CASE("per-step failure process thins the cluster at the configured rate") {
    // With q chosen for 50% survivors over 10 steps, 4000 ranks leave about
    // 2000 alive; allow 4 sigma of binomial noise.
    const double q = FailureSpec::step_probability_for_target(0.5, 10);
    Cluster cluster(4000, 3);
    cluster.inject_failures(FailureSpec::per_step(q, 10, 99));
    const double sigma = std::sqrt(4000 * 0.5 * 0.5);
    CHECK(std::abs(static_cast<double>(cluster.alive_count()) - 2000.0) <= 4 * sigma);
}

TEST_CASE("kill_step draws from the cluster generator deterministically") {
    Cluster a(64, 5);
    Cluster b(64, 5);
    for (int step = 0; step < 50; ++step) {
        CHECK(a.kill_step(0.02) == b.kill_step(0.02));
    }
    CHECK(a.alive_count() == b.alive_count());
}

TEST_CASE("phase records reduce the counters over alive ranks") {
    Cluster cluster(4, 1);
    cluster.phase_begin("warm-up");
    cluster.exchange({{0, 1, 100, {}}, {1, 0, 50, {}}, {2, 3, 10, {}}});
    const PhaseRecord record = cluster.phase_end();
    CHECK(record.phase == "warm-up");
    CHECK(record.alive == 4);
    CHECK(record.total_bytes == 160);
    CHECK(record.total_messages == 3);
    // Recompute the bottleneck independently: rank 0 and rank 1 each sent
    // and received one message, 150 bytes each.
    CHECK(record.bottleneck_messages == 2);
    CHECK(record.bottleneck_bytes == 150);

    // A second phase only sees new traffic.
    cluster.phase_begin("quiet");
    const PhaseRecord quiet = cluster.phase_end();
    CHECK(quiet.total_bytes == 0);
    CHECK(quiet.bottleneck_messages == 0);
    CHECK(cluster.phase_records().size() == 2);

    CHECK_THROWS_AS(cluster.phase_end(), StateError);
    cluster.phase_begin("open");
    CHECK_THROWS_AS(cluster.phase_begin("again"), StateError);
}

TEST_CASE("bottleneck ignores ranks that died during the phase") {
    Cluster cluster(3, 1);
    cluster.phase_begin("mixed");
    cluster.exchange({{0, 1, 1000, {}}, {2, 1, 8, {}}});
    const rank_t dead[] = {0};
    cluster.kill(dead);
    const PhaseRecord record = cluster.phase_end();
    // Rank 0 moved the most bytes but is dead; rank 1 received 1008.
    CHECK(record.alive == 2);
    CHECK(record.bottleneck_bytes == 1008);
}
