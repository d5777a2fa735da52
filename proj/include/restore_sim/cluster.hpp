#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "restore_sim/hashing.hpp"
#include "restore_sim/types.hpp"

namespace restore_sim {

/// One point-to-point message. `nbytes` is the metered size; the payload may
/// be empty for traffic that only matters to the counters (e.g. request
/// envelopes), otherwise payload.size() == nbytes.
struct Message {
    rank_t src = 0;
    rank_t dst = 0;
    std::uint64_t nbytes = 0;
    std::vector<std::byte> payload;
};

/// Per-rank traffic counters; monotone over the cluster lifetime.
struct CommMetrics {
    std::vector<std::uint64_t> messages_sent;
    std::vector<std::uint64_t> messages_received;
    std::vector<std::uint64_t> bytes_sent;
    std::vector<std::uint64_t> bytes_received;

    explicit CommMetrics(rank_t ranks = 0)
        : messages_sent(ranks), messages_received(ranks), bytes_sent(ranks),
          bytes_received(ranks) {}

    [[nodiscard]] std::uint64_t total_bytes_sent() const;
    [[nodiscard]] std::uint64_t total_bytes_received() const;
};

/// Traffic of one named phase reduced over the ranks alive at its end.
/// Bottlenecks are max over alive ranks of (sent + received).
struct PhaseRecord {
    std::string phase;
    rank_t ranks = 0;
    rank_t alive = 0;
    std::uint64_t bottleneck_messages = 0;
    std::uint64_t bottleneck_bytes = 0;
    std::uint64_t total_messages = 0;
    std::uint64_t total_bytes = 0;
    std::vector<std::uint64_t> messages_received_per_rank;
};

/// Fail-stop injection recipe.
struct FailureSpec {
    enum class Kind { FixedSet, UniformCount, PerStepProbability };

    Kind kind = Kind::FixedSet;
    std::vector<rank_t> fixed_ranks;
    rank_t count = 0;
    double step_probability = 0.0;
    std::uint32_t steps = 0;
    std::uint64_t seed = 0;

    static FailureSpec fixed_set(std::vector<rank_t> ranks);
    static FailureSpec uniform_count(rank_t count, std::uint64_t seed);
    static FailureSpec per_step(double probability, std::uint32_t steps, std::uint64_t seed);

    /// Per-step kill probability such that the expected surviving fraction
    /// after `steps` independent rounds equals `surviving_target`:
    /// q = 1 - surviving_target^(1/steps).
    static double step_probability_for_target(double surviving_target, std::uint32_t steps);
};

/// Deterministic stand-in for a message-passing machine: logical ranks,
/// reliable atomic delivery, fail-stop injection, and bottleneck traffic
/// counters. Single-threaded by contract; identical seeds replay
/// identically.
class Cluster {
public:
    Cluster(rank_t ranks, std::uint64_t seed);

    [[nodiscard]] rank_t size() const noexcept { return ranks_; }
    [[nodiscard]] rank_t alive_count() const noexcept { return alive_count_; }
    [[nodiscard]] bool is_alive(rank_t rank) const;
    [[nodiscard]] const std::vector<bool>& alive() const noexcept { return alive_; }
    [[nodiscard]] std::vector<rank_t> alive_ranks() const;

    /// Flags the ranks dead. StateError if any is already dead.
    void kill(std::span<const rank_t> ranks);

    /// Applies the recipe, returns the newly failed ranks (ascending).
    std::vector<rank_t> inject_failures(const FailureSpec& spec);

    /// One per-step round drawn from the cluster's own generator: every
    /// alive rank dies independently with the given probability.
    std::vector<rank_t> kill_step(double probability);

    /// Delivers all messages atomically and updates the counters on both
    /// endpoints. StateError if an endpoint is dead. Returns the messages
    /// in (dst, src) order.
    std::vector<Message> exchange(std::vector<Message> messages);

    void phase_begin(std::string name);
    PhaseRecord phase_end();
    [[nodiscard]] const std::vector<PhaseRecord>& phase_records() const noexcept {
        return phase_records_;
    }
    [[nodiscard]] const CommMetrics& metrics() const noexcept { return metrics_; }

private:
    rank_t ranks_;
    std::vector<bool> alive_;
    rank_t alive_count_;
    SplitMix64 rng_;
    CommMetrics metrics_;
    bool phase_open_ = false;
    std::string phase_name_;
    CommMetrics phase_baseline_;
    std::vector<PhaseRecord> phase_records_;
};

}  // namespace restore_sim
