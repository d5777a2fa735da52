#include "restore_sim/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "restore_sim/errors.hpp"

namespace restore_sim {

std::uint64_t CommMetrics::total_bytes_sent() const {
    return std::accumulate(bytes_sent.begin(), bytes_sent.end(), std::uint64_t{0});
}

std::uint64_t CommMetrics::total_bytes_received() const {
    return std::accumulate(bytes_received.begin(), bytes_received.end(), std::uint64_t{0});
}

FailureSpec FailureSpec::fixed_set(std::vector<rank_t> ranks) {
    FailureSpec spec;
    spec.kind = Kind::FixedSet;
    spec.fixed_ranks = std::move(ranks);
    return spec;
}

FailureSpec FailureSpec::uniform_count(rank_t count, std::uint64_t seed) {
    FailureSpec spec;
    spec.kind = Kind::UniformCount;
    spec.count = count;
    spec.seed = seed;
    return spec;
}

FailureSpec FailureSpec::per_step(double probability, std::uint32_t steps, std::uint64_t seed) {
    if (probability < 0.0 || probability > 1.0) {
        throw ConfigError("per-step probability must be in [0, 1]");
    }
    FailureSpec spec;
    spec.kind = Kind::PerStepProbability;
    spec.step_probability = probability;
    spec.steps = steps;
    spec.seed = seed;
    return spec;
}

double FailureSpec::step_probability_for_target(double surviving_target, std::uint32_t steps) {
    if (surviving_target <= 0.0 || surviving_target > 1.0) {
        throw ConfigError("surviving fraction target must be in (0, 1]");
    }
    if (steps == 0) {
        throw ConfigError("step count must be positive");
    }
    return 1.0 - std::pow(surviving_target, 1.0 / static_cast<double>(steps));
}

Cluster::Cluster(rank_t ranks, std::uint64_t seed)
    : ranks_(ranks), alive_(ranks, true), alive_count_(ranks), rng_(seed), metrics_(ranks),
      phase_baseline_(0) {
    if (ranks < 1) {
        throw DomainError("cluster needs at least one rank");
    }
}

bool Cluster::is_alive(rank_t rank) const {
    if (rank >= ranks_) {
        throw DomainError("rank outside [0, p)");
    }
    return alive_[rank];
}

std::vector<rank_t> Cluster::alive_ranks() const {
    std::vector<rank_t> out;
    out.reserve(alive_count_);
    for (rank_t rank = 0; rank < ranks_; ++rank) {
        if (alive_[rank]) {
            out.push_back(rank);
        }
    }
    return out;
}

void Cluster::kill(std::span<const rank_t> ranks) {
    for (const rank_t rank : ranks) {
        if (rank >= ranks_) {
            throw DomainError("rank outside [0, p)");
        }
        if (!alive_[rank]) {
            throw StateError("rank " + std::to_string(rank) + " is already dead");
        }
    }
    for (const rank_t rank : ranks) {
        alive_[rank] = false;
        --alive_count_;
    }
}

std::vector<rank_t> Cluster::inject_failures(const FailureSpec& spec) {
    std::vector<rank_t> killed;
    switch (spec.kind) {
    case FailureSpec::Kind::FixedSet:
        killed = spec.fixed_ranks;
        kill(killed);
        break;
    case FailureSpec::Kind::UniformCount: {
        if (spec.count > alive_count_) {
            throw DomainError("cannot kill more ranks than are alive");
        }
        // Partial Fisher-Yates over the alive ranks.
        std::vector<rank_t> pool = alive_ranks();
        SplitMix64 rng(spec.seed);
        for (rank_t i = 0; i < spec.count; ++i) {
            const std::uint64_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            killed.push_back(pool[i]);
        }
        kill(killed);
        break;
    }
    case FailureSpec::Kind::PerStepProbability: {
        SplitMix64 rng(spec.seed);
        for (std::uint32_t step = 0; step < spec.steps; ++step) {
            for (rank_t rank = 0; rank < ranks_; ++rank) {
                if (alive_[rank] && rng.next_double() < spec.step_probability) {
                    alive_[rank] = false;
                    --alive_count_;
                    killed.push_back(rank);
                }
            }
        }
        break;
    }
    }
    std::sort(killed.begin(), killed.end());
    return killed;
}

std::vector<rank_t> Cluster::kill_step(double probability) {
    if (probability < 0.0 || probability > 1.0) {
        throw ConfigError("per-step probability must be in [0, 1]");
    }
    std::vector<rank_t> killed;
    for (rank_t rank = 0; rank < ranks_; ++rank) {
        if (alive_[rank] && rng_.next_double() < probability) {
            alive_[rank] = false;
            --alive_count_;
            killed.push_back(rank);
        }
    }
    return killed;
}

std::vector<Message> Cluster::exchange(std::vector<Message> messages) {
    for (const Message& message : messages) {
        if (message.src >= ranks_ || message.dst >= ranks_) {
            throw DomainError("message endpoint outside [0, p)");
        }
        if (!alive_[message.src] || !alive_[message.dst]) {
            throw StateError("message endpoint is dead");
        }
        if (!message.payload.empty() && message.payload.size() != message.nbytes) {
            throw DataError("message payload size disagrees with its metered size");
        }
    }
    for (const Message& message : messages) {
        metrics_.messages_sent[message.src] += 1;
        metrics_.messages_received[message.dst] += 1;
        metrics_.bytes_sent[message.src] += message.nbytes;
        metrics_.bytes_received[message.dst] += message.nbytes;
    }
    std::stable_sort(messages.begin(), messages.end(), [](const Message& a, const Message& b) {
        return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
    });
    return messages;
}

void Cluster::phase_begin(std::string name) {
    if (phase_open_) {
        throw StateError("a metrics phase is already open");
    }
    phase_open_ = true;
    phase_name_ = std::move(name);
    phase_baseline_ = metrics_;
}

PhaseRecord Cluster::phase_end() {
    if (!phase_open_) {
        throw StateError("no metrics phase is open");
    }
    phase_open_ = false;

    PhaseRecord record;
    record.phase = std::move(phase_name_);
    record.ranks = ranks_;
    record.alive = alive_count_;
    record.messages_received_per_rank.resize(ranks_);
    for (rank_t rank = 0; rank < ranks_; ++rank) {
        const std::uint64_t messages =
            (metrics_.messages_sent[rank] - phase_baseline_.messages_sent[rank]) +
            (metrics_.messages_received[rank] - phase_baseline_.messages_received[rank]);
        const std::uint64_t bytes =
            (metrics_.bytes_sent[rank] - phase_baseline_.bytes_sent[rank]) +
            (metrics_.bytes_received[rank] - phase_baseline_.bytes_received[rank]);
        record.messages_received_per_rank[rank] =
            metrics_.messages_received[rank] - phase_baseline_.messages_received[rank];
        record.total_messages +=
            metrics_.messages_sent[rank] - phase_baseline_.messages_sent[rank];
        record.total_bytes += metrics_.bytes_sent[rank] - phase_baseline_.bytes_sent[rank];
        if (alive_[rank]) {
            record.bottleneck_messages = std::max(record.bottleneck_messages, messages);
            record.bottleneck_bytes = std::max(record.bottleneck_bytes, bytes);
        }
    }
    phase_records_.push_back(record);
    return record;
}

}  // namespace restore_sim
