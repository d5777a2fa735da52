#include "restore_sim/rereplication.hpp"

#include <algorithm>
#include <cassert>

#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"

namespace restore_sim {

bool Factorization::coprime(std::uint64_t candidate) const noexcept {
    for (const std::uint64_t prime : prime_factors) {
        if (candidate % prime == 0) {
            return false;
        }
    }
    return true;
}

Factorization factorize(std::uint64_t value) {
    if (value < 1) {
        throw DomainError("factorization needs a positive value");
    }
    Factorization result;
    result.value = value;
    std::uint64_t remaining = value;
    for (std::uint64_t candidate = 2; candidate * candidate <= remaining; ++candidate) {
        if (remaining % candidate == 0) {
            result.prime_factors.push_back(candidate);
            while (remaining % candidate == 0) {
                remaining /= candidate;
            }
        }
    }
    if (remaining > 1) {
        result.prime_factors.push_back(remaining);
    }
    return result;
}

ProbingConfig ProbingConfig::make(rank_t ranks, std::uint64_t seed, std::size_t seed_count) {
    if (ranks < 1) {
        throw ConfigError("probing needs at least one rank");
    }
    if (seed_count < 1) {
        throw ConfigError("seed sequence must be non-empty");
    }
    ProbingConfig config;
    config.ranks = ranks;
    config.factors = factorize(ranks);
    config.seed = seed;
    config.seed_sequence.reserve(seed_count);
    for (std::size_t i = 0; i < seed_count; ++i) {
        config.seed_sequence.push_back(derive_seed(seed, i));
    }
    return config;
}

CoprimeStep coprime_step(std::uint64_t unit, const ProbingConfig& probing) {
    if (probing.ranks == 1) {
        return {0, 1};  // single-rank short circuit
    }
    std::uint32_t tried = 0;
    for (const std::uint64_t seed : probing.seed_sequence) {
        ++tried;
        const std::uint64_t candidate =
            1 + hash_seeded(seed, unit) % (probing.ranks - std::uint64_t{1});
        if (probing.factors.coprime(candidate)) {
            return {candidate, tried};
        }
    }
    throw ConfigError("seed sequence exhausted while searching for a coprime step");
}

rank_t ProbeSequence::at(std::uint64_t k) const {
    if (scheme_ == ProbingScheme::DoubleHash) {
        return static_cast<rank_t>((base_ + (k % ranks_) * step_) % ranks_);
    }
    return static_cast<rank_t>(perm_->forward(k % ranks_));
}

ProbeSequence make_probe_sequence(std::uint64_t unit, const ProbingConfig& probing,
                                  ProbingScheme scheme) {
    ProbeSequence sequence;
    sequence.scheme_ = scheme;
    sequence.ranks_ = probing.ranks;
    if (scheme == ProbingScheme::DoubleHash) {
        sequence.base_ = hash_block(unit) % probing.ranks;
        sequence.step_ = coprime_step(unit, probing).step;
    } else {
        sequence.perm_.emplace(probing.ranks, mix64(hash_block(unit) ^ mix64(probing.seed)));
    }
    return sequence;
}

std::vector<rank_t> probing_sequence(std::uint64_t unit, const ProbingConfig& probing,
                                     ProbingScheme scheme, std::size_t count) {
    const ProbeSequence sequence = make_probe_sequence(unit, probing, scheme);
    std::vector<rank_t> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(sequence.at(k));
    }
    return out;
}

HybridPlacementConfig HybridPlacementConfig::make(DistributionConfig base,
                                                  std::uint64_t probing_seed,
                                                  std::size_t seed_count) {
    base.validate();
    HybridPlacementConfig config;
    config.base = base;
    config.probing = ProbingConfig::make(base.ranks, probing_seed, seed_count);
    config.granularity = base.permute ? ReplicaGranularity::PermutationRange
                                      : ReplicaGranularity::Block;
    config.perm_ = make_permutation(base);
    return config;
}

std::uint64_t HybridPlacementConfig::num_units() const {
    return granularity == ReplicaGranularity::Block ? base.blocks : base.num_ranges();
}

ReplicaLocations replica_locations(std::uint64_t unit, const std::vector<bool>& alive,
                                   const HybridPlacementConfig& cfg, ProbingScheme scheme) {
    if (unit >= cfg.num_units()) {
        throw DomainError("unit outside the configured id space");
    }
    if (alive.size() != cfg.base.ranks) {
        throw DomainError("alive vector size disagrees with the rank count");
    }
    const rank_t replication = cfg.base.replication;
    const auto alive_count = static_cast<rank_t>(std::count(alive.begin(), alive.end(), true));
    if (alive_count < replication) {
        throw StateError("fewer alive ranks than the replication level");
    }

    // Deterministic prefix: the base placement of the unit's representative
    // block.
    const block_id_t representative = cfg.granularity == ReplicaGranularity::Block
                                          ? unit
                                          : unit * cfg.base.blocks_per_range;
    const std::vector<rank_t> prefix =
        target_ranks(representative, cfg.base, cfg.range_permutation());

    ReplicaLocations result;
    result.ranks.reserve(replication);
    std::vector<bool> chosen(cfg.base.ranks, false);
    const auto visit = [&](rank_t candidate) {
        ++result.positions_examined;
        if (chosen[candidate] || !alive[candidate]) {
            return;
        }
        chosen[candidate] = true;
        result.ranks.push_back(candidate);
    };

    for (const rank_t candidate : prefix) {
        if (result.ranks.size() == replication) {
            break;
        }
        visit(candidate);
    }
    if (result.ranks.size() < replication) {
        const ProbeSequence sequence = make_probe_sequence(unit, cfg.probing, scheme);
        // One full period starting after the deterministic prefix covers
        // every rank, so the walk always terminates here.
        for (std::uint64_t k = replication; k < replication + std::uint64_t{cfg.base.ranks};
             ++k) {
            visit(sequence.at(k));
            if (result.ranks.size() == replication) {
                break;
            }
        }
    }
    assert(result.ranks.size() == replication);
    return result;
}

std::vector<ReplicaMove> rereplication_plan(std::span<const std::uint64_t> units,
                                            const std::vector<bool>& alive_before,
                                            std::span<const rank_t> newly_dead,
                                            const HybridPlacementConfig& cfg,
                                            ProbingScheme scheme, std::uint64_t seed) {
    if (alive_before.size() != cfg.base.ranks) {
        throw DomainError("alive vector size disagrees with the rank count");
    }
    std::vector<bool> dead_now(cfg.base.ranks, false);
    std::vector<bool> alive_after = alive_before;
    for (const rank_t rank : newly_dead) {
        if (rank >= cfg.base.ranks) {
            throw DomainError("rank outside [0, p)");
        }
        if (!alive_before[rank]) {
            throw StateError("rank " + std::to_string(rank) + " is already dead");
        }
        dead_now[rank] = true;
        alive_after[rank] = false;
    }
    if (newly_dead.empty()) {
        return {};
    }

    std::vector<ReplicaMove> moves;
    std::vector<BlockRange> lost;
    for (const std::uint64_t unit : units) {
        const ReplicaLocations old_locations = replica_locations(unit, alive_before, cfg, scheme);
        std::vector<rank_t> survivors;
        bool affected = false;
        for (const rank_t holder : old_locations.ranks) {
            if (dead_now[holder]) {
                affected = true;
            } else {
                survivors.push_back(holder);
            }
        }
        if (!affected) {
            continue;
        }
        if (survivors.empty()) {
            lost.push_back({unit, unit + 1});
            continue;
        }
        const ReplicaLocations new_locations = replica_locations(unit, alive_after, cfg, scheme);
        for (const rank_t target : new_locations.ranks) {
            if (std::find(old_locations.ranks.begin(), old_locations.ranks.end(), target) !=
                old_locations.ranks.end()) {
                continue;
            }
            const std::uint64_t pick = mix64(seed ^ hash_seeded(unit, target));
            moves.push_back({unit, survivors[pick % survivors.size()], target});
        }
    }
    if (!lost.empty()) {
        throw IrrecoverableDataLoss(normalize_ranges(std::move(lost)));
    }
    return moves;
}

}  // namespace restore_sim
