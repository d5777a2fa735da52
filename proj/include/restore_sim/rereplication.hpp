#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "restore_sim/distribution.hpp"
#include "restore_sim/types.hpp"

namespace restore_sim {

/// Distinct prime divisors of a value, found once by trial division.
struct Factorization {
    std::uint64_t value = 1;
    std::vector<std::uint64_t> prime_factors;  // distinct, ascending

    [[nodiscard]] std::size_t distinct_count() const noexcept { return prime_factors.size(); }
    /// At most distinct_count() divisions.
    [[nodiscard]] bool coprime(std::uint64_t candidate) const noexcept;
};

Factorization factorize(std::uint64_t value);

/// Hash machinery for the probing sequences: a seedless base hash, a seeded
/// step-hash family, and the deterministic seed sequence scanned until a
/// step coprime to p is found.
struct ProbingConfig {
    rank_t ranks = 1;
    Factorization factors;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seed_sequence;

    static ProbingConfig make(rank_t ranks, std::uint64_t seed, std::size_t seed_count = 64);
};

struct CoprimeStep {
    std::uint64_t step = 0;       // in [1, p), gcd(step, p) == 1; 0 iff p == 1
    std::uint32_t seeds_tried = 0;
};

/// Scans the seed sequence, mapping each seeded hash of `unit` into [1, p),
/// until the value shares no prime factor with p. ConfigError if the
/// sequence is exhausted (vanishingly unlikely at the default length).
CoprimeStep coprime_step(std::uint64_t unit, const ProbingConfig& probing);

/// DoubleHash: rho(k) = (base + k * step) mod p with step coprime to p, so
/// the first p probes enumerate every rank once. SeededPermutation: a
/// Feistel permutation of [0, p) seeded per unit.
enum class ProbingScheme { DoubleHash, SeededPermutation };

/// Unbounded candidate-rank sequence for one unit.
class ProbeSequence {
public:
    [[nodiscard]] rank_t at(std::uint64_t k) const;

private:
    friend ProbeSequence make_probe_sequence(std::uint64_t unit, const ProbingConfig& probing,
                                             ProbingScheme scheme);
    ProbeSequence() = default;

    ProbingScheme scheme_ = ProbingScheme::DoubleHash;
    rank_t ranks_ = 1;
    std::uint64_t base_ = 0;
    std::uint64_t step_ = 0;
    std::optional<RangePermutation> perm_;
};

ProbeSequence make_probe_sequence(std::uint64_t unit, const ProbingConfig& probing,
                                  ProbingScheme scheme);

/// First `count` elements, for tests and enumeration.
std::vector<rank_t> probing_sequence(std::uint64_t unit, const ProbingConfig& probing,
                                     ProbingScheme scheme, std::size_t count);

/// Replica re-placement works on blocks or on whole permutation ranges.
enum class ReplicaGranularity { Block, PermutationRange };

/// Hybrid placement: the first r replicas follow the deterministic
/// distribution; replicas displaced by failures continue along the unit's
/// probing sequence.
struct HybridPlacementConfig {
    DistributionConfig base;
    ProbingConfig probing;
    ReplicaGranularity granularity = ReplicaGranularity::Block;

    /// granularity defaults to PermutationRange when base.permute is set.
    static HybridPlacementConfig make(DistributionConfig base, std::uint64_t probing_seed,
                                      std::size_t seed_count = 64);

    [[nodiscard]] std::uint64_t num_units() const;
    [[nodiscard]] const RangePermutation* range_permutation() const noexcept {
        return perm_ ? &*perm_ : nullptr;
    }

private:
    std::optional<RangePermutation> perm_;
};

struct ReplicaLocations {
    std::vector<rank_t> ranks;              // r distinct alive holders, walk order
    std::uint32_t positions_examined = 0;   // bounded by 2 r + (dead count)
};

/// First r distinct alive ranks of the unit's hybrid sequence. With no
/// failures this equals the base placement exactly. StateError when fewer
/// than r ranks are alive.
ReplicaLocations replica_locations(std::uint64_t unit, const std::vector<bool>& alive,
                                   const HybridPlacementConfig& cfg, ProbingScheme scheme);

struct ReplicaMove {
    std::uint64_t unit = 0;
    rank_t source = 0;
    rank_t target = 0;
};

/// Copy orders that restore every affected unit to r alive replicas after
/// `newly_dead` fail. Surviving replicas never move; sources are seeded
/// picks among the surviving holders. Throws IrrecoverableDataLoss when a
/// unit has no surviving holder.
std::vector<ReplicaMove> rereplication_plan(std::span<const std::uint64_t> units,
                                            const std::vector<bool>& alive_before,
                                            std::span<const rank_t> newly_dead,
                                            const HybridPlacementConfig& cfg,
                                            ProbingScheme scheme, std::uint64_t seed);

}  // namespace restore_sim
