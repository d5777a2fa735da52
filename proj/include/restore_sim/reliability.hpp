#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "restore_sim/types.hpp"

namespace restore_sim {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Ranks are split into g = p / r groups holding identical data; data is
/// irrecoverably lost (IDL) exactly when all r ranks of some group have
/// failed. Results are exact rationals up to kExactMaxRanks and log-space
/// floats with compensated summation above (the alternating sum cancels,
/// hence the precision_warning flag).
inline constexpr rank_t kExactMaxRanks = 2048;

enum class IdlMethod { Exact, LogSpace };

struct IdlValue {
    double value = 0.0;
    BigRational exact;  // meaningful when method == Exact
    IdlMethod method = IdlMethod::Exact;
    bool precision_warning = false;
};

/// Shared factorial table and parameter checks for one (p, r) pair.
/// Requires r | p; throws ConfigError otherwise.
class IdlAnalysis {
public:
    IdlAnalysis(rank_t ranks, rank_t replication);

    [[nodiscard]] rank_t ranks() const noexcept { return ranks_; }
    [[nodiscard]] rank_t replication() const noexcept { return replication_; }
    [[nodiscard]] rank_t groups() const noexcept { return groups_; }
    [[nodiscard]] bool exact() const noexcept { return exact_; }

    /// P(IDL at failure f or before).
    [[nodiscard]] IdlValue prob_le(rank_t failures) const;
    /// P(IDL at exactly failure f).
    [[nodiscard]] IdlValue prob_eq(rank_t failures) const;
    /// E[failures until IDL] = p - sum_{f<p} P_le(f).
    [[nodiscard]] IdlValue expected_failures() const;
    /// Small-f approximation g * (f/p)^r.
    [[nodiscard]] double approx(rank_t failures) const;
    /// Failed fraction at which the approximation reaches 1: (r/p)^(1/r).
    [[nodiscard]] double break_even_fraction() const;

private:
    [[nodiscard]] BigInt binomial(rank_t n, rank_t k) const;
    [[nodiscard]] BigRational prob_le_exact(rank_t failures) const;
    [[nodiscard]] IdlValue prob_le_logspace(rank_t failures) const;
    [[nodiscard]] double log_binomial(rank_t n, rank_t k) const;
    /// log of the number of f-subsets that leave every group with a
    /// survivor, for all f at once. All-positive generating-function DP, so
    /// it stays accurate where the alternating sum cancels; lazily built.
    [[nodiscard]] const std::vector<double>& log_survivor_counts() const;

    rank_t ranks_;
    rank_t replication_;
    rank_t groups_;
    bool exact_;
    std::vector<BigInt> factorials_;     // 0..p, exact mode only
    std::vector<double> log_factorials_; // 0..p, log-space mode only
    mutable std::vector<double> log_survivor_counts_;  // lazy, log-space mode
};

IdlValue idl_prob_le(rank_t failures, rank_t ranks, rank_t replication);
IdlValue idl_prob_eq(rank_t failures, rank_t ranks, rank_t replication);
IdlValue expected_failures_until_idl(rank_t ranks, rank_t replication);
double idl_prob_approx(rank_t failures, rank_t ranks, rank_t replication);
double idl_break_even_fraction(rank_t ranks, rank_t replication);

/// Monte-Carlo failures-until-IDL over the actual placement (groups come
/// from enumerating the distribution, not from the closed form).
struct LossSimulation {
    std::vector<std::uint32_t> samples;  // one failure count per trial
    double mean = 0.0;
    double mean_fraction = 0.0;
    std::uint32_t p10 = 0;
    std::uint32_t median = 0;
    std::uint32_t p90 = 0;

    /// Empirical P(failures <= f).
    [[nodiscard]] std::vector<double> cdf(rank_t ranks) const;
};

LossSimulation simulate_failures_until_idl(rank_t ranks, rank_t replication,
                                           std::uint64_t trials, std::uint64_t seed);

}  // namespace restore_sim
