#include "restore_sim/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "restore_sim/distribution.hpp"
#include "restore_sim/errors.hpp"
#include "restore_sim/hashing.hpp"

namespace restore_sim {

namespace {

void check_failures(rank_t failures, rank_t ranks) {
    if (failures > ranks) {
        throw DomainError("failure count outside [0, p]");
    }
}

// The survivor-count table costs O(g^2 r) log-adds; beyond this rank count
// the alternating sum's clamped value plus its warning flag stand.
constexpr rank_t kSurvivorDpMaxRanks = 1u << 17;

}  // namespace

IdlAnalysis::IdlAnalysis(rank_t ranks, rank_t replication)
    : ranks_(ranks), replication_(replication) {
    if (ranks < 1 || replication < 1 || replication > ranks) {
        throw ConfigError("need 1 <= r <= p");
    }
    if (ranks % replication != 0) {
        throw ConfigError("reliability analysis requires the replication level to divide "
                          "the rank count");
    }
    groups_ = ranks / replication;
    exact_ = ranks <= kExactMaxRanks;
    if (exact_) {
        factorials_.resize(ranks + std::size_t{1});
        factorials_[0] = 1;
        for (rank_t i = 1; i <= ranks; ++i) {
            factorials_[i] = factorials_[i - 1] * i;
        }
    } else {
        log_factorials_.resize(ranks + std::size_t{1});
        log_factorials_[0] = 0.0;
        for (rank_t i = 1; i <= ranks; ++i) {
            log_factorials_[i] = log_factorials_[i - 1] + std::log(static_cast<double>(i));
        }
    }
}

BigInt IdlAnalysis::binomial(rank_t n, rank_t k) const {
    if (k > n) {
        return 0;
    }
    return factorials_[n] / (factorials_[k] * factorials_[n - k]);
}

BigRational IdlAnalysis::prob_le_exact(rank_t failures) const {
    // With fewer than g survivors some group has no alive member left, so
    // the loss is certain; this also sidesteps the worst cancellation range
    // of the alternating sum.
    if (failures > ranks_ - groups_) {
        return 1;
    }
    // Inclusion-exclusion over the groups that fail completely:
    // sum_j (-1)^(j+1) C(g,j) C(p-jr, f-jr) / C(p,f).
    BigInt numerator = 0;
    for (rank_t j = 1; j <= groups_; ++j) {
        const std::uint64_t dead = static_cast<std::uint64_t>(j) * replication_;
        if (dead > failures) {
            break;
        }
        const BigInt term = binomial(groups_, j) * binomial(ranks_ - static_cast<rank_t>(dead),
                                                            failures - static_cast<rank_t>(dead));
        if (j % 2 == 1) {
            numerator += term;
        } else {
            numerator -= term;
        }
    }
    return BigRational(numerator, binomial(ranks_, failures));
}

double IdlAnalysis::log_binomial(rank_t n, rank_t k) const {
    return log_factorials_[n] - log_factorials_[k] - log_factorials_[n - k];
}

const std::vector<double>& IdlAnalysis::log_survivor_counts() const {
    if (!log_survivor_counts_.empty()) {
        return log_survivor_counts_;
    }
    // [x^f] of prod over groups of (sum_{t<r} C(r,t) x^t): the number of
    // ways to pick f failed ranks without completing any group. Knapsack
    // convolution in log space; every term is positive.
    constexpr double kLogZero = -std::numeric_limits<double>::infinity();
    const auto log_add = [](double a, double b) {
        if (a == kLogZero) {
            return b;
        }
        if (b == kLogZero) {
            return a;
        }
        const double hi = std::max(a, b);
        return hi + std::log1p(std::exp(std::min(a, b) - hi));
    };
    std::vector<double> group_weights(replication_);
    for (rank_t t = 0; t < replication_; ++t) {
        group_weights[t] = log_binomial(replication_, t);
    }
    const std::size_t degree = static_cast<std::size_t>(groups_) * (replication_ - 1);
    std::vector<double> counts(degree + 1, kLogZero);
    counts[0] = 0.0;
    std::size_t reach = 0;
    for (rank_t group = 0; group < groups_; ++group) {
        reach = std::min(degree, reach + replication_ - 1);
        for (std::size_t f = reach + 1; f-- > 0;) {
            double sum = counts[f];  // t = 0 contribution
            for (rank_t t = 1; t < replication_ && t <= f; ++t) {
                sum = log_add(sum, counts[f - t] + group_weights[t]);
            }
            counts[f] = sum;
        }
    }
    log_survivor_counts_ = std::move(counts);
    return log_survivor_counts_;
}

IdlValue IdlAnalysis::prob_le_logspace(rank_t failures) const {
    IdlValue result;
    result.method = IdlMethod::LogSpace;
    if (failures > ranks_ - groups_) {
        result.value = 1.0;
        return result;
    }
    const double log_total = log_binomial(ranks_, failures);
    double sum = 0.0;
    double compensation = 0.0;
    double max_term = 0.0;
    for (rank_t j = 1; j <= groups_; ++j) {
        const std::uint64_t dead = static_cast<std::uint64_t>(j) * replication_;
        if (dead > failures) {
            break;
        }
        const double magnitude =
            std::exp(log_binomial(groups_, j) +
                     log_binomial(ranks_ - static_cast<rank_t>(dead),
                                  failures - static_cast<rank_t>(dead)) -
                     log_total);
        max_term = std::max(max_term, magnitude);
        const double term = j % 2 == 1 ? magnitude : -magnitude;
        // Kahan compensated summation; the series alternates and cancels.
        const double y = term - compensation;
        const double t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    result.value = sum;
    if (max_term > 0.0 &&
        (sum < 0.0 || sum > 1.0 + 1e-9 || std::abs(sum) < 1e-9 * max_term ||
         max_term > 1e12 * std::abs(sum))) {
        // Cancellation ate the alternating sum. The survivor-count route is
        // all-positive and absolutely accurate, so it takes over; its only
        // weak spot (relative error for probabilities near 0) is exactly
        // where the alternating sum is well conditioned.
        if (ranks_ > kSurvivorDpMaxRanks) {
            result.precision_warning = true;
            result.value = std::clamp(sum, 0.0, 1.0);
            return result;
        }
        const std::vector<double>& counts = log_survivor_counts();
        const double log_survivors =
            failures < counts.size() ? counts[failures]
                                     : -std::numeric_limits<double>::infinity();
        result.value = 1.0 - std::exp(log_survivors - log_total);
        result.value = std::clamp(result.value, 0.0, 1.0);
        return result;
    }
    return result;
}

IdlValue IdlAnalysis::prob_le(rank_t failures) const {
    check_failures(failures, ranks_);
    if (!exact_) {
        return prob_le_logspace(failures);
    }
    IdlValue result;
    result.method = IdlMethod::Exact;
    result.exact = prob_le_exact(failures);
    result.value = static_cast<double>(result.exact);
    return result;
}

IdlValue IdlAnalysis::prob_eq(rank_t failures) const {
    check_failures(failures, ranks_);
    if (failures == 0) {
        return prob_le(0);
    }
    IdlValue le = prob_le(failures);
    const IdlValue before = prob_le(failures - 1);
    if (le.method == IdlMethod::Exact) {
        le.exact -= before.exact;
        le.value = static_cast<double>(le.exact);
    } else {
        le.value = std::max(0.0, le.value - before.value);
        le.precision_warning = le.precision_warning || before.precision_warning;
    }
    return le;
}

IdlValue IdlAnalysis::expected_failures() const {
    IdlValue result;
    if (exact_) {
        // E[F] = sum_{f>=0} P(F > f) = p - sum_{f<p} P_le(f).
        BigRational sum = 0;
        for (rank_t f = 0; f < ranks_; ++f) {
            sum += prob_le_exact(f);
        }
        result.method = IdlMethod::Exact;
        result.exact = BigRational(ranks_) - sum;
        result.value = static_cast<double>(result.exact);
        return result;
    }
    // E[F] = sum_f P(F > f); each addend is the survivor fraction
    // N(f)/C(p,f), an all-positive and cancellation-free sum.
    if (ranks_ <= kSurvivorDpMaxRanks) {
        const std::vector<double>& counts = log_survivor_counts();
        double sum = 0.0;
        for (rank_t f = 0; f < ranks_ && f < counts.size(); ++f) {
            sum += std::exp(counts[f] - log_binomial(ranks_, f));
        }
        result.method = IdlMethod::LogSpace;
        result.value = sum;
        return result;
    }
    double sum = 0.0;
    bool warned = false;
    for (rank_t f = 0; f < ranks_; ++f) {
        const IdlValue le = prob_le_logspace(f);
        sum += 1.0 - le.value;
        warned = warned || le.precision_warning;
    }
    result.method = IdlMethod::LogSpace;
    result.value = sum;
    result.precision_warning = warned;
    return result;
}

double IdlAnalysis::approx(rank_t failures) const {
    check_failures(failures, ranks_);
    const double fraction = static_cast<double>(failures) / static_cast<double>(ranks_);
    return static_cast<double>(groups_) * std::pow(fraction, static_cast<double>(replication_));
}

double IdlAnalysis::break_even_fraction() const {
    return std::pow(static_cast<double>(replication_) / static_cast<double>(ranks_),
                    1.0 / static_cast<double>(replication_));
}

IdlValue idl_prob_le(rank_t failures, rank_t ranks, rank_t replication) {
    return IdlAnalysis(ranks, replication).prob_le(failures);
}

IdlValue idl_prob_eq(rank_t failures, rank_t ranks, rank_t replication) {
    return IdlAnalysis(ranks, replication).prob_eq(failures);
}

IdlValue expected_failures_until_idl(rank_t ranks, rank_t replication) {
    return IdlAnalysis(ranks, replication).expected_failures();
}

double idl_prob_approx(rank_t failures, rank_t ranks, rank_t replication) {
    return IdlAnalysis(ranks, replication).approx(failures);
}

double idl_break_even_fraction(rank_t ranks, rank_t replication) {
    return IdlAnalysis(ranks, replication).break_even_fraction();
}

std::vector<double> LossSimulation::cdf(rank_t ranks) const {
    std::vector<std::uint64_t> histogram(ranks + std::size_t{1}, 0);
    for (const std::uint32_t sample : samples) {
        histogram[sample] += 1;
    }
    std::vector<double> cdf(ranks + std::size_t{1}, 0.0);
    std::uint64_t cumulative = 0;
    for (std::size_t f = 0; f < cdf.size(); ++f) {
        cumulative += histogram[f];
        cdf[f] = static_cast<double>(cumulative) / static_cast<double>(samples.size());
    }
    return cdf;
}

LossSimulation simulate_failures_until_idl(rank_t ranks, rank_t replication,
                                           std::uint64_t trials, std::uint64_t seed) {
    if (trials < 1) {
        throw ConfigError("need at least one trial");
    }
    const std::vector<std::uint32_t> group_of = replica_group_of_rank(ranks, replication);

    LossSimulation result;
    result.samples.reserve(trials);
    std::vector<rank_t> order(ranks);
    std::vector<rank_t> dead_members(ranks / replication);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        SplitMix64 rng(derive_seed(seed, trial));
        std::iota(order.begin(), order.end(), rank_t{0});
        std::fill(dead_members.begin(), dead_members.end(), rank_t{0});
        // Kill ranks one at a time in a uniformly random order until some
        // group is fully dead.
        for (rank_t i = 0; i < ranks; ++i) {
            const std::uint64_t j = i + rng.below(ranks - i);
            std::swap(order[i], order[j]);
            const std::uint32_t group = group_of[order[i]];
            if (++dead_members[group] == replication) {
                result.samples.push_back(i + 1);
                break;
            }
        }
    }

    std::vector<std::uint32_t> sorted = result.samples;
    std::sort(sorted.begin(), sorted.end());
    const auto percentile = [&](double q) {
        const auto index = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
        return sorted[index];
    };
    result.p10 = percentile(0.10);
    result.median = percentile(0.50);
    result.p90 = percentile(0.90);
    const double sum = std::accumulate(result.samples.begin(), result.samples.end(), 0.0);
    result.mean = sum / static_cast<double>(result.samples.size());
    result.mean_fraction = result.mean / static_cast<double>(ranks);
    return result;
}

}  // namespace restore_sim
