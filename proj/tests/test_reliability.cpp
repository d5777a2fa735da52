#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "restore_sim/errors.hpp"
#include "restore_sim/reliability.hpp"

using namespace restore_sim;

namespace {

// Independent oracle: walk all C(p, f) failure subsets and count the ones
// that fully contain some group {i, i + p/r, ...}.
BigRational enumerate_idl_le(rank_t failures, rank_t ranks, rank_t replication) {
    const rank_t groups = ranks / replication;
    std::vector<std::uint32_t> group_masks;
    for (rank_t g = 0; g < groups; ++g) {
        std::uint32_t mask = 0;
        for (rank_t k = 0; k < replication; ++k) {
            mask |= std::uint32_t{1} << (g + k * groups);
        }
        group_masks.push_back(mask);
    }
    BigInt hits = 0;
    BigInt total = 0;
    for (std::uint32_t subset = 0; subset < (std::uint32_t{1} << ranks); ++subset) {
        if (static_cast<rank_t>(__builtin_popcount(subset)) != failures) {
            continue;
        }
        ++total;
        for (const std::uint32_t mask : group_masks) {
            if ((subset & mask) == mask) {
                ++hits;
                break;
            }
        }
    }
    return BigRational(hits, total);
}

}  // namespace

TEST_CASE("small closed-form values") {
    CHECK(idl_prob_le(2, 4, 2).exact == BigRational(1, 3));
    CHECK(idl_prob_le(1, 4, 2).exact == BigRational(0));
    CHECK(idl_prob_le(3, 4, 2).exact == BigRational(1));
    CHECK(idl_prob_le(4, 4, 2).exact == BigRational(1));

    CHECK(idl_prob_eq(2, 4, 2).exact == BigRational(1, 3));
    CHECK(idl_prob_eq(3, 4, 2).exact == BigRational(2, 3));
    CHECK(idl_prob_eq(4, 4, 2).exact == BigRational(0));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(idl_prob_le(1, 6, 4), ConfigError);  // r does not divide p
    CHECK_THROWS_AS(idl_prob_le(9, 8, 2), DomainError);  // f > p
    CHECK_THROWS_AS(IdlAnalysis(4, 0), ConfigError);
    CHECK_THROWS_AS(IdlAnalysis(4, 5), ConfigError);
}

TEST_CASE("exhaustive enumeration agrees for p <= 10") {
    for (rank_t p = 1; p <= 10; ++p) {
        for (rank_t r = 1; r <= p; ++r) {
            if (p % r != 0) {
                continue;
            }
            const IdlAnalysis analysis(p, r);
            for (rank_t f = 0; f <= p; ++f) {
                REQUIRE(analysis.prob_le(f).exact == enumerate_idl_le(f, p, r));
            }
        }
    }
}

TEST_CASE("the pointwise probabilities form a distribution") {
    for (const auto& [p, r] : std::vector<std::pair<rank_t, rank_t>>{{4, 2}, {12, 3}, {48, 4}}) {
        const IdlAnalysis analysis(p, r);
        BigRational sum = 0;
        BigRational previous = 0;
        for (rank_t f = 0; f <= p; ++f) {
            const BigRational le = analysis.prob_le(f).exact;
            REQUIRE(le >= previous);  // monotone CDF
            const BigRational eq = analysis.prob_eq(f).exact;
            REQUIRE(eq >= 0);
            sum += eq;
            previous = le;
        }
        CHECK(analysis.prob_le(r - 1).exact == 0);
        CHECK(analysis.prob_le(p).exact == 1);
        CHECK(sum == BigRational(1));
    }
}

TEST_CASE("expected failures until loss") {
    CHECK(expected_failures_until_idl(4, 2).exact == BigRational(8, 3));
    // A single group loses its data at exactly the r-th failure.
    CHECK(expected_failures_until_idl(4, 4).exact == BigRational(4));
    CHECK(expected_failures_until_idl(1, 1).exact == BigRational(1));
    // Frozen decimal values, cross-checked against an independent
    // implementation of the same closed form.
    CHECK(expected_failures_until_idl(48, 4).value == doctest::Approx(23.560404).epsilon(1e-6));
    CHECK(expected_failures_until_idl(64, 4).value == doctest::Approx(29.176198).epsilon(1e-6));
}

TEST_CASE("approximation: value, overestimate, and frozen deviation band") {
    CHECK(idl_prob_approx(2, 4, 2) == doctest::Approx(0.5));
    CHECK(idl_prob_approx(0, 4, 2) == 0.0);
    CHECK(idl_break_even_fraction(1024, 4) == doctest::Approx(0.25));

    // For p=1024, r=4, f in [4, 8] the approximation overestimates the
    // exact value; the relative deviation is largest at f = r and decreases
    // with f. The 9.6043 bound is frozen from the first exact computation.
    const IdlAnalysis analysis(1024, 4);
    double previous_deviation = std::numeric_limits<double>::infinity();
    for (rank_t f = 4; f <= 8; ++f) {
        const double exact = analysis.prob_le(f).value;
        const double approx = analysis.approx(f);
        REQUIRE(approx >= exact);
        const double deviation = (approx - exact) / exact;
        REQUIRE(deviation <= 9.61);
        REQUIRE(deviation <= previous_deviation);
        previous_deviation = deviation;
    }
    CHECK(previous_deviation == doctest::Approx(1.423835).epsilon(1e-4));
}

TEST_CASE("log-space fallback tracks exact values for large p") {
    // p = 4096 uses the log-space path; an exact big-integer evaluation of
    // the same sum in this test provides the oracle.
    const rank_t p = 4096;
    const rank_t r = 4;
    const rank_t g = p / r;
    const IdlAnalysis analysis(p, r);
    REQUIRE_FALSE(analysis.exact());

    std::vector<BigInt> fact(p + 1);
    fact[0] = 1;
    for (rank_t i = 1; i <= p; ++i) {
        fact[i] = fact[i - 1] * i;
    }
    const auto binom = [&](rank_t n, rank_t k) { return fact[n] / (fact[k] * fact[n - k]); };
    // 700 and beyond sit in the range where the alternating sum cancels
    // catastrophically and the survivor-count route takes over.
    for (const rank_t f : {r, static_cast<rank_t>(16), static_cast<rank_t>(256),
                           static_cast<rank_t>(700), static_cast<rank_t>(1024),
                           static_cast<rank_t>(2048), static_cast<rank_t>(3000), p}) {
        BigInt numerator = 0;
        for (rank_t j = 1; j <= g && j * r <= f; ++j) {
            const BigInt term = binom(g, j) * binom(p - j * r, f - j * r);
            numerator += (j % 2 == 1) ? term : -term;
        }
        const double exact = static_cast<double>(BigRational(numerator, binom(p, f)));
        const IdlValue value = analysis.prob_le(f);
        if (exact > 1e-300) {
            CHECK(value.value == doctest::Approx(exact).epsilon(1e-9));
        }
    }
    CHECK(analysis.prob_le(r - 1).value == 0.0);
    CHECK(analysis.prob_le(p).value == doctest::Approx(1.0));

    // The expectation is an all-positive sum over the same table; the
    // simulation provides the cross-method oracle.
    const IdlValue expected = analysis.expected_failures();
    CHECK_FALSE(expected.precision_warning);
    const LossSimulation sim = simulate_failures_until_idl(p, r, 20000, 77);
    double variance = 0.0;
    for (const std::uint32_t sample : sim.samples) {
        variance += (sample - sim.mean) * (sample - sim.mean);
    }
    const double stderr_mean = std::sqrt(variance / 20000.0 / 20000.0);
    CHECK(std::abs(expected.value - sim.mean) <= 4 * stderr_mean);
}

TEST_CASE("simulation on the real placement matches the closed form") {
    SUBCASE("a single group always dies at exactly r failures") {
        const LossSimulation sim = simulate_failures_until_idl(4, 4, 200, 1);
        for (const std::uint32_t sample : sim.samples) {
            CHECK(sample == 4);
        }
    }
    SUBCASE("CDF agreement at reduced trial count") {
        const rank_t p = 48;
        const rank_t r = 4;
        const std::uint64_t trials = 20000;
        const LossSimulation sim = simulate_failures_until_idl(p, r, trials, 99);
        const std::vector<double> cdf = sim.cdf(p);
        const IdlAnalysis analysis(p, r);
        double max_gap = 0.0;
        for (rank_t f = 0; f <= p; ++f) {
            max_gap = std::max(max_gap, std::abs(cdf[f] - analysis.prob_le(f).value));
        }
        CHECK(max_gap <= 0.02);

        // Mean within 4 sigma of the exact expectation 23.5604.
        double variance = 0.0;
        for (const std::uint32_t sample : sim.samples) {
            variance += (sample - sim.mean) * (sample - sim.mean);
        }
        variance /= static_cast<double>(trials);
        const double stderr_mean = std::sqrt(variance / static_cast<double>(trials));
        CHECK(std::abs(sim.mean - 23.560404) <= 4 * stderr_mean);
    }
    SUBCASE("identical seeds reproduce identical samples") {
        const LossSimulation a = simulate_failures_until_idl(16, 4, 500, 7);
        const LossSimulation b = simulate_failures_until_idl(16, 4, 500, 7);
        CHECK(a.samples == b.samples);
    }
}
