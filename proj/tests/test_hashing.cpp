#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdint>
#include <vector>

#include "restore_sim/hashing.hpp"

using namespace restore_sim;

namespace {

// Average number of output bits flipped by single-bit input flips.
template <typename Hash>
double avalanche_score(Hash hash, std::uint64_t samples) {
    SplitMix64 rng(12345);
    std::uint64_t flipped = 0;
    std::uint64_t pairs = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const std::uint64_t x = rng.next();
        const std::uint64_t hx = hash(x);
        for (int bit = 0; bit < 64; ++bit) {
            flipped += std::popcount(hx ^ hash(x ^ (std::uint64_t{1} << bit)));
            ++pairs;
        }
    }
    return static_cast<double>(flipped) / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("mix64 is bijective on samples and passes the avalanche smoke test") {
    CHECK(avalanche_score([](std::uint64_t x) { return mix64(x); }, 200) >= 20.0);
}

TEST_CASE("base and seeded hash families pass the avalanche smoke test") {
    CHECK(avalanche_score([](std::uint64_t x) { return hash_block(x); }, 200) >= 20.0);
    CHECK(avalanche_score([](std::uint64_t x) { return hash_seeded(7, x); }, 200) >= 20.0);
    // Flipping seed bits must also diffuse.
    CHECK(avalanche_score([](std::uint64_t s) { return hash_seeded(s, 99); }, 200) >= 20.0);
}

TEST_CASE("SplitMix64 streams are deterministic") {
    SplitMix64 a(42);
    SplitMix64 b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next() == b.next());
    }
    SplitMix64 c(43);
    CHECK(SplitMix64(42).next() != c.next());
}

TEST_CASE("SplitMix64::below stays in bounds and covers small ranges") {
    SplitMix64 rng(1);
    std::vector<int> seen(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t value = rng.below(10);
        REQUIRE(value < 10);
        ++seen[value];
    }
    for (const int count : seen) {
        // 10000 draws over 10 bins; 6 sigma of binomial(10000, 0.1) is ~180.
        CHECK(count > 1000 - 200);
        CHECK(count < 1000 + 200);
    }
}

TEST_CASE("next_double lies in [0, 1)") {
    SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double value = rng.next_double();
        CHECK(value >= 0.0);
        CHECK(value < 1.0);
    }
}

TEST_CASE("derive_seed produces distinct per-index seeds") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}
