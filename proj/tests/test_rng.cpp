#include <catch2/catch_amalgamated.hpp>

#include "derf/rng.hpp"

#include <cmath>

using derf::RngStream;

TEST_CASE("same seed reproduces the sequence", "[rng]") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    RngStream c(42), d(42);
    for (int i = 0; i < 100; ++i) REQUIRE(c.next_gaussian() == d.next_gaussian());
}

TEST_CASE("split streams are distinct from parent and siblings", "[rng]") {
    RngStream parent(7);
    RngStream c0 = parent.split(0);
    RngStream c1 = parent.split(1);
    RngStream p2(7);
    REQUIRE(c0.next_u64() != c1.next_u64());
    REQUIRE(parent.split(0).next_u64() == p2.split(0).next_u64());
    REQUIRE(parent.next_u64() != RngStream(7).split(0).next_u64());
}

TEST_CASE("gaussian moments", "[rng]") {
    RngStream rng(123);
    const int n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniforms stay in [0,1)", "[rng]") {
    RngStream rng(5);
    double mn = 1.0, mx = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        mn = std::min(mn, u);
        mx = std::max(mx, u);
        sum += u;
    }
    REQUIRE(mn >= 0.0);
    REQUIRE(mx < 1.0);
    REQUIRE(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}
