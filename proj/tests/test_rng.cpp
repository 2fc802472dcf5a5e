#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tracelink/rng.hpp"

using tracelink::Rng;
using tracelink::derive_rng;

TEST_CASE("same seed reproduces the stream") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("derived streams differ by tag and agree by tag") {
    Rng a = derive_rng(7, "dropout");
    Rng b = derive_rng(7, "dropout");
    Rng c = derive_rng(7, "batch-shuffle");
    CHECK(a.next_u64() == b.next_u64());
    Rng a2 = derive_rng(7, "dropout");
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) {
        if (a2.next_u64() != c.next_u64()) {
            all_equal = false;
        }
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("uniform stays inside its bounds") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform(-2.5, 4.0);
        CHECK(v >= -2.5);
        CHECK(v < 4.0);
    }
}

TEST_CASE("uniform_index covers exactly [0, n)") {
    Rng rng(11);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto j = rng.uniform_index(7);
        REQUIRE(j < 7);
        ++seen[j];
    }
    for (const int count : seen) {
        CHECK(count > 0);
    }
}

TEST_CASE("shuffle permutes without losing elements") {
    Rng rng(5);
    std::vector<int> values(50);
    for (int i = 0; i < 50; ++i) {
        values[i] = i;
    }
    std::vector<int> shuffled = values;
    rng.shuffle(shuffled);
    CHECK(shuffled != values);
    std::sort(shuffled.begin(), shuffled.end());
    CHECK(shuffled == values);
}

TEST_CASE("normal drifts toward its mean") {
    Rng rng(9);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(1.0, 2.0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 1.0) < 0.1);
    CHECK(std::abs(var - 4.0) < 0.3);
}
