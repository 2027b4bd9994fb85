#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "seqclr/rng.hpp"

using namespace seqclr;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    bool all_equal = true;
    for (int i = 0; i < 10; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
    CHECK_FALSE(all_equal);
}

TEST_CASE("uniform stays inside its bounds and fills them") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);

    for (int i = 0; i < 1000; ++i) {
        double v = rng.uniform(-2.5, 3.5);
        CHECK(v >= -2.5);
        CHECK(v < 3.5);
    }
}

TEST_CASE("uniform_int covers inclusive bounds uniformly enough") {
    Rng rng(11);
    std::vector<int> counts(6, 0);
    for (int i = 0; i < 60000; ++i) {
        int v = rng.uniform_int(2, 7);
        CHECK(v >= 2);
        CHECK(v <= 7);
        counts[static_cast<std::size_t>(v - 2)]++;
    }
    // Chi-square against uniform with 5 dof; 40 is far beyond the 0.999 quantile.
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    CHECK(chi2 < 40.0);
}

TEST_CASE("normal has the requested moments") {
    Rng rng(13);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal(1.5, 2.0);
        sum += v;
        sq += v * v;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(1.5).epsilon(0.03));
    CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("permutation is a permutation and is seed-deterministic") {
    Rng a(3), b(3);
    std::vector<std::size_t> pa = a.permutation(100), pb = b.permutation(100);
    CHECK(pa == pb);
    std::set<std::size_t> seen(pa.begin(), pa.end());
    CHECK(seen.size() == 100);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 99);
}

TEST_CASE("derive_seed separates substreams") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(99, i));
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(99, 5) == derive_seed(99, 5));
    CHECK(derive_seed(99, 5) != derive_seed(100, 5));

    // Child draws do not depend on how far the parent has advanced.
    Rng parent(21);
    Rng child_early = parent.child(4);
    for (int i = 0; i < 17; ++i) parent.next_u64();
    Rng child_late = parent.child(4);
    CHECK(child_early.next_u64() == child_late.next_u64());
}

TEST_CASE("serialize round-trips mid-stream state") {
    Rng rng(31);
    for (int i = 0; i < 7; ++i) rng.normal();  // leave a Box-Muller spare in flight
    Rng copy = Rng::deserialize(rng.serialize());
    for (int i = 0; i < 50; ++i) {
        CHECK(rng.normal() == doctest::Approx(copy.normal()).epsilon(1e-15));
        CHECK(rng.next_u64() == copy.next_u64());
    }
}
