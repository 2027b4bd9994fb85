#include <doctest.h>

#include <cmath>
#include <vector>

#include "seqclr/contrastive.hpp"
#include "seqclr/errors.hpp"
#include "seqclr/rng.hpp"

using namespace seqclr;

namespace {

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

// Scalar reference: sum of nce_term over both anchor directions against the
// pooled 2M instances. Independent of the tensor graph.
double loss_by_enumeration(const std::vector<Eigen::VectorXd>& a,
                           const std::vector<Eigen::VectorXd>& b, double tau) {
    const int m = static_cast<int>(a.size());
    std::vector<Eigen::VectorXd> pool;
    pool.insert(pool.end(), a.begin(), a.end());
    pool.insert(pool.end(), b.begin(), b.end());
    double total = 0.0;
    for (int r = 0; r < m; ++r) {
        total += nce_term(a[r], b[r], pool, r, tau);
        total += nce_term(b[r], a[r], pool, m + r, tau);
    }
    return total;
}

Tensor rows_tensor(const std::vector<Eigen::VectorXd>& rows, bool requires_grad = false) {
    const int m = static_cast<int>(rows.size());
    const int d = static_cast<int>(rows[0].size());
    Array flat(m * d);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < d; ++c) flat[r * d + c] = rows[r][c];
    return Tensor::from_array(flat, {m, d}, requires_grad);
}

std::vector<Eigen::VectorXd> random_rows(int m, int d, uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
    Rng rng(seed);
    std::vector<Eigen::VectorXd> rows;
    for (int r = 0; r < m; ++r) {
        Eigen::VectorXd v(d);
        for (int c = 0; c < d; ++c) v[c] = rng.uniform(lo, hi);
        rows.push_back(v);
    }
    return rows;
}

}  // namespace

TEST_CASE("cosine similarity hits the exact extremes") {
    CHECK(cosine_similarity(vec2(2, 0), vec2(5, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(vec2(1, 1), vec2(-3, -3)) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cosine_similarity(vec2(1, 0), vec2(0, 7)) == doctest::Approx(0.0).epsilon(1e-12));
    // Zero vectors stay finite through the epsilon guard.
    double z = cosine_similarity(vec2(0, 0), vec2(1, 0));
    CHECK(std::isfinite(z));
    CHECK(z == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("two orthogonal pairs at tau=1 reproduce the worked value") {
    std::vector<Eigen::VectorXd> a{vec2(1, 0), vec2(0, 1)};
    std::vector<Eigen::VectorXd> b{vec2(1, 0), vec2(0, 1)};

    // Per-anchor: positive similarity 1, the other three pooled entries have
    // similarities 0, 0, 1 -> -log(e / (2 + e)).
    const double term = -std::log(std::exp(1.0) / (2.0 + std::exp(1.0)));
    CHECK(term == doctest::Approx(0.5514).epsilon(1e-4));

    std::vector<Eigen::VectorXd> pool{a[0], a[1], b[0], b[1]};
    CHECK(nce_term(a[0], b[0], pool, 0, 1.0) == doctest::Approx(term).epsilon(1e-12));

    double total = contrastive_loss(rows_tensor(a), rows_tensor(b), 1.0).value()[0];
    CHECK(total == doctest::Approx(4.0 * term).epsilon(1e-9));
    CHECK(std::abs(total - 2.2056) < 5e-4);  // the rounded presentation
    CHECK(total == doctest::Approx(loss_by_enumeration(a, b, 1.0)).epsilon(1e-12));
}

TEST_CASE("identical instances collapse to the chance level exactly") {
    for (int m : {1, 2, 3, 5}) {
        std::vector<Eigen::VectorXd> rows(m, vec2(0.3, -0.7));
        double total = contrastive_loss(rows_tensor(rows), rows_tensor(rows), 0.5).value()[0];
        double per_term = std::log(2.0 * m - 1.0);
        CHECK(chance_level_per_term(m) == doctest::Approx(per_term).epsilon(1e-15));
        CHECK(total == doctest::Approx(2.0 * m * per_term).epsilon(1e-12));
    }
}

TEST_CASE("tensor path equals scalar enumeration on random sets") {
    for (uint64_t seed : {31u, 32u, 33u}) {
        for (double tau : {0.1, 0.5, 1.0, 3.0}) {
            auto a = random_rows(4, 3, seed);
            auto b = random_rows(4, 3, seed + 100);
            double got = contrastive_loss(rows_tensor(a), rows_tensor(b), tau).value()[0];
            CHECK(got == doctest::Approx(loss_by_enumeration(a, b, tau)).epsilon(1e-10));
        }
    }
}

TEST_CASE("loss is invariant to per-row positive rescaling") {
    auto a = random_rows(3, 4, 41);
    auto b = random_rows(3, 4, 42);
    double base = contrastive_loss(rows_tensor(a), rows_tensor(b), 0.5).value()[0];

    auto a2 = a;
    auto b2 = b;
    a2[0] *= 7.0;
    a2[2] *= 0.01;
    b2[1] *= 250.0;
    double scaled = contrastive_loss(rows_tensor(a2), rows_tensor(b2), 0.5).value()[0];
    CHECK(scaled == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("loss is symmetric in the two views") {
    auto a = random_rows(5, 3, 51);
    auto b = random_rows(5, 3, 52);
    double ab = contrastive_loss(rows_tensor(a), rows_tensor(b), 0.7).value()[0];
    double ba = contrastive_loss(rows_tensor(b), rows_tensor(a), 0.7).value()[0];
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences") {
    for (auto [m, d] : std::vector<std::pair<int, int>>{{2, 2}, {3, 4}, {4, 8}}) {
        auto a_rows = random_rows(m, d, 60 + m);
        auto b_rows = random_rows(m, d, 70 + m);
        Tensor za = rows_tensor(a_rows, /*requires_grad=*/true);
        Tensor zb = rows_tensor(b_rows, /*requires_grad=*/true);
        Tensor loss = contrastive_loss(za, zb, 0.5);
        backward(loss);

        for (Tensor* leaf : {&za, &zb}) {
            Array numeric = finite_difference(
                [&]() { return contrastive_loss(za, zb, 0.5).value()[0]; }, *leaf, 1e-5);
            const Array& analytic = leaf->grad();
            for (int i = 0; i < numeric.size(); ++i) {
                double denom = std::max({std::abs(numeric[i]), std::abs(analytic[i]), 1e-3});
                CHECK(std::abs(numeric[i] - analytic[i]) / denom < 1e-4);
            }
        }
    }
}

TEST_CASE("instance-set overload enforces alignment and matches the raw path") {
    Rng rng(81);
    const int B = 2, T = 4, F = 3;
    FeatureSeq fa{Tensor::uniform({B * T, F}, -1.0, 1.0, rng), B, T, F};
    FeatureSeq fb{Tensor::uniform({B * T, F}, -1.0, 1.0, rng), B, T, F};
    MappingChoice window{MappingKind::window_to_instance, 2};
    InstanceSet za = map_instances(fa, window);
    InstanceSet zb = map_instances(fb, window);

    double via_sets = contrastive_loss(za, zb, 0.5).value()[0];
    double via_rows = contrastive_loss(za.vectors, zb.vectors, 0.5).value()[0];
    CHECK(via_sets == doctest::Approx(via_rows).epsilon(1e-12));

    InstanceSet skewed = map_instances(fb, window);
    std::swap(skewed.provenance[0], skewed.provenance[1]);
    CHECK_THROWS_AS(contrastive_loss(za, skewed, 0.5), ConfigError);

    CHECK_THROWS_AS(
        contrastive_loss(za, map_instances(fb, {MappingKind::window_to_instance, 4}), 0.5),
        ConfigError);
}

TEST_CASE("loss rejects degenerate configurations") {
    auto a = random_rows(2, 3, 91);
    auto b = random_rows(2, 3, 92);
    CHECK_THROWS_AS(contrastive_loss(rows_tensor(a), rows_tensor(b), 0.0), ConfigError);
    CHECK_THROWS_AS(contrastive_loss(rows_tensor(a), rows_tensor(b), -1.0), ConfigError);
    auto short_b = random_rows(1, 3, 93);
    CHECK_THROWS_AS(contrastive_loss(rows_tensor(a), rows_tensor(short_b), 0.5), ConfigError);
}

TEST_CASE("independent high-dimensional features sit near chance level") {
    // Near-isotropic random vectors: every similarity is close to 0, so each
    // term lands within 20% of log(2M - 1).
    const int m = 16, d = 256;
    auto a = random_rows(m, d, 95, -1.0, 1.0);
    auto b = random_rows(m, d, 96, -1.0, 1.0);
    double mean_term = contrastive_loss(rows_tensor(a), rows_tensor(b), 0.5).value()[0] / (2 * m);
    double chance = chance_level_per_term(m);
    CHECK(mean_term > 0.8 * chance);
    CHECK(mean_term < 1.2 * chance);
}
