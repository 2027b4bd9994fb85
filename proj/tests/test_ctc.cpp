#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "seqclr/charset.hpp"
#include "seqclr/ctc.hpp"
#include "seqclr/rng.hpp"

using namespace seqclr;

namespace {

std::vector<int> ids_from(const std::string& s, int blank_id) {
    // 'a'.. map to 0.., '-' is the blank.
    std::vector<int> out;
    for (char c : s) out.push_back(c == '-' ? blank_id : c - 'a');
    return out;
}

Tensor logits_tensor(const RowMat& m, bool requires_grad = false) {
    Array flat(m.rows() * m.cols());
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
    return Tensor::from_array(flat, {static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                              requires_grad);
}

RowMat random_logits(int t, int k, uint64_t seed, double scale = 2.0) {
    Rng rng(seed);
    RowMat m(t, k);
    for (int r = 0; r < t; ++r)
        for (int c = 0; c < k; ++c) m(r, c) = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST_CASE("collapse removes repeats first and blanks second") {
    const int blank = 26;
    CHECK(ctc_collapse(ids_from("aa-a-bbb-cc-ccc--", blank), blank) ==
          ids_from("aabcc", blank));
    CHECK(ctc_collapse(ids_from("---", blank), blank).empty());
    CHECK(ctc_collapse({}, blank).empty());
    CHECK(ctc_collapse(ids_from("a-a", blank), blank) == ids_from("aa", blank));
    CHECK(ctc_collapse(ids_from("aab", blank), blank) == ids_from("ab", blank));
}

TEST_CASE("feasibility counts repeats as mandatory separators") {
    CHECK(ctc_feasible({0, 1}, 2));
    CHECK(ctc_feasible({0, 0}, 3));
    CHECK_FALSE(ctc_feasible({0, 0}, 2));
    CHECK_FALSE(ctc_feasible({0, 1, 2}, 2));
    CHECK(ctc_feasible({}, 0));
    CHECK(ctc_feasible({0, 0, 0}, 5));
    CHECK_FALSE(ctc_feasible({0, 0, 0}, 4));
}

TEST_CASE("uniform two-frame toy case has probability 3/4") {
    // K = 2 (symbol a + blank), uniform logits, target "a": paths aa, a-, -a
    // collapse to "a"; only -- misses. p = 3/4.
    RowMat logits = RowMat::Zero(2, 2);
    Tensor loss = ctc_loss_single(logits_tensor(logits), {0}, 1);
    CHECK(loss.value()[0] == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
    CHECK(ctc_loss_bruteforce(logits, {0}, 1) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("forward recursion equals exhaustive path enumeration") {
    // Alphabets up to 3 symbols (K = 4 with blank), frames up to 6.
    for (int k_sym : {1, 2, 3}) {
        const int k = k_sym + 1;
        const int blank = k_sym;
        for (int t : {1, 2, 3, 4, 6}) {
            RowMat logits = random_logits(t, k, 1000 + 10 * k_sym + t);
            std::vector<std::vector<int>> targets = {{}, {0}};
            if (k_sym >= 2) {
                targets.push_back({0, 1});
                targets.push_back({1, 0, 1});
            }
            targets.push_back({0, 0});
            if (k_sym >= 3) targets.push_back({2, 1});
            for (const auto& target : targets) {
                double brute = ctc_loss_bruteforce(logits, target, blank);
                Tensor dp = ctc_loss_single(logits_tensor(logits), target, blank);
                if (!ctc_feasible(target, t)) {
                    CHECK(std::isinf(dp.value()[0]));
                    CHECK(std::isinf(brute));
                    continue;
                }
                CHECK(dp.value()[0] == doctest::Approx(brute).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("infeasible targets give +inf and no gradient") {
    RowMat logits = random_logits(2, 3, 7);
    Tensor t = logits_tensor(logits, /*requires_grad=*/true);
    Tensor loss = ctc_loss_single(t, {0, 0}, 2);  // needs T >= 3
    CHECK(std::isinf(loss.value()[0]));
    CHECK(loss.value()[0] > 0);
    backward(loss);
    CHECK(t.grad().abs().maxCoeff() == 0.0);
}

TEST_CASE("gradients match central finite differences") {
    for (auto [t_len, k, target] : std::vector<std::tuple<int, int, std::vector<int>>>{
             {3, 3, {0, 1}}, {4, 4, {2, 0}}, {5, 3, {0, 0}}, {6, 4, {1, 2, 1}}}) {
        RowMat logits = random_logits(t_len, k, 40 + t_len, 1.5);
        Tensor leaf = logits_tensor(logits, /*requires_grad=*/true);
        Tensor loss = ctc_loss_single(leaf, target, k - 1);
        backward(loss);
        Array numeric = finite_difference(
            [&]() { return ctc_loss_single(leaf, target, k - 1).value()[0]; }, leaf, 1e-6);
        for (int i = 0; i < numeric.size(); ++i) {
            double denom = std::max({std::abs(numeric[i]), std::abs(leaf.grad()[i]), 1e-3});
            CHECK(std::abs(numeric[i] - leaf.grad()[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("batched loss averages the feasible samples") {
    const int t_len = 4, k = 3, blank = 2;
    RowMat l0 = random_logits(t_len, k, 61);
    RowMat l1 = random_logits(t_len, k, 62);
    RowMat block(2 * t_len, k);
    block.topRows(t_len) = l0;
    block.bottomRows(t_len) = l1;

    double want0 = ctc_loss_single(logits_tensor(l0), {0, 1}, blank).value()[0];
    double want1 = ctc_loss_single(logits_tensor(l1), {1}, blank).value()[0];
    Tensor mean = ctc_loss(logits_tensor(block), 2, t_len, {{0, 1}, {1}}, blank);
    CHECK(mean.value()[0] == doctest::Approx(0.5 * (want0 + want1)).epsilon(1e-12));

    // An infeasible member is skipped, not propagated.
    Tensor partial = ctc_loss(logits_tensor(block), 2, t_len, {{0, 0, 1, 1, 0}, {1}}, blank);
    CHECK(partial.value()[0] == doctest::Approx(want1).epsilon(1e-12));

    Tensor none = ctc_loss(logits_tensor(block), 2, t_len, {{0, 0, 1, 1, 0}, {1, 1, 1}}, blank);
    CHECK(std::isinf(none.value()[0]));
}

TEST_CASE("greedy path takes the lowest id on ties") {
    RowMat logits(3, 4);
    logits << 0.0, 0.0, 0.0, 0.0,   // full tie -> 0
              1.0, 5.0, 5.0, 0.0,   // tie between 1 and 2 -> 1
              0.0, 0.0, 0.0, 9.0;   // clear winner -> 3
    ConstMatMap map(logits.data(), 3, 4);
    CHECK(greedy_path(map) == std::vector<int>{0, 1, 3});
}

TEST_CASE("batch decoding collapses per sample through the charset") {
    Charset cs("ab");
    const int k = cs.size() + 1;  // blank is id 2
    const int t_len = 5;
    auto one_hot = [&](const std::vector<int>& path) {
        RowMat m = RowMat::Zero(t_len, k);
        for (int r = 0; r < t_len; ++r) m(r, path[r]) = 4.0;
        return m;
    };
    RowMat block(2 * t_len, k);
    block.topRows(t_len) = one_hot({0, 0, 2, 1, 1});     // "aa-bb" -> "ab"
    block.bottomRows(t_len) = one_hot({2, 0, 2, 0, 2});  // "-a-a-" -> "aa"

    std::vector<std::string> decoded = ctc_decode_batch(logits_tensor(block), 2, t_len, cs);
    REQUIRE(decoded.size() == 2);
    CHECK(decoded[0] == "ab");
    CHECK(decoded[1] == "aa");
}
