#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "seqclr/nn.hpp"
#include "seqclr/rng.hpp"

using namespace seqclr;

namespace {

double max_rel_err(const Array& got, const Array& want) {
    REQUIRE(got.size() == want.size());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < got.size(); ++i) {
        double denom = std::max(std::abs(want[i]), 1e-3);
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

void check_grad(const std::function<Tensor()>& build, Tensor leaf, double tol = 1e-4) {
    leaf.zero_grad();
    backward(build());
    Array analytic = leaf.grad();
    Array fd = finite_difference([&] { return build().item(); }, leaf, 1e-5);
    CHECK(max_rel_err(analytic, fd) < tol);
}

Tensor mix_to_scalar(const Tensor& x) {
    Rng rng(555);
    Array w(x.numel());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.5, 1.5);
    return sum(mul(x, Tensor::from_array(w, x.shape())));
}

}  // namespace

TEST_CASE("conv2d matches a naive sliding window") {
    Rng rng(2);
    Tensor x = Tensor::uniform({2, 3, 5, 7}, -1.0, 1.0, rng, true);
    Conv2d conv(3, 4, 3, 3, 1, 1, 1, 1, rng);
    Tensor y = conv.forward(x);
    REQUIRE(y.shape() == std::vector<int>{2, 4, 5, 7});

    auto at = [](const Tensor& t, int b, int c, int i, int j) {
        const auto& s = t.shape();
        return t.value()[((b * s[1] + c) * s[2] + i) * s[3] + j];
    };
    // Spot-check a handful of output cells against the definition.
    for (auto [b, k, i, j] : std::vector<std::array<int, 4>>{
             {0, 0, 0, 0}, {1, 3, 4, 6}, {0, 2, 2, 3}, {1, 1, 0, 5}}) {
        double want = conv.bias.value()[k];
        for (int c = 0; c < 3; ++c)
            for (int di = 0; di < 3; ++di)
                for (int dj = 0; dj < 3; ++dj) {
                    int ii = i + di - 1, jj = j + dj - 1;
                    if (ii < 0 || ii >= 5 || jj < 0 || jj >= 7) continue;
                    want += conv.weight.value()[k * 27 + (c * 3 + di) * 3 + dj] *
                            at(x, b, c, ii, jj);
                }
        CHECK(at(y, b, k, i, j) == doctest::Approx(want).epsilon(1e-10));
    }

    check_grad([&] { return mix_to_scalar(conv.forward(x)); }, x);
    check_grad([&] { return mix_to_scalar(conv.forward(x)); }, conv.weight);
    check_grad([&] { return mix_to_scalar(conv.forward(x)); }, conv.bias);
}

TEST_CASE("maxpool2d picks window maxima and clips padded windows") {
    Array v(16);
    for (int i = 0; i < 16; ++i) v[i] = i;  // 4x4 ramp
    Tensor x = Tensor::from_array(v, {1, 1, 4, 4}, true);
    Tensor y = maxpool2d(x, 2, 2, 2, 2);
    REQUIRE(y.shape() == std::vector<int>{1, 1, 2, 2});
    CHECK(y.value()[0] == 5.0);
    CHECK(y.value()[3] == 15.0);

    // Asymmetric stride with width padding: output keeps the padded width;
    // border windows only see real cells.
    Tensor z = maxpool2d(x, 2, 2, 2, 1, 0, 1);
    REQUIRE(z.shape() == std::vector<int>{1, 1, 2, 5});
    CHECK(z.value()[0] == 4.0);   // window covers column -1..0 -> col 0 only
    CHECK(z.value()[4] == 7.0);   // window covers column 3..4 -> col 3 only
    CHECK(z.value()[1] == 5.0);

    check_grad([&] { return mix_to_scalar(maxpool2d(x, 2, 2, 2, 2)); }, x);
    check_grad([&] { return mix_to_scalar(maxpool2d(x, 2, 2, 2, 1, 0, 1)); }, x);
}

TEST_CASE("map_to_sequence lays frames out contiguously per sample") {
    Rng rng(3);
    Tensor x = Tensor::uniform({2, 3, 1, 4}, -1.0, 1.0, rng, true);
    Tensor seq = map_to_sequence(x);
    REQUIRE(seq.shape() == std::vector<int>{8, 3});
    // Row b*W + t, column c == x[b, c, 0, t].
    for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 4; ++t)
            for (int c = 0; c < 3; ++c)
                CHECK(seq.value()[(b * 4 + t) * 3 + c] ==
                      x.value()[(b * 3 + c) * 4 + t]);
    check_grad([&] { return mix_to_scalar(map_to_sequence(x)); }, x);
}

TEST_CASE("time_slice, stack_time, and repeat_rows agree with the block layout") {
    Rng rng(4);
    Tensor seq = Tensor::uniform({6, 2}, -1.0, 1.0, rng, true);  // B=2, T=3
    Tensor t1 = time_slice(seq, 2, 3, 1);
    REQUIRE(t1.shape() == std::vector<int>{2, 2});
    CHECK(t1.value()[0] == seq.value()[1 * 2 + 0]);
    CHECK(t1.value()[2] == seq.value()[4 * 2 + 0]);

    std::vector<Tensor> steps{time_slice(seq, 2, 3, 0), time_slice(seq, 2, 3, 1),
                              time_slice(seq, 2, 3, 2)};
    Tensor rebuilt = stack_time(steps, 2);
    CHECK((rebuilt.value() - seq.value()).abs().maxCoeff() == 0.0);
    check_grad([&] { return mix_to_scalar(time_slice(seq, 2, 3, 2)); }, seq);
    check_grad(
        [&] {
            std::vector<Tensor> s{time_slice(seq, 2, 3, 0), time_slice(seq, 2, 3, 1),
                                  time_slice(seq, 2, 3, 2)};
            return mix_to_scalar(stack_time(s, 2));
        },
        seq);

    Tensor r = Tensor::uniform({2, 3}, -1.0, 1.0, rng, true);
    Tensor tiled = repeat_rows(r, 2);
    REQUIRE(tiled.shape() == std::vector<int>{4, 3});
    CHECK(tiled.value()[0] == r.value()[0]);
    CHECK(tiled.value()[3] == r.value()[0]);
    CHECK(tiled.value()[6] == r.value()[3]);
    check_grad([&] { return mix_to_scalar(repeat_rows(r, 3)); }, r);
}

TEST_CASE("adaptive row pooling matches the window rule on small cases") {
    // T=3 -> T'=2: windows [0,2) and [1,3) under floor/ceil boundaries.
    Array v(6);
    for (int i = 0; i < 6; ++i) v[i] = i + 1;
    Tensor x = Tensor::from_array(v, {3, 2}, true);
    Tensor y = pool_rows_adaptive(x, 1, 3, 2);
    REQUIRE(y.shape() == std::vector<int>{2, 2});
    CHECK(y.value()[0] == doctest::Approx((1 + 3) / 2.0));
    CHECK(y.value()[1] == doctest::Approx((2 + 4) / 2.0));
    CHECK(y.value()[2] == doctest::Approx((3 + 5) / 2.0));
    CHECK(y.value()[3] == doctest::Approx((4 + 6) / 2.0));
    check_grad([&] { return mix_to_scalar(pool_rows_adaptive(x, 1, 3, 2)); }, x);

    // Identity when T' == T, column mean when T' == 1.
    Tensor same = pool_rows_adaptive(x, 1, 3, 3);
    CHECK((same.value() - x.value()).abs().maxCoeff() == 0.0);
    Tensor one = pool_rows_adaptive(x, 1, 3, 1);
    CHECK(one.value()[0] == doctest::Approx(3.0));
    CHECK(one.value()[1] == doctest::Approx(4.0));
}

TEST_CASE("adaptive row pooling windows match brute force up to T=32") {
    for (int frames = 1; frames <= 32; ++frames) {
        Rng rng(100 + static_cast<std::uint64_t>(frames));
        Tensor x = Tensor::uniform({2 * frames, 3}, -1.0, 1.0, rng);
        for (int out = 1; out <= frames; ++out) {
            Tensor y = pool_rows_adaptive(x, 2, frames, out);
            for (int b = 0; b < 2; ++b)
                for (int j = 0; j < out; ++j) {
                    int lo = (j * frames) / out;
                    int hi = ((j + 1) * frames + out - 1) / out;  // ceil
                    for (int c = 0; c < 3; ++c) {
                        double mean = 0.0;
                        for (int t = lo; t < hi; ++t)
                            mean += x.value()[(b * frames + t) * 3 + c];
                        mean /= (hi - lo);
                        double got = y.value()[(b * out + j) * 3 + c];
                        REQUIRE(got == doctest::Approx(mean).epsilon(1e-12));
                    }
                }
        }
    }
}

TEST_CASE("attend forms convex frame combinations") {
    Rng rng(6);
    Tensor frames = Tensor::uniform({6, 4}, -1.0, 1.0, rng, true);  // B=2, T=3
    Array a(6);
    a << 0.2, 0.5, 0.3, 0.1, 0.1, 0.8;
    Tensor alpha = Tensor::from_array(a, {2, 3}, true);
    Tensor out = attend(frames, alpha);
    REQUIRE(out.shape() == std::vector<int>{2, 4});
    for (int b = 0; b < 2; ++b)
        for (int f = 0; f < 4; ++f) {
            double want = 0.0;
            for (int t = 0; t < 3; ++t)
                want += alpha.value()[b * 3 + t] * frames.value()[(b * 3 + t) * 4 + f];
            CHECK(out.value()[b * 4 + f] == doctest::Approx(want).epsilon(1e-12));
        }
    check_grad([&] { return mix_to_scalar(attend(frames, alpha)); }, frames);
    check_grad([&] { return mix_to_scalar(attend(frames, alpha)); }, alpha);
}

TEST_CASE("batch normalization standardizes in training and reuses stats in eval") {
    Rng rng(7);
    Tensor x = Tensor::uniform({4, 2, 3, 5}, -2.0, 2.0, rng, true);
    BatchNorm2d bn(2);
    Tensor y = bn.forward(x, /*training=*/true);
    // Per-channel mean ~0, var ~1 over (B, H, W).
    for (int c = 0; c < 2; ++c) {
        double sum = 0.0, sq = 0.0;
        int count = 0;
        for (int b = 0; b < 4; ++b)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 5; ++j) {
                    double v = y.value()[((b * 2 + c) * 3 + i) * 5 + j];
                    sum += v;
                    sq += v * v;
                    ++count;
                }
        CHECK(sum / count == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(sq / count == doctest::Approx(1.0).epsilon(1e-3));
    }
    // Eval mode must use running statistics, not batch statistics.
    Tensor z_eval = bn.forward(x, /*training=*/false);
    CHECK((z_eval.value() - y.value()).abs().maxCoeff() > 1e-3);

    check_grad([&] { return mix_to_scalar(bn.forward(x, true)); }, x, 2e-4);
    check_grad([&] { return mix_to_scalar(bn.forward(x, true)); }, bn.gamma, 2e-4);
    check_grad([&] { return mix_to_scalar(bn.forward(x, false)); }, x);
}

TEST_CASE("linear layer computes x W + b and trains") {
    Rng rng(8);
    Linear lin(3, 2, rng);
    Tensor x = Tensor::uniform({4, 3}, -1.0, 1.0, rng, true);
    Tensor y = lin.forward(x);
    REQUIRE(y.shape() == std::vector<int>{4, 2});
    double want = lin.bias.value()[0];
    for (int k = 0; k < 3; ++k) want += x.value()[k] * lin.weight.value()[k * 2];
    CHECK(y.value()[0] == doctest::Approx(want).epsilon(1e-12));
    check_grad([&] { return mix_to_scalar(lin.forward(x)); }, lin.weight);
    check_grad([&] { return mix_to_scalar(lin.forward(x)); }, lin.bias);
}

TEST_CASE("lstm step gates and propagates gradients") {
    Rng rng(9);
    LstmParams p(3, 4, rng);
    Tensor x = Tensor::uniform({2, 3}, -1.0, 1.0, rng, true);
    LstmState s0 = lstm_initial_state(2, 4);
    LstmState s1 = lstm_step(p, x, s0);
    REQUIRE(s1.h.shape() == std::vector<int>{2, 4});
    REQUIRE(s1.c.shape() == std::vector<int>{2, 4});
    // From zero state: c = sigmoid(i) * tanh(g), h = sigmoid(o) * tanh(c).
    auto pre = [&](int b, int g, int k) {
        double v = p.b.value()[g * 4 + k];
        for (int i = 0; i < 3; ++i)
            v += x.value()[b * 3 + i] * p.wx.value()[i * 16 + g * 4 + k];
        return v;
    };
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int b = 0; b < 2; ++b)
        for (int k = 0; k < 4; ++k) {
            double c = sig(pre(b, 0, k)) * std::tanh(pre(b, 2, k));
            double h = sig(pre(b, 3, k)) * std::tanh(c);
            CHECK(s1.c.value()[b * 4 + k] == doctest::Approx(c).epsilon(1e-10));
            CHECK(s1.h.value()[b * 4 + k] == doctest::Approx(h).epsilon(1e-10));
        }

    auto roll = [&] {
        LstmState s = lstm_initial_state(2, 4);
        s = lstm_step(p, x, s);
        s = lstm_step(p, x, s);
        return mix_to_scalar(s.h);
    };
    check_grad(roll, x);
    check_grad(roll, p.wx);
    check_grad(roll, p.wh);
    check_grad(roll, p.b);
}

TEST_CASE("bidirectional lstm concatenates a forward and a reverse scan") {
    Rng rng(10);
    BiLstm bi(3, 4, rng);
    Tensor seq = Tensor::uniform({6, 3}, -1.0, 1.0, rng, true);  // B=2, T=3
    Tensor out = bi.forward(seq, 2, 3);
    REQUIRE(out.shape() == std::vector<int>{6, 8});

    // The left half of the output equals a plain forward scan with the same
    // parameters; the right half is the reverse scan.
    Tensor fw_only = bi.fw.forward(seq, 2, 3, false);
    Tensor bw_only = bi.bw.forward(seq, 2, 3, true);
    for (int r = 0; r < 6; ++r)
        for (int k = 0; k < 4; ++k) {
            CHECK(out.value()[r * 8 + k] == fw_only.value()[r * 4 + k]);
            CHECK(out.value()[r * 8 + 4 + k] == bw_only.value()[r * 4 + k]);
        }

    check_grad([&] { return mix_to_scalar(bi.forward(seq, 2, 3)); }, seq, 3e-4);

    // Reversal symmetry: running the reverse scan on a time-flipped sequence
    // equals flipping the forward scan of the original.
    Lstm plain(3, 4, rng);
    Array flipped(seq.numel());
    for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 3; ++t)
            for (int f = 0; f < 3; ++f)
                flipped[(b * 3 + t) * 3 + f] = seq.value()[(b * 3 + (2 - t)) * 3 + f];
    Tensor seq_flip = Tensor::from_array(flipped, {6, 3});
    Tensor rev = plain.forward(seq, 2, 3, true);
    Tensor fwd_on_flip = plain.forward(seq_flip, 2, 3, false);
    for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 3; ++t)
            for (int k = 0; k < 4; ++k)
                CHECK(rev.value()[(b * 3 + t) * 4 + k] ==
                      doctest::Approx(
                          fwd_on_flip.value()[(b * 3 + (2 - t)) * 4 + k])
                          .epsilon(1e-12));
}
