#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "seqclr/encoder.hpp"
#include "seqclr/errors.hpp"
#include "seqclr/rng.hpp"

using namespace seqclr;

namespace {

EncoderConfig tiny_toy(Representation rep = Representation::contextual,
                       ProjectionHead head = ProjectionHead::none) {
    EncoderConfig cfg;
    cfg.backbone = Backbone::toy_cnn;
    cfg.toy_channels = {2, 4, 6, 8};
    cfg.sequence_modeling = (rep == Representation::contextual);
    cfg.lstm_hidden = 5;
    cfg.representation = rep;
    cfg.projection_head = head;
    cfg.projected_dim = 4;
    return cfg;
}

}  // namespace

TEST_CASE("toy backbone maps 32xW images to W/4 frames") {
    Encoder enc(tiny_toy(), 1);
    Rng rng(2);
    Tensor x = Tensor::uniform({3, 1, 32, 100}, 0.0, 1.0, rng);
    FeatureSeq v = enc.visual(x);
    CHECK(v.batch == 3);
    CHECK(v.length == 25);
    CHECK(v.dim == 8);
    CHECK(v.frames.shape() == std::vector<int>{75, 8});
    CHECK(enc.frames_for_width(100) == 25);
    CHECK(enc.frames_for_width(64) == 16);

    FeatureSeq h = enc.contextual(v);
    CHECK(h.dim == 10);  // 2 * lstm_hidden
    CHECK(h.frames.shape() == std::vector<int>{75, 10});

    // Height is part of the architecture contract.
    Tensor bad = Tensor::uniform({1, 1, 16, 100}, 0.0, 1.0, rng);
    CHECK_THROWS_AS(enc.visual(bad), ConfigError);
}

TEST_CASE("visual frames have a bounded horizontal receptive field") {
    Encoder enc(tiny_toy(Representation::visual), 3);
    Rng rng(4);
    Tensor x = Tensor::uniform({1, 1, 32, 100}, 0.0, 1.0, rng);

    const int t = 12;
    auto [lo, hi] = toy_cnn_receptive_field(t);
    CHECK(lo == 4 * t - 11);
    CHECK(hi == 4 * t + 15);

    auto frame_values = [&](const Tensor& input) {
        FeatureSeq v = enc.visual(input);
        Array row(v.dim);
        for (int f = 0; f < v.dim; ++f) row[f] = v.frames.value()[t * v.dim + f];
        return row;
    };
    Array base = frame_values(x);

    // Perturbing any column outside [lo, hi) leaves frame t bit-identical.
    for (int col : {lo - 1, hi, 0, 99}) {
        if (col >= lo && col < hi) continue;
        Tensor x2 = Tensor::from_array(x.value(), x.shape());
        for (int row = 0; row < 32; ++row)
            x2.value()[row * 100 + col] = 1.0 - x2.value()[row * 100 + col];
        Array after = frame_values(x2);
        CHECK((after - base).abs().maxCoeff() == 0.0);
    }
    // Perturbing a column inside the span changes the frame.
    Tensor x3 = Tensor::from_array(x.value(), x.shape());
    for (int row = 0; row < 32; ++row)
        x3.value()[row * 100 + 4 * t] = 1.0 - x3.value()[row * 100 + 4 * t];
    CHECK((frame_values(x3) - base).abs().maxCoeff() > 0.0);
}

TEST_CASE("representation tap follows the configuration") {
    Rng rng(5);
    Tensor x = Tensor::uniform({2, 1, 32, 48}, 0.0, 1.0, rng);

    Encoder visual_enc(tiny_toy(Representation::visual), 7);
    FeatureSeq rv = visual_enc.representation(x);
    CHECK(rv.dim == 8);
    CHECK(visual_enc.representation_dim() == 8);

    Encoder ctx_enc(tiny_toy(Representation::contextual), 7);
    FeatureSeq rh = ctx_enc.representation(x);
    CHECK(rh.dim == 10);
    CHECK(ctx_enc.representation_dim() == 10);

    // Identity head: projection returns the representation unchanged.
    FeatureSeq proj = ctx_enc.project(rh);
    CHECK((proj.frames.value() - rh.frames.value()).abs().maxCoeff() == 0.0);

    // Decoder feature taps: V, H, and their concatenation.
    CHECK(ctx_enc.decoder_features(x, DecoderInput::visual).dim == 8);
    CHECK(ctx_enc.decoder_features(x, DecoderInput::contextual).dim == 10);
    FeatureSeq both = ctx_enc.decoder_features(x, DecoderInput::concat);
    CHECK(both.dim == 18);
    CHECK(ctx_enc.decoder_dim(DecoderInput::concat) == 18);
}

TEST_CASE("per-frame projection head commutes with frame permutation") {
    Encoder enc(tiny_toy(Representation::visual, ProjectionHead::mlp_per_frame), 11);
    Rng rng(6);
    const int frames = 6, dim = 8;
    Tensor f1 = Tensor::uniform({frames, dim}, -1.0, 1.0, rng);
    std::vector<int> perm{3, 1, 5, 0, 2, 4};
    Array permuted(frames * dim);
    for (int t = 0; t < frames; ++t)
        for (int d = 0; d < dim; ++d) permuted[t * dim + d] = f1.value()[perm[t] * dim + d];
    Tensor f2 = Tensor::from_array(permuted, {frames, dim});

    FeatureSeq p1 = enc.project({f1, 1, frames, dim});
    FeatureSeq p2 = enc.project({f2, 1, frames, dim});
    CHECK(p1.dim == 4);
    for (int t = 0; t < frames; ++t)
        for (int d = 0; d < p1.dim; ++d)
            CHECK(p2.frames.value()[t * p1.dim + d] ==
                  doctest::Approx(p1.frames.value()[perm[t] * p1.dim + d]).epsilon(1e-12));
}

TEST_CASE("recurrent projection head mixes frames across time") {
    Encoder enc(tiny_toy(Representation::visual, ProjectionHead::bilstm), 11);
    Rng rng(7);
    const int frames = 6, dim = 8;
    Tensor f1 = Tensor::uniform({frames, dim}, -1.0, 1.0, rng);
    std::vector<int> perm{3, 1, 5, 0, 2, 4};
    Array permuted(frames * dim);
    for (int t = 0; t < frames; ++t)
        for (int d = 0; d < dim; ++d) permuted[t * dim + d] = f1.value()[perm[t] * dim + d];
    Tensor f2 = Tensor::from_array(permuted, {frames, dim});

    FeatureSeq p1 = enc.project({f1, 1, frames, dim});
    FeatureSeq p2 = enc.project({f2, 1, frames, dim});
    CHECK(p1.dim == 8);  // 2 * projected_dim
    double max_diff = 0.0;
    for (int t = 0; t < frames; ++t)
        for (int d = 0; d < p1.dim; ++d)
            max_diff = std::max(max_diff,
                                std::abs(p2.frames.value()[t * p1.dim + d] -
                                         p1.frames.value()[perm[t] * p1.dim + d]));
    CHECK(max_diff > 1e-6);
}

TEST_CASE("parameter registries are disjoint, unique, and prefixed") {
    Encoder enc(tiny_toy(Representation::contextual, ProjectionHead::mlp_per_frame), 13);
    NamedParams encoder_side = enc.encoder_params();
    NamedParams head_side = enc.projection_params();
    CHECK_FALSE(encoder_side.empty());
    CHECK_FALSE(head_side.empty());

    std::set<std::string> names;
    for (const auto& [name, p] : encoder_side) {
        CHECK(names.insert(name).second);
        CHECK(name.rfind("head.", 0) != 0);
    }
    for (const auto& [name, p] : head_side) {
        CHECK(names.insert(name).second);
        CHECK(name.rfind("head.", 0) == 0);
    }
    CHECK(enc.all_params().size() == encoder_side.size() + head_side.size());

    // Same seed, same init; different seed, different init.
    Encoder enc2(tiny_toy(Representation::contextual, ProjectionHead::mlp_per_frame), 13);
    Encoder enc3(tiny_toy(Representation::contextual, ProjectionHead::mlp_per_frame), 14);
    CHECK((enc.encoder_params()[0].second.value() -
           enc2.encoder_params()[0].second.value())
              .abs()
              .maxCoeff() == 0.0);
    CHECK((enc.encoder_params()[0].second.value() -
           enc3.encoder_params()[0].second.value())
              .abs()
              .maxCoeff() > 0.0);
}

TEST_CASE("deep backbone produces the documented trace and has running stats") {
    EncoderConfig cfg;
    cfg.backbone = Backbone::resnet29;
    cfg.sequence_modeling = false;
    cfg.representation = Representation::visual;
    Encoder enc(cfg, 17);
    CHECK(enc.visual_dim() == 512);
    CHECK(enc.frames_for_width(100) == 26);
    CHECK(enc.frames_for_width(36) == 10);

    Rng rng(8);
    Tensor x = Tensor::uniform({1, 1, 32, 36}, 0.0, 1.0, rng);
    NoGradGuard guard;
    FeatureSeq v = enc.visual(x, /*training=*/false);
    CHECK(v.length == 10);
    CHECK(v.dim == 512);
    CHECK(v.frames.shape() == std::vector<int>{10, 512});

    CHECK_FALSE(enc.state_buffers().empty());
    Encoder toy(tiny_toy(), 17);
    CHECK(toy.state_buffers().empty());
}

TEST_CASE("configuration validation catches inconsistent taps") {
    EncoderConfig cfg = tiny_toy();
    cfg.sequence_modeling = false;  // contextual tap needs the recurrent stack
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_toy();
    cfg.transform = "tps";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_toy();
    cfg.toy_channels = {2, 4};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK(backbone_from_name("resnet29") == Backbone::resnet29);
    CHECK_THROWS_AS(backbone_from_name("vgg"), ConfigError);
    CHECK(std::string(projection_head_name(ProjectionHead::mlp_per_frame)) == "mlp_per_frame");
    CHECK(decoder_input_from_name("concat") == DecoderInput::concat);
}
