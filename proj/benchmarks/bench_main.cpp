// Microbenchmarks for the training hot paths: augmentation sampling, encoder
// forward/backward, the contrastive loss, CTC, and the metric kernel.

#include <benchmark/benchmark.h>

#include <opencv2/core.hpp>

#include "seqclr/augment.hpp"
#include "seqclr/contrastive.hpp"
#include "seqclr/ctc.hpp"
#include "seqclr/encoder.hpp"
#include "seqclr/instance_mapping.hpp"
#include "seqclr/metrics.hpp"
#include "seqclr/rng.hpp"
#include "seqclr/tensor.hpp"

namespace {

using namespace seqclr;

cv::Mat bench_image() {
    cv::Mat img(32, 100, CV_8UC1);
    Rng rng(7);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x)
            img.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

EncoderConfig small_encoder_config() {
    EncoderConfig cfg;
    cfg.toy_channels = {8, 16, 24, 32};
    cfg.lstm_hidden = 48;
    cfg.projection_head = ProjectionHead::mlp_per_frame;
    cfg.projected_dim = 32;
    return cfg;
}

void BM_AugmentPipeline(benchmark::State& state) {
    cv::Mat img = bench_image();
    PipelineSpec spec = PipelineSpec::standard();
    std::uint64_t index = 0;
    for (auto _ : state) {
        AugmentedPair pair = augment_pair(img, spec, 11, index++);
        benchmark::DoNotOptimize(pair.view_a.data);
        benchmark::DoNotOptimize(pair.view_b.data);
    }
}
BENCHMARK(BM_AugmentPipeline);

void BM_EncoderForward(benchmark::State& state) {
    Encoder enc(small_encoder_config(), 3);
    const int batch = static_cast<int>(state.range(0));
    Rng rng(5);
    Tensor images = Tensor::uniform({batch, 1, 32, 100}, 0.0, 1.0, rng);
    NoGradGuard guard;
    for (auto _ : state) {
        FeatureSeq f = enc.representation(images);
        benchmark::DoNotOptimize(f.frames.value().data());
    }
}
BENCHMARK(BM_EncoderForward)->Arg(1)->Arg(8);

void BM_ContrastiveStep(benchmark::State& state) {
    Encoder enc(small_encoder_config(), 3);
    const int batch = static_cast<int>(state.range(0));
    Rng rng(5);
    Tensor a = Tensor::uniform({batch, 1, 32, 100}, 0.0, 1.0, rng);
    Tensor b = Tensor::uniform({batch, 1, 32, 100}, 0.0, 1.0, rng);
    MappingChoice mapping;  // window_to_instance, T' = 5
    for (auto _ : state) {
        FeatureSeq za = enc.project(enc.representation(a, true));
        FeatureSeq zb = enc.project(enc.representation(b, true));
        auto [sa, sb] = assemble_sets(map_instances(za, mapping), map_instances(zb, mapping));
        Tensor loss = contrastive_loss(sa, sb, 0.5);
        backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_ContrastiveStep)->Arg(4)->Arg(8);

void BM_CtcLoss(benchmark::State& state) {
    const int batch = 8, frames = 25, classes = 63;
    Rng rng(9);
    Tensor logits = Tensor::uniform({batch * frames, classes}, -1.0, 1.0, rng, true);
    std::vector<std::vector<int>> targets;
    for (int b = 0; b < batch; ++b) {
        std::vector<int> t;
        for (int i = 0; i < 6; ++i) t.push_back(rng.uniform_int(0, classes - 2));
        targets.push_back(t);
    }
    for (auto _ : state) {
        Tensor loss = ctc_loss(logits, batch, frames, targets, classes - 1);
        backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_CtcLoss);

void BM_EditDistance(benchmark::State& state) {
    Rng rng(13);
    std::vector<std::string> words;
    for (int i = 0; i < 256; ++i) {
        std::string w;
        for (int j = 0; j < 8; ++j)
            w.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
        words.push_back(w);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        int d = edit_distance(words[i % words.size()], words[(i + 1) % words.size()]);
        benchmark::DoNotOptimize(d);
        ++i;
    }
}
BENCHMARK(BM_EditDistance);

}  // namespace

BENCHMARK_MAIN();
