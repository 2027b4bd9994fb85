#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqclr/attention.hpp"
#include "seqclr/batching.hpp"
#include "seqclr/checkpoint.hpp"
#include "seqclr/ctc.hpp"
#include "seqclr/encoder.hpp"
#include "seqclr/experiment_config.hpp"
#include "seqclr/metrics.hpp"

namespace seqclr {

// Encoder plus one text-decoding head over the configured feature tap. The
// contrastive projection head is never part of this graph.
struct Recognizer {
    std::unique_ptr<Encoder> encoder;
    DecoderKind decoder = DecoderKind::ctc;
    DecoderInput decoder_input = DecoderInput::contextual;
    Charset charset{""};             // set by make_recognizer
    std::optional<Linear> ctc_head;  // feature dim -> charset symbols + blank
    std::optional<AttentionDecoder> att;

    FeatureSeq features(const Tensor& images, bool training) const;
    Tensor loss(const FeatureSeq& f, const std::vector<std::vector<int>>& targets) const;
    std::vector<std::string> predict(const FeatureSeq& f) const;

    NamedParams decoder_params();
    NamedParams all_params();  // encoder + decoder (no projection head)
};

// Fresh recognizer; encoder and decoder draw independent init streams from
// the seed.
Recognizer make_recognizer(const ExperimentConfig& cfg, std::uint64_t seed);

// Recognizer checkpoints carry the decoder architecture and charset in
// `extra`, so evaluation can rebuild the exact model.
Checkpoint recognizer_checkpoint(Recognizer& rec, const ExperimentConfig& cfg,
                                 std::uint64_t iteration);
Recognizer recognizer_from_checkpoint(const Checkpoint& ckpt);

// Greedy predictions and metrics over a whole dataset (no augmentation).
MetricsReport evaluate_dataset(const Recognizer& rec, const Dataset& data, int batch_size = 32,
                               std::vector<std::string>* predictions = nullptr,
                               std::vector<std::string>* references = nullptr);

struct PretrainResult {
    Checkpoint checkpoint;
    std::vector<double> losses;       // per-step sums over all 2M terms
    std::vector<double> mean_losses;  // per-step per-term means
    double chance_level = 0.0;        // log(2M - 1) at the full batch size
    int batch_size = 0;               // effective batch after any auto-reduction
    std::uint64_t label_reads = 0;    // dataset label reads during the run
};

// Self-supervised pre-training: augment each batch twice, encode and project
// both views, map to aligned instance sets, minimize the symmetric NCE loss.
// Labels are never read. When checkpoint_out is non-empty, milestone
// checkpoints land at "<out>.m<k>" and the final one at "<out>"; a non-finite
// loss dumps "<out>.diverged" and throws DivergenceError.
PretrainResult run_pretrain(const Dataset& data, const ExperimentConfig& cfg,
                            const std::filesystem::path& checkpoint_out = {},
                            const Checkpoint* resume = nullptr);

struct SupervisedResult {
    Checkpoint checkpoint;  // recognizer at the best validation point
    MetricsReport report;   // held-out metrics at that point
    int best_iteration = 0;
    std::vector<double> losses;
    std::vector<std::pair<int, MetricsReport>> history;  // (iteration, metrics)
    // Encoder parameter digests around training; equal when frozen.
    std::string encoder_digest_before;
    std::string encoder_digest_after;
};

// Decoder training on a frozen encoder (the representation probe).
// encoder_ckpt == nullptr probes a randomly initialized frozen encoder.
SupervisedResult run_decoder_eval(const Dataset& train, const Dataset& heldout,
                                  const ExperimentConfig& cfg, const Checkpoint* encoder_ckpt,
                                  const std::filesystem::path& checkpoint_out = {});

// End-to-end supervised training: fine-tuning when a pre-trained encoder is
// given, the from-scratch baseline otherwise. Label subsetting happens on the
// manifest before the Dataset is built.
SupervisedResult run_finetune(const Dataset& train, const Dataset& heldout,
                              const ExperimentConfig& cfg, const Checkpoint* encoder_ckpt,
                              const std::filesystem::path& checkpoint_out = {});

}  // namespace seqclr
