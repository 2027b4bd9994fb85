#include "seqclr/trainer.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>
#include <unordered_map>
#include <utility>

#include "seqclr/augment.hpp"
#include "seqclr/contrastive.hpp"
#include "seqclr/errors.hpp"
#include "seqclr/instance_mapping.hpp"
#include "seqclr/optimizer.hpp"
#include "seqclr/text_image.hpp"

namespace seqclr {

namespace {

// Fixed substream indices so every random decision has its own lane off the
// experiment seed.
constexpr std::uint64_t kEncoderStream = 101;
constexpr std::uint64_t kDecoderStream = 102;
constexpr std::uint64_t kShuffleStream = 201;
constexpr std::uint64_t kAugmentStream = 202;

Tensor raw_batch(const Dataset& data, const std::vector<int>& indices) {
    std::vector<cv::Mat> mats;
    mats.reserve(indices.size());
    for (int idx : indices) mats.push_back(data.image_mat(idx));
    return stack_mats(mats);
}

// One augmented view per image, deterministic in (seed, step, position).
Tensor augmented_batch(const Dataset& data, const std::vector<int>& indices,
                       const PipelineSpec& spec, std::uint64_t seed, std::uint64_t step) {
    const std::uint64_t step_seed = derive_seed(derive_seed(seed, kAugmentStream), step);
    std::vector<cv::Mat> mats;
    mats.reserve(indices.size());
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        Rng rng(derive_seed(step_seed, pos));
        std::vector<BoundOp> ops = sample_pipeline(spec, rng);
        mats.push_back(apply_pipeline(data.image_mat(indices[pos]), ops));
    }
    return stack_mats(mats);
}

std::pair<Tensor, Tensor> augmented_pair_batch(const Dataset& data,
                                               const std::vector<int>& indices,
                                               const PipelineSpec& spec, std::uint64_t seed,
                                               std::uint64_t step) {
    const std::uint64_t step_seed = derive_seed(derive_seed(seed, kAugmentStream), step);
    std::vector<cv::Mat> view_a, view_b;
    view_a.reserve(indices.size());
    view_b.reserve(indices.size());
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        AugmentedPair pair = augment_pair(data.image_mat(indices[pos]), spec, step_seed, pos,
                                          indices[pos]);
        view_a.push_back(pair.view_a);
        view_b.push_back(pair.view_b);
    }
    return {stack_mats(view_a), stack_mats(view_b)};
}

std::vector<std::vector<int>> batch_targets(const Dataset& data, const std::vector<int>& indices) {
    std::vector<std::vector<int>> targets;
    targets.reserve(indices.size());
    for (int idx : indices) targets.push_back(data.encoded_label(idx));
    return targets;
}

void append_buffers(Encoder& enc, std::vector<NamedArray>& arrays) {
    for (auto& [name, buf] : enc.state_buffers()) {
        std::vector<int> shape{static_cast<int>(buf->size())};
        arrays.push_back({"state/" + name, shape, *buf});
    }
}

void restore_buffers(Encoder& enc, const Checkpoint& ckpt) {
    for (auto& [name, buf] : enc.state_buffers()) {
        const NamedArray* stored = ckpt.find("state/" + name);
        if (!stored) continue;
        if (stored->values.size() != buf->size())
            throw StateError("checkpoint buffer size mismatch for " + name);
        *buf = stored->values;
    }
}

void load_optimizer_state(AdaDelta& opt, const Checkpoint& ckpt) {
    std::vector<std::pair<std::string, Array>> state;
    for (const NamedArray& a : ckpt.arrays)
        if (a.name.rfind("opt/", 0) == 0) state.emplace_back(a.name, a.values);
    if (!state.empty()) opt.load_state(state);
}

void append_optimizer_state(const AdaDelta& opt, std::vector<NamedArray>& arrays) {
    for (auto& [name, values] : opt.state()) {
        std::vector<int> shape{static_cast<int>(values.size())};
        arrays.push_back({name, shape, values});
    }
}

void maybe_save(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (!path.empty()) save_checkpoint(path, ckpt);
}

// The architecture fields that must agree between a checkpoint's encoder and
// the configured one; representation/projection choices are pretrain-only.
nlohmann::json architecture_fields(const nlohmann::json& encoder_config) {
    nlohmann::json out;
    for (const char* key :
         {"backbone", "in_channels", "toy_channels", "transform", "sequence_modeling",
          "lstm_hidden"}) {
        if (encoder_config.contains(key)) out[key] = encoder_config.at(key);
    }
    return out;
}

void check_encoder_compatible(const EncoderConfig& configured, const Checkpoint& ckpt) {
    nlohmann::json want = architecture_fields(encoder_config_to_json(configured));
    nlohmann::json have = architecture_fields(ckpt.encoder_config);
    if (want != have)
        throw StateError("checkpoint encoder architecture does not match the configured "
                         "encoder: checkpoint " +
                         have.dump() + " vs configured " + want.dump());
}

}  // namespace

// ---------------------------------------------------------------- recognizer

FeatureSeq Recognizer::features(const Tensor& images, bool training) const {
    return encoder->decoder_features(images, decoder_input, training);
}

Tensor Recognizer::loss(const FeatureSeq& f, const std::vector<std::vector<int>>& targets) const {
    if (decoder == DecoderKind::ctc) {
        Tensor logits = ctc_head->forward(f.frames);
        return ctc_loss(logits, f.batch, f.length, targets, charset.blank_id());
    }
    return att->loss(f, targets);
}

std::vector<std::string> Recognizer::predict(const FeatureSeq& f) const {
    if (decoder == DecoderKind::ctc) {
        Tensor logits = ctc_head->forward(f.frames);
        return ctc_decode_batch(logits, f.batch, f.length, charset);
    }
    return att->decode(f, charset);
}

NamedParams Recognizer::decoder_params() {
    NamedParams out;
    if (ctc_head) ctc_head->register_params("decoder.ctc", out);
    if (att) att->register_params("decoder.att", out);
    return out;
}

NamedParams Recognizer::all_params() {
    NamedParams out = encoder->encoder_params();
    for (auto& p : decoder_params()) out.push_back(std::move(p));
    return out;
}

Recognizer make_recognizer(const ExperimentConfig& cfg, std::uint64_t seed) {
    Recognizer rec;
    rec.encoder = std::make_unique<Encoder>(cfg.encoder, derive_seed(seed, kEncoderStream));
    rec.decoder = cfg.decoder;
    rec.decoder_input = cfg.decoder_input;
    rec.charset = cfg.make_charset();
    if (rec.charset.size() < 1) throw ConfigError("recognizer needs a non-empty charset");
    const int dim = rec.encoder->decoder_dim(cfg.decoder_input);
    Rng rng(derive_seed(seed, kDecoderStream));
    if (cfg.decoder == DecoderKind::ctc) {
        rec.ctc_head.emplace(dim, rec.charset.size() + 1, rng);
    } else {
        rec.att.emplace(dim, cfg.decoder_state_dim, cfg.attention_dim, rec.charset, rng);
    }
    return rec;
}

Checkpoint recognizer_checkpoint(Recognizer& rec, const ExperimentConfig& cfg,
                                 std::uint64_t iteration) {
    Checkpoint ckpt;
    ckpt.encoder_config = encoder_config_to_json(cfg.encoder);
    ckpt.optimizer = optimizer_spec_to_json(cfg.optimizer);
    ckpt.iteration = iteration;
    ckpt.rng_state = std::to_string(cfg.seed);
    ckpt.extra = {{"phase", phase_name(cfg.protocol.phase)},
                  {"config", cfg.to_json()},
                  {"charset", rec.charset.symbols_utf8()}};
    ckpt.arrays = pack_params(rec.all_params());
    append_buffers(*rec.encoder, ckpt.arrays);
    return ckpt;
}

Recognizer recognizer_from_checkpoint(const Checkpoint& ckpt) {
    if (!ckpt.extra.contains("config"))
        throw StateError("checkpoint does not describe a recognizer (no config record)");
    ExperimentConfig cfg = ExperimentConfig::from_json(ckpt.extra.at("config"));
    Recognizer rec = make_recognizer(cfg, cfg.seed);
    unpack_params(ckpt.arrays, rec.all_params());
    restore_buffers(*rec.encoder, ckpt);
    return rec;
}

MetricsReport evaluate_dataset(const Recognizer& rec, const Dataset& data, int batch_size,
                               std::vector<std::string>* predictions,
                               std::vector<std::string>* references) {
    NoGradGuard guard;
    std::vector<std::string> preds, refs;
    preds.reserve(data.size());
    refs.reserve(data.size());
    for (int start = 0; start < data.size(); start += batch_size) {
        std::vector<int> indices;
        for (int i = start; i < std::min(start + batch_size, data.size()); ++i)
            indices.push_back(i);
        FeatureSeq f = rec.features(raw_batch(data, indices), /*training=*/false);
        std::vector<std::string> out = rec.predict(f);
        preds.insert(preds.end(), out.begin(), out.end());
        for (int idx : indices) refs.push_back(data.transcription(idx));
    }
    MetricsReport report = evaluate(preds, refs);
    if (predictions) *predictions = std::move(preds);
    if (references) *references = std::move(refs);
    return report;
}

// ----------------------------------------------------------------- pretrain

PretrainResult run_pretrain(const Dataset& data, const ExperimentConfig& cfg,
                            const std::filesystem::path& checkpoint_out,
                            const Checkpoint* resume) {
    cfg.validate();
    if (cfg.protocol.phase != Phase::pretrain)
        throw ConfigError("run_pretrain requires protocol.phase = pretrain");
    if (data.size() < 1) throw ConfigError("pre-training needs a non-empty dataset");

    const std::uint64_t label_reads_before = data.label_reads();
    int batch_size = cfg.protocol.batch_size;
    // Frame instances multiply the pooled set by T; large batches are reduced
    // to keep the similarity matrix tractable.
    if (cfg.mapping.kind == MappingKind::frame_to_instance && batch_size > 256) {
        std::cerr << "[pretrain] frame_to_instance: reducing batch size " << batch_size
                  << " -> 256\n";
        batch_size = 256;
    }

    Encoder encoder(cfg.encoder, derive_seed(cfg.seed, kEncoderStream));
    NamedParams params = encoder.all_params();
    const int total = cfg.protocol.iterations;
    AdaDelta opt(params, cfg.optimizer, total);

    std::uint64_t start_iteration = 0;
    if (resume) {
        check_encoder_compatible(cfg.encoder, *resume);
        unpack_params(resume->arrays, params);
        restore_buffers(encoder, *resume);
        load_optimizer_state(opt, *resume);
        start_iteration = resume->iteration;
        if (start_iteration >= static_cast<std::uint64_t>(total))
            throw ConfigError("resume checkpoint already at or past the configured iterations");
    }

    const int frames = encoder.frames_for_width(data.width());
    const int per_image = instances_per_image(cfg.mapping, frames);
    const int full_pairs = batch_size * per_image;
    const double chance = chance_level_per_term(std::max(full_pairs, 1));

    PretrainResult result;
    result.batch_size = batch_size;
    result.chance_level = chance;

    auto make_checkpoint = [&](std::uint64_t iteration, double last_loss,
                               double last_mean) {
        Checkpoint ckpt;
        ckpt.encoder_config = encoder_config_to_json(cfg.encoder);
        ckpt.optimizer = optimizer_spec_to_json(cfg.optimizer);
        ckpt.iteration = iteration;
        ckpt.rng_state = std::to_string(cfg.seed);
        ckpt.extra = {{"phase", "pretrain"},
                      {"config", cfg.to_json()},
                      {"final_loss", last_loss},
                      {"final_mean_loss", last_mean},
                      {"chance_level", chance},
                      {"batch_size", batch_size}};
        ckpt.arrays = pack_params(params);
        append_buffers(encoder, ckpt.arrays);
        append_optimizer_state(opt, ckpt.arrays);
        return ckpt;
    };

    // Milestone steps under the same convention as the lr schedule.
    std::vector<std::uint64_t> milestone_steps;
    for (double m : cfg.optimizer.milestones)
        milestone_steps.push_back(static_cast<std::uint64_t>(std::ceil(m * total)));

    BatchStream stream(data.size(), batch_size, derive_seed(cfg.seed, kShuffleStream));
    // Batches before the resume point are drawn and dropped so a resumed run
    // sees the same data order as an uninterrupted one.
    for (std::uint64_t i = 0; i < start_iteration; ++i) stream.next();

    double last_loss = 0.0, last_mean = 0.0;
    for (std::uint64_t step = start_iteration; step < static_cast<std::uint64_t>(total); ++step) {
        std::vector<int> indices = stream.next();
        auto [images_a, images_b] =
            augmented_pair_batch(data, indices, cfg.pipeline, cfg.seed, step);

        FeatureSeq za = encoder.project(encoder.representation(images_a, /*training=*/true));
        FeatureSeq zb = encoder.project(encoder.representation(images_b, /*training=*/true));
        auto [set_a, set_b] = assemble_sets(map_instances(za, cfg.mapping),
                                            map_instances(zb, cfg.mapping));
        Tensor loss = contrastive_loss(set_a, set_b, cfg.tau);

        const double value = loss.item();
        const int terms = 2 * set_a.size();
        if (!std::isfinite(value)) {
            maybe_save(checkpoint_out.empty()
                           ? checkpoint_out
                           : std::filesystem::path(checkpoint_out.string() + ".diverged"),
                       make_checkpoint(step, value, value));
            throw DivergenceError("non-finite contrastive loss at iteration " +
                                  std::to_string(step));
        }
        last_loss = value;
        last_mean = value / terms;
        result.losses.push_back(last_loss);
        result.mean_losses.push_back(last_mean);

        opt.zero_grad();
        backward(loss);
        try {
            opt.step(static_cast<int>(step));
        } catch (const DivergenceError&) {
            maybe_save(checkpoint_out.empty()
                           ? checkpoint_out
                           : std::filesystem::path(checkpoint_out.string() + ".diverged"),
                       make_checkpoint(step, last_loss, last_mean));
            throw;
        }

        for (std::size_t k = 0; k < milestone_steps.size(); ++k) {
            if (step + 1 == milestone_steps[k] && !checkpoint_out.empty()) {
                maybe_save(checkpoint_out.string() + ".m" + std::to_string(k + 1),
                           make_checkpoint(step + 1, last_loss, last_mean));
            }
        }
    }

    result.label_reads = data.label_reads() - label_reads_before;
    Checkpoint final_ckpt = make_checkpoint(static_cast<std::uint64_t>(total), last_loss,
                                            last_mean);
    final_ckpt.extra["label_reads"] = result.label_reads;
    maybe_save(checkpoint_out, final_ckpt);
    result.checkpoint = std::move(final_ckpt);
    return result;
}

// --------------------------------------------------------------- supervised

namespace {

SupervisedResult run_supervised(const Dataset& train, const Dataset& heldout,
                                const ExperimentConfig& cfg, const Checkpoint* encoder_ckpt,
                                bool freeze, const std::filesystem::path& checkpoint_out) {
    cfg.validate();
    if (train.size() < 1) throw ConfigError("supervised training needs a non-empty dataset");
    if (heldout.size() < 1) throw ConfigError("supervised training needs held-out data");

    Recognizer rec = make_recognizer(cfg, cfg.seed);
    if (train.charset().symbols_utf8() != rec.charset.symbols_utf8())
        throw ConfigError("dataset charset differs from the configured charset");

    if (encoder_ckpt) {
        check_encoder_compatible(cfg.encoder, *encoder_ckpt);
        // Only the encoder proper is taken; any projection-head arrays in the
        // checkpoint stay behind.
        unpack_params(encoder_ckpt->arrays, rec.encoder->encoder_params());
        restore_buffers(*rec.encoder, *encoder_ckpt);
    }

    NamedParams encoder_params = rec.encoder->encoder_params();
    SupervisedResult result;
    if (freeze) {
        for (auto& [name, tensor] : encoder_params) tensor.set_requires_grad(false);
    }
    result.encoder_digest_before = params_digest(encoder_params);

    NamedParams trainable = freeze ? rec.decoder_params() : rec.all_params();
    const int total = cfg.protocol.iterations;
    AdaDelta opt(trainable, cfg.optimizer, total);

    const bool augment = !cfg.pipeline.ops.empty();
    const bool cache_features = freeze && !augment;
    const int frames = rec.encoder->frames_for_width(train.width());
    const int feature_dim = rec.encoder->decoder_dim(cfg.decoder_input);
    std::unordered_map<int, Array> feature_cache;

    auto batch_features = [&](const std::vector<int>& indices, std::uint64_t step) {
        if (!cache_features) {
            Tensor images = augment ? augmented_batch(train, indices, cfg.pipeline, cfg.seed,
                                                      step)
                                    : raw_batch(train, indices);
            if (freeze) {
                NoGradGuard guard;
                return rec.features(images, /*training=*/false);
            }
            return rec.features(images, /*training=*/true);
        }
        std::vector<int> missing;
        for (int idx : indices)
            if (!feature_cache.count(idx)) missing.push_back(idx);
        if (!missing.empty()) {
            NoGradGuard guard;
            FeatureSeq f = rec.features(raw_batch(train, missing), /*training=*/false);
            for (std::size_t b = 0; b < missing.size(); ++b)
                feature_cache[missing[b]] =
                    f.frames.value().segment(static_cast<Eigen::Index>(b) * frames * feature_dim,
                                             static_cast<Eigen::Index>(frames) * feature_dim);
        }
        Array block(static_cast<Eigen::Index>(indices.size()) * frames * feature_dim);
        for (std::size_t b = 0; b < indices.size(); ++b)
            block.segment(static_cast<Eigen::Index>(b) * frames * feature_dim,
                          static_cast<Eigen::Index>(frames) * feature_dim) =
                feature_cache[indices[b]];
        Tensor frames_tensor = Tensor::from_array(
            std::move(block), {static_cast<int>(indices.size()) * frames, feature_dim});
        return FeatureSeq{frames_tensor, static_cast<int>(indices.size()), frames, feature_dim};
    };

    auto snapshot = [&](int iteration) {
        return recognizer_checkpoint(rec, cfg, static_cast<std::uint64_t>(iteration));
    };

    auto evaluate_now = [&](int iteration) {
        MetricsReport report = evaluate_dataset(rec, heldout, 32);
        result.history.emplace_back(iteration, report);
        if (result.history.size() == 1 || report.acc > result.report.acc) {
            result.report = report;
            result.best_iteration = iteration;
            result.checkpoint = snapshot(iteration);
        }
    };

    BatchStream stream(train.size(), cfg.protocol.batch_size,
                       derive_seed(cfg.seed, kShuffleStream));
    for (int step = 0; step < total; ++step) {
        std::vector<int> indices = stream.next();
        FeatureSeq f = batch_features(indices, static_cast<std::uint64_t>(step));
        Tensor loss = rec.loss(f, batch_targets(train, indices));

        const double value = loss.item();
        if (!std::isfinite(value)) {
            maybe_save(checkpoint_out.empty()
                           ? checkpoint_out
                           : std::filesystem::path(checkpoint_out.string() + ".diverged"),
                       snapshot(step));
            throw DivergenceError("non-finite decoder loss at iteration " +
                                  std::to_string(step));
        }
        result.losses.push_back(value);

        opt.zero_grad();
        backward(loss);
        try {
            opt.step(step);
        } catch (const DivergenceError&) {
            maybe_save(checkpoint_out.empty()
                           ? checkpoint_out
                           : std::filesystem::path(checkpoint_out.string() + ".diverged"),
                       snapshot(step));
            throw;
        }

        if (cfg.protocol.eval_every > 0 && (step + 1) % cfg.protocol.eval_every == 0 &&
            step + 1 < total) {
            evaluate_now(step + 1);
        }
    }
    evaluate_now(total);

    result.encoder_digest_after = params_digest(encoder_params);
    if (freeze && result.encoder_digest_before != result.encoder_digest_after)
        throw StateError("frozen encoder parameters changed during decoder training");

    maybe_save(checkpoint_out, result.checkpoint);
    return result;
}

}  // namespace

SupervisedResult run_decoder_eval(const Dataset& train, const Dataset& heldout,
                                  const ExperimentConfig& cfg, const Checkpoint* encoder_ckpt,
                                  const std::filesystem::path& checkpoint_out) {
    if (cfg.protocol.phase != Phase::decoder_eval)
        throw ConfigError("run_decoder_eval requires protocol.phase = decoder_eval");
    if (!cfg.protocol.freeze_encoder)
        throw ConfigError("decoder_eval requires freeze_encoder = true");
    return run_supervised(train, heldout, cfg, encoder_ckpt, /*freeze=*/true, checkpoint_out);
}

SupervisedResult run_finetune(const Dataset& train, const Dataset& heldout,
                              const ExperimentConfig& cfg, const Checkpoint* encoder_ckpt,
                              const std::filesystem::path& checkpoint_out) {
    if (cfg.protocol.phase != Phase::finetune)
        throw ConfigError("run_finetune requires protocol.phase = finetune");
    return run_supervised(train, heldout, cfg, encoder_ckpt,
                          /*freeze=*/cfg.protocol.freeze_encoder, checkpoint_out);
}

}  // namespace seqclr
