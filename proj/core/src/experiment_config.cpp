#include "seqclr/experiment_config.hpp"

#include <fstream>
#include <set>

#include "seqclr/errors.hpp"

namespace seqclr {

namespace {

using nlohmann::json;

// Rejects keys outside the allowed set, naming the offending path.
void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: expected object at " + path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key " + path + "." + it.key());
}

template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

const char* decoder_kind_name(DecoderKind k) {
    return k == DecoderKind::ctc ? "ctc" : "attention";
}

DecoderKind decoder_kind_from_name(const std::string& name) {
    if (name == "ctc") return DecoderKind::ctc;
    if (name == "attention") return DecoderKind::attention;
    throw ConfigError("unknown decoder kind: " + name);
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::pretrain: return "pretrain";
        case Phase::decoder_eval: return "decoder_eval";
        case Phase::finetune: return "finetune";
    }
    throw ConfigError("unknown phase");
}

Phase phase_from_name(const std::string& name) {
    if (name == "pretrain") return Phase::pretrain;
    if (name == "decoder_eval") return Phase::decoder_eval;
    if (name == "finetune") return Phase::finetune;
    throw ConfigError("unknown phase: " + name);
}

void ProtocolSpec::validate() const {
    if (iterations < 1) throw ConfigError("protocol: iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("protocol: batch_size must be >= 1");
    if (!(label_fraction > 0.0 && label_fraction <= 1.0))
        throw ConfigError("protocol: label_fraction must lie in (0, 1]");
    if (phase == Phase::decoder_eval && !freeze_encoder)
        throw ConfigError("protocol: decoder_eval requires freeze_encoder");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("protocol: val_fraction must lie in (0, 1)");
    if (eval_every < 0) throw ConfigError("protocol: eval_every must be >= 0");
}

void ExperimentConfig::validate() const {
    encoder.validate();
    if (tau <= 0.0) throw ConfigError("config: tau must be positive");
    pipeline.validate();
    optimizer.validate();
    protocol.validate();
    if (decoder_state_dim < 1 || attention_dim < 1)
        throw ConfigError("config: decoder dims must be >= 1");
    if (mapping.kind == MappingKind::window_to_instance && mapping.window_instances < 1)
        throw ConfigError("config: window_to_instance requires T' >= 1");
    if (protocol.phase != Phase::pretrain &&
        (decoder_input == DecoderInput::contextual || decoder_input == DecoderInput::concat) &&
        !encoder.sequence_modeling)
        throw ConfigError("config: contextual decoder input requires sequence_modeling");
}

Charset ExperimentConfig::make_charset() const {
    return charset_symbols.empty() ? Charset::printable_ascii() : Charset(charset_symbols);
}

json encoder_config_to_json(const EncoderConfig& c) {
    return {{"backbone", backbone_name(c.backbone)},
            {"in_channels", c.in_channels},
            {"toy_channels", c.toy_channels},
            {"transform", c.transform},
            {"sequence_modeling", c.sequence_modeling},
            {"lstm_hidden", c.lstm_hidden},
            {"representation", representation_name(c.representation)},
            {"projection_head", projection_head_name(c.projection_head)},
            {"projected_dim", c.projected_dim}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    check_keys(j, "encoder",
               {"backbone", "in_channels", "toy_channels", "transform", "sequence_modeling",
                "lstm_hidden", "representation", "projection_head", "projected_dim"});
    EncoderConfig c;
    c.backbone = backbone_from_name(get_or<std::string>(j, "backbone", "toy_cnn"));
    c.in_channels = get_or(j, "in_channels", c.in_channels);
    c.toy_channels = get_or(j, "toy_channels", c.toy_channels);
    c.transform = get_or(j, "transform", c.transform);
    c.sequence_modeling = get_or(j, "sequence_modeling", c.sequence_modeling);
    c.lstm_hidden = get_or(j, "lstm_hidden", c.lstm_hidden);
    c.representation = representation_from_name(
        get_or<std::string>(j, "representation", representation_name(c.representation)));
    c.projection_head = projection_head_from_name(
        get_or<std::string>(j, "projection_head", projection_head_name(c.projection_head)));
    c.projected_dim = get_or(j, "projected_dim", c.projected_dim);
    return c;
}

json optimizer_spec_to_json(const OptimizerSpec& s) {
    return {{"kind", "adadelta"},
            {"decay_rate", s.decay_rate},
            {"eps", s.eps},
            {"grad_clip", s.grad_clip},
            {"weight_decay", s.weight_decay},
            {"lr_init", s.lr_init},
            {"milestones", s.milestones},
            {"milestone_factor", s.milestone_factor}};
}

OptimizerSpec optimizer_spec_from_json(const json& j) {
    check_keys(j, "optimizer",
               {"kind", "decay_rate", "eps", "grad_clip", "weight_decay", "lr_init",
                "milestones", "milestone_factor"});
    if (get_or<std::string>(j, "kind", "adadelta") != "adadelta")
        throw ConfigError("optimizer: only adadelta is available");
    OptimizerSpec s;
    s.decay_rate = get_or(j, "decay_rate", s.decay_rate);
    s.eps = get_or(j, "eps", s.eps);
    s.grad_clip = get_or(j, "grad_clip", s.grad_clip);
    s.weight_decay = get_or(j, "weight_decay", s.weight_decay);
    s.lr_init = get_or(j, "lr_init", s.lr_init);
    s.milestones = get_or(j, "milestones", s.milestones);
    s.milestone_factor = get_or(j, "milestone_factor", s.milestone_factor);
    return s;
}

json pipeline_spec_to_json(const PipelineSpec& p) {
    json ops = json::array();
    for (AugKind k : p.ops) ops.push_back(aug_kind_name(k));
    return {{"ops", ops},
            {"min_ops", p.min_ops},
            {"max_ops", p.max_ops},
            {"resize_back", p.resize_back},
            {"contrast_alpha", {p.contrast_alpha_lo, p.contrast_alpha_hi}},
            {"blur_sigma", {p.blur_sigma_lo, p.blur_sigma_hi}},
            {"sharpen_alpha", {p.sharpen_alpha_lo, p.sharpen_alpha_hi}},
            {"sharpen_lightness", {p.sharpen_lightness_lo, p.sharpen_lightness_hi}},
            {"crop_vertical_hi", p.crop_vertical_hi},
            {"crop_horizontal_hi", p.crop_horizontal_hi},
            {"perspective_scale", {p.perspective_scale_lo, p.perspective_scale_hi}},
            {"piecewise_scale", {p.piecewise_scale_lo, p.piecewise_scale_hi}}};
}

PipelineSpec pipeline_spec_from_json(const json& j) {
    check_keys(j, "pipeline",
               {"preset", "ops", "min_ops", "max_ops", "resize_back", "contrast_alpha",
                "blur_sigma", "sharpen_alpha", "sharpen_lightness", "crop_vertical_hi",
                "crop_horizontal_hi", "perspective_scale", "piecewise_scale"});
    PipelineSpec p;
    const std::string preset = get_or<std::string>(j, "preset", "standard");
    if (preset == "standard")
        p = PipelineSpec::standard();
    else if (preset == "light")
        p = PipelineSpec::light();
    else if (preset == "none")
        p = PipelineSpec::none();
    else
        throw ConfigError("pipeline: unknown preset " + preset);
    if (j.contains("ops")) {
        p.ops.clear();
        for (const json& name : j.at("ops"))
            p.ops.push_back(aug_kind_from_name(name.get<std::string>()));
    }
    p.min_ops = get_or(j, "min_ops", p.min_ops);
    p.max_ops = get_or(j, "max_ops", p.max_ops);
    p.resize_back = get_or(j, "resize_back", p.resize_back);
    auto pair_field = [&](const char* key, double& lo, double& hi) {
        if (!j.contains(key)) return;
        const auto v = j.at(key).get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError(std::string("pipeline: ") + key + " needs [lo, hi]");
        lo = v[0];
        hi = v[1];
    };
    pair_field("contrast_alpha", p.contrast_alpha_lo, p.contrast_alpha_hi);
    pair_field("blur_sigma", p.blur_sigma_lo, p.blur_sigma_hi);
    pair_field("sharpen_alpha", p.sharpen_alpha_lo, p.sharpen_alpha_hi);
    pair_field("sharpen_lightness", p.sharpen_lightness_lo, p.sharpen_lightness_hi);
    p.crop_vertical_hi = get_or(j, "crop_vertical_hi", p.crop_vertical_hi);
    p.crop_horizontal_hi = get_or(j, "crop_horizontal_hi", p.crop_horizontal_hi);
    pair_field("perspective_scale", p.perspective_scale_lo, p.perspective_scale_hi);
    pair_field("piecewise_scale", p.piecewise_scale_lo, p.piecewise_scale_hi);
    return p;
}

json ExperimentConfig::to_json() const {
    return {{"encoder", encoder_config_to_json(encoder)},
            {"mapping",
             {{"kind", mapping_kind_name(mapping.kind)},
              {"window_instances", mapping.window_instances}}},
            {"tau", tau},
            {"pipeline", pipeline_spec_to_json(pipeline)},
            {"decoder", decoder_kind_name(decoder)},
            {"decoder_input", decoder_input_name(decoder_input)},
            {"decoder_state_dim", decoder_state_dim},
            {"attention_dim", attention_dim},
            {"optimizer", optimizer_spec_to_json(optimizer)},
            {"protocol",
             {{"phase", phase_name(protocol.phase)},
              {"iterations", protocol.iterations},
              {"batch_size", protocol.batch_size},
              {"label_fraction", protocol.label_fraction},
              {"freeze_encoder", protocol.freeze_encoder},
              {"val_fraction", protocol.val_fraction},
              {"eval_every", protocol.eval_every}}},
            {"seed", seed},
            {"charset_symbols", charset_symbols}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, "config",
               {"encoder", "mapping", "tau", "pipeline", "decoder", "decoder_input",
                "decoder_state_dim", "attention_dim", "optimizer", "protocol", "seed",
                "charset_symbols"});
    ExperimentConfig c;
    if (j.contains("encoder")) c.encoder = encoder_config_from_json(j.at("encoder"));
    if (j.contains("mapping")) {
        const json& m = j.at("mapping");
        check_keys(m, "mapping", {"kind", "window_instances"});
        c.mapping.kind = mapping_kind_from_name(
            get_or<std::string>(m, "kind", mapping_kind_name(c.mapping.kind)));
        c.mapping.window_instances = get_or(m, "window_instances", c.mapping.window_instances);
    }
    c.tau = get_or(j, "tau", c.tau);
    if (j.contains("protocol")) {
        const json& p = j.at("protocol");
        check_keys(p, "protocol",
                   {"phase", "iterations", "batch_size", "label_fraction", "freeze_encoder",
                    "val_fraction", "eval_every"});
        c.protocol.phase =
            phase_from_name(get_or<std::string>(p, "phase", phase_name(c.protocol.phase)));
        c.protocol.iterations = get_or(p, "iterations", c.protocol.iterations);
        c.protocol.batch_size = get_or(p, "batch_size", c.protocol.batch_size);
        c.protocol.label_fraction = get_or(p, "label_fraction", c.protocol.label_fraction);
        c.protocol.freeze_encoder = get_or(p, "freeze_encoder", c.protocol.freeze_encoder);
        if (c.protocol.phase == Phase::decoder_eval && !p.contains("freeze_encoder"))
            c.protocol.freeze_encoder = true;
        c.protocol.val_fraction = get_or(p, "val_fraction", c.protocol.val_fraction);
        c.protocol.eval_every = get_or(p, "eval_every", c.protocol.eval_every);
    }
    if (j.contains("pipeline")) {
        c.pipeline = pipeline_spec_from_json(j.at("pipeline"));
        c.pipeline_explicit = true;
    } else {
        // Pre-training uses the full inventory; decoder phases the light one.
        c.pipeline = c.protocol.phase == Phase::pretrain ? PipelineSpec::standard()
                                                         : PipelineSpec::light();
    }
    c.decoder =
        decoder_kind_from_name(get_or<std::string>(j, "decoder", decoder_kind_name(c.decoder)));
    c.decoder_input = decoder_input_from_name(
        get_or<std::string>(j, "decoder_input", decoder_input_name(c.decoder_input)));
    c.decoder_state_dim = get_or(j, "decoder_state_dim", c.decoder_state_dim);
    c.attention_dim = get_or(j, "attention_dim", c.attention_dim);
    if (j.contains("optimizer")) c.optimizer = optimizer_spec_from_json(j.at("optimizer"));
    c.seed = get_or(j, "seed", c.seed);
    c.charset_symbols = get_or(j, "charset_symbols", c.charset_symbols);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace seqclr
