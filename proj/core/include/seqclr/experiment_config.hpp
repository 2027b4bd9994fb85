#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "seqclr/augment.hpp"
#include "seqclr/charset.hpp"
#include "seqclr/encoder.hpp"
#include "seqclr/instance_mapping.hpp"
#include "seqclr/optimizer.hpp"

namespace seqclr {

enum class DecoderKind { ctc, attention };
enum class Phase { pretrain, decoder_eval, finetune };

const char* decoder_kind_name(DecoderKind k);
DecoderKind decoder_kind_from_name(const std::string& name);
const char* phase_name(Phase p);
Phase phase_from_name(const std::string& name);

struct ProtocolSpec {
    Phase phase = Phase::pretrain;
    int iterations = 300;
    int batch_size = 16;
    double label_fraction = 1.0;
    bool freeze_encoder = false;
    double val_fraction = 0.1;  // held-out split when no explicit one exists
    int eval_every = 0;         // 0: evaluate once at the end

    void validate() const;
};

// One experiment coordinate: representation x projection head x instance
// mapping x decoder x augmentation x optimizer schedule, plus seeds and data
// shape. Serializes losslessly to JSON; parsing rejects unknown keys with
// their path.
struct ExperimentConfig {
    EncoderConfig encoder;
    MappingChoice mapping;
    double tau = 0.5;
    PipelineSpec pipeline = PipelineSpec::standard();
    bool pipeline_explicit = false;  // set when JSON supplied a pipeline
    DecoderKind decoder = DecoderKind::ctc;
    DecoderInput decoder_input = DecoderInput::contextual;
    int decoder_state_dim = 256;
    int attention_dim = 256;
    OptimizerSpec optimizer;
    ProtocolSpec protocol;
    std::uint64_t seed = 0;
    std::string charset_symbols;  // empty: printable ASCII

    void validate() const;
    Charset make_charset() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load_file(const std::string& path);
};

nlohmann::json encoder_config_to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json optimizer_spec_to_json(const OptimizerSpec& s);
OptimizerSpec optimizer_spec_from_json(const nlohmann::json& j);
nlohmann::json pipeline_spec_to_json(const PipelineSpec& p);
PipelineSpec pipeline_spec_from_json(const nlohmann::json& j);

}  // namespace seqclr
