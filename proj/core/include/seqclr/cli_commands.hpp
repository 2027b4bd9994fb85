#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace seqclr {

// Command bodies behind the CLI surface. Each throws ConfigError / StateError
// / DivergenceError on failure; run_guarded maps exceptions to the exit-code
// convention (0 ok, 2 usage/config, 3 state/compatibility, 4 divergence,
// 1 anything else).
int run_guarded(const std::function<void()>& body);

struct RenderArgs {
    std::string out;
    int num = 0;
    std::uint64_t seed = 0;
    int min_len = 1;
    int max_len = 8;
    std::string charset_file;  // empty: digits + letters
};
int cmd_render(const RenderArgs& args);

struct PretrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string resume;    // optional checkpoint to continue from
    std::string run_json;  // default: "<out>.run.json"
};
int cmd_pretrain(const PretrainArgs& args);

struct DecoderEvalArgs {
    std::string encoder;  // checkpoint path, or empty/"none" for a random frozen encoder
    std::string decoder;  // "ctc" | "attention"; empty keeps the config's choice
    std::string config;   // optional config file
    std::string data;
    std::string val_data;  // optional explicit held-out set
    std::string report;
    std::string out;       // optional recognizer checkpoint
    std::string run_json;  // optional; default "<report>.run.json"
    int iterations = 0;    // 0 keeps the config's count
    std::uint64_t seed = 0;
    bool seed_set = false;
};
int cmd_decoder_eval(const DecoderEvalArgs& args);

struct FinetuneArgs {
    std::string ckpt;  // pre-trained encoder checkpoint, or empty/"none" for from-scratch
    std::string decoder;
    std::string config;
    std::string data;
    std::string val_data;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string report;
    std::string out;
    std::string run_json;
    std::string subset_json;  // optional sidecar with the drawn subset indices
    int iterations = 0;
};
int cmd_finetune(const FinetuneArgs& args);

struct EvalArgs {
    std::string ckpt;
    std::string decoder;  // optional; must agree with the checkpoint when given
    std::string data;
    std::string report;
    std::string dump_errors;  // optional per-sample CSV
};
int cmd_eval(const EvalArgs& args);

}  // namespace seqclr
