#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "seqclr/cli_commands.hpp"
#include "seqclr/experiment_config.hpp"

using namespace seqclr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path work_root() {
    static fs::path root = [] {
        fs::path dir = fs::temp_directory_path() / "seqclr_cli_tests";
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }();
    return root;
}

std::string write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
    return path.string();
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// 20 rendered "abc"-alphabet word images, shared by the command tests.
std::string corpus_dir() {
    static std::string dir = [] {
        fs::path out = work_root() / "corpus";
        RenderArgs args;
        args.out = out.string();
        args.num = 20;
        args.seed = 3;
        args.min_len = 1;
        args.max_len = 3;
        args.charset_file = write_text(work_root() / "charset.txt", "abc\n");
        REQUIRE(cmd_render(args) == 0);
        return out.string();
    }();
    return dir;
}

std::string pretrain_config_path() {
    static std::string path = write_text(work_root() / "pretrain.json", R"({
        "encoder": {"toy_channels": [2, 4, 6, 8], "lstm_hidden": 4,
                    "projection_head": "mlp_per_frame", "projected_dim": 6},
        "mapping": {"kind": "window_to_instance", "window_instances": 2},
        "protocol": {"phase": "pretrain", "iterations": 3, "batch_size": 3},
        "seed": 11,
        "charset_symbols": "abc"
    })");
    return path;
}

std::string supervised_config_path() {
    static std::string path = write_text(work_root() / "supervised.json", R"({
        "encoder": {"toy_channels": [2, 4, 6, 8], "lstm_hidden": 4},
        "decoder": "ctc",
        "decoder_state_dim": 8,
        "attention_dim": 8,
        "pipeline": {"preset": "none"},
        "protocol": {"iterations": 3, "batch_size": 4},
        "seed": 11,
        "charset_symbols": "abc"
    })");
    return path;
}

// Runs pre-training once and caches the checkpoint path.
std::string pretrained_ckpt() {
    static std::string path = [] {
        PretrainArgs args;
        args.config = pretrain_config_path();
        args.data = corpus_dir();
        args.out = (work_root() / "pre" / "enc.ckpt").string();
        REQUIRE(cmd_pretrain(args) == 0);
        return args.out;
    }();
    return path;
}

}  // namespace

TEST_CASE("render is deterministic and validates its arguments") {
    corpus_dir();
    CHECK(fs::exists(fs::path(corpus_dir()) / "labels.tsv"));

    RenderArgs again;
    again.out = (work_root() / "corpus2").string();
    again.num = 20;
    again.seed = 3;
    again.min_len = 1;
    again.max_len = 3;
    again.charset_file = (work_root() / "charset.txt").string();
    REQUIRE(cmd_render(again) == 0);
    CHECK(file_bytes(fs::path(corpus_dir()) / "labels.tsv") ==
          file_bytes(fs::path(again.out) / "labels.tsv"));

    RenderArgs bad = again;
    bad.out = (work_root() / "corpus3").string();
    bad.num = 0;
    CHECK(cmd_render(bad) == 2);

    bad = again;
    bad.charset_file = (work_root() / "missing_charset.txt").string();
    CHECK(cmd_render(bad) == 2);
}

TEST_CASE("pretrain writes a checkpoint and a faithful run record") {
    std::string ckpt = pretrained_ckpt();
    CHECK(fs::exists(ckpt));

    json run = read_json(ckpt + ".run.json");
    CHECK(run["label_reads"] == 0);
    CHECK(run["losses"].size() == 3);
    CHECK(run["batch_size"] == 3);
    CHECK(run["chance_level"].get<double>() > 0.0);

    // The recorded config reloads to the identical configuration.
    ExperimentConfig cfg = ExperimentConfig::from_json(run["config"]);
    CHECK(cfg.to_json() == run["config"]);
    CHECK(cfg.seed == 11);

    PretrainArgs bad;
    bad.config = pretrain_config_path();
    bad.data = (work_root() / "no_such_dir").string();
    bad.out = (work_root() / "x.ckpt").string();
    CHECK(cmd_pretrain(bad) == 2);

    bad.data = corpus_dir();
    bad.config = (work_root() / "no_such_config.json").string();
    CHECK(cmd_pretrain(bad) == 2);

    bad.config = pretrain_config_path();
    bad.resume = (work_root() / "no_such_resume.ckpt").string();
    CHECK(cmd_pretrain(bad) == 2);

    std::string broken_cfg = write_text(work_root() / "broken.json",
                                        R"({"tau": 0.5, "mystery_knob": 1})");
    bad = {};
    bad.config = broken_cfg;
    bad.data = corpus_dir();
    bad.out = (work_root() / "y.ckpt").string();
    CHECK(cmd_pretrain(bad) == 2);
}

TEST_CASE("decoder-eval freezes the encoder and reports its provenance") {
    DecoderEvalArgs args;
    args.encoder = pretrained_ckpt();
    args.config = supervised_config_path();
    args.data = corpus_dir();
    args.report = (work_root() / "deval" / "report.json").string();
    REQUIRE(cmd_decoder_eval(args) == 0);

    json report = read_json(args.report);
    CHECK(report["encoder_digest_before"] == report["encoder_digest_after"]);
    CHECK(report["pretrained_encoder"] == true);
    CHECK(report["n_samples"].get<int>() > 0);
    CHECK(fs::exists(args.report + ".run.json"));

    // Random frozen baseline: no checkpoint involved.
    DecoderEvalArgs random_args = args;
    random_args.encoder = "none";
    random_args.report = (work_root() / "deval" / "random.json").string();
    REQUIRE(cmd_decoder_eval(random_args) == 0);
    CHECK(read_json(random_args.report)["pretrained_encoder"] == false);

    DecoderEvalArgs bad = args;
    bad.report = "";
    CHECK(cmd_decoder_eval(bad) == 2);

    // A damaged checkpoint is a state error, not a usage error.
    fs::path truncated = work_root() / "truncated.ckpt";
    std::string bytes = file_bytes(pretrained_ckpt());
    std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    bad = args;
    bad.encoder = truncated.string();
    bad.report = (work_root() / "deval" / "bad.json").string();
    CHECK(cmd_decoder_eval(bad) == 3);
}

TEST_CASE("finetune records the label subset it drew") {
    FinetuneArgs args;
    args.ckpt = pretrained_ckpt();
    args.config = supervised_config_path();
    args.data = corpus_dir();
    args.fraction = 0.5;
    args.report = (work_root() / "ft" / "report.json").string();
    args.out = (work_root() / "ft" / "model.ckpt").string();
    args.subset_json = (work_root() / "ft" / "subset.json").string();
    REQUIRE(cmd_finetune(args) == 0);

    json report = read_json(args.report);
    CHECK(report["fraction"] == 0.5);
    CHECK(report["seed"] == 11);
    CHECK(report["pretrained_encoder"] == true);
    CHECK(report["subset_digest"].get<std::string>().size() == 16);

    json subset = read_json(args.subset_json);
    CHECK(subset["indices"].size() == report["subset_size"].get<std::size_t>());
    // Half of the 18-image training split, rounded up.
    CHECK(report["subset_size"] == 9);
    CHECK(fs::exists(args.out));

    FinetuneArgs bad = args;
    bad.fraction = 0.0;
    CHECK(cmd_finetune(bad) == 2);
    bad.fraction = 1.5;
    CHECK(cmd_finetune(bad) == 2);
}

TEST_CASE("eval rebuilds from the recognizer checkpoint alone") {
    std::string model = (work_root() / "ft" / "model.ckpt").string();
    REQUIRE(fs::exists(model));  // produced by the finetune test above

    EvalArgs args;
    args.ckpt = model;
    args.data = corpus_dir();
    args.report = (work_root() / "eval" / "report.json").string();
    args.dump_errors = (work_root() / "eval" / "errors.csv").string();
    REQUIRE(cmd_eval(args) == 0);
    json report = read_json(args.report);
    CHECK(report["n_samples"] == 20);
    CHECK(fs::exists(args.dump_errors));
    std::string csv = file_bytes(args.dump_errors);
    CHECK(csv.rfind("reference,prediction,edit_distance", 0) == 0);

    // The stored decoder kind is binding.
    EvalArgs mismatched = args;
    mismatched.decoder = "attention";
    CHECK(cmd_eval(mismatched) == 3);

    // An encoder-only checkpoint cannot drive evaluation.
    EvalArgs encoder_only = args;
    encoder_only.ckpt = pretrained_ckpt();
    CHECK(cmd_eval(encoder_only) == 3);

    EvalArgs missing = args;
    missing.ckpt = (work_root() / "absent.ckpt").string();
    CHECK(cmd_eval(missing) == 2);
}
