// seqclr: render synthetic word images, pre-train encoders contrastively,
// probe them with frozen-encoder decoder training, fine-tune, and evaluate.

#include <CLI11.hpp>

#include "seqclr/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised sequence-contrastive text recognition toolkit"};
    app.require_subcommand(1);

    seqclr::RenderArgs render;
    CLI::App* render_cmd = app.add_subcommand("render", "Render a synthetic word-image dataset");
    render_cmd->add_option("--out", render.out, "Output directory")->required();
    render_cmd->add_option("--num", render.num, "Number of images")->required();
    render_cmd->add_option("--seed", render.seed, "Render seed");
    render_cmd->add_option("--min-len", render.min_len, "Minimum word length");
    render_cmd->add_option("--max-len", render.max_len, "Maximum word length");
    render_cmd->add_option("--charset", render.charset_file,
                           "File holding the symbols to draw from (default: digits + letters)");

    seqclr::PretrainArgs pretrain;
    CLI::App* pretrain_cmd =
        app.add_subcommand("pretrain", "Contrastive self-supervised pre-training");
    pretrain_cmd->add_option("--config", pretrain.config, "Experiment config JSON")->required();
    pretrain_cmd->add_option("--data", pretrain.data, "Dataset directory (labels ignored)")
        ->required();
    pretrain_cmd->add_option("--out", pretrain.out, "Output checkpoint path")->required();
    pretrain_cmd->add_option("--resume", pretrain.resume, "Checkpoint to continue from");
    pretrain_cmd->add_option("--run-json", pretrain.run_json,
                             "Run log path (default: <out>.run.json)");

    seqclr::DecoderEvalArgs deval;
    CLI::App* deval_cmd = app.add_subcommand(
        "decoder-eval", "Train a text decoder on a frozen encoder and report held-out metrics");
    deval_cmd->add_option("--encoder", deval.encoder,
                          "Pre-trained encoder checkpoint ('none' probes a random encoder)");
    deval_cmd->add_option("--decoder", deval.decoder, "ctc | attention");
    deval_cmd->add_option("--config", deval.config, "Experiment config JSON");
    deval_cmd->add_option("--data", deval.data, "Labeled dataset directory")->required();
    deval_cmd->add_option("--val-data", deval.val_data,
                          "Explicit held-out directory (default: seeded split of --data)");
    deval_cmd->add_option("--report", deval.report, "Metrics report path")->required();
    deval_cmd->add_option("--out", deval.out, "Recognizer checkpoint path");
    deval_cmd->add_option("--run-json", deval.run_json, "Run log path");
    deval_cmd->add_option("--iterations", deval.iterations, "Override training iterations");
    deval_cmd->add_option("--seed", deval.seed, "Override experiment seed");

    seqclr::FinetuneArgs finetune;
    CLI::App* finetune_cmd = app.add_subcommand(
        "finetune", "Supervised training on a label fraction, optionally from a checkpoint");
    finetune_cmd->add_option("--ckpt", finetune.ckpt,
                             "Pre-trained encoder checkpoint ('none' trains from scratch)");
    finetune_cmd->add_option("--decoder", finetune.decoder, "ctc | attention");
    finetune_cmd->add_option("--config", finetune.config, "Experiment config JSON");
    finetune_cmd->add_option("--data", finetune.data, "Labeled dataset directory")->required();
    finetune_cmd->add_option("--val-data", finetune.val_data, "Explicit held-out directory");
    finetune_cmd->add_option("--fraction", finetune.fraction, "Label fraction in (0, 1]");
    finetune_cmd->add_option("--seed", finetune.seed, "Subset + experiment seed");
    finetune_cmd->add_option("--report", finetune.report, "Metrics report path")->required();
    finetune_cmd->add_option("--out", finetune.out, "Recognizer checkpoint path");
    finetune_cmd->add_option("--run-json", finetune.run_json, "Run log path");
    finetune_cmd->add_option("--subset-json", finetune.subset_json,
                             "Sidecar with the drawn subset indices");
    finetune_cmd->add_option("--iterations", finetune.iterations,
                             "Override training iterations");

    seqclr::EvalArgs eval;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Evaluate a recognizer checkpoint on a labeled dataset");
    eval_cmd->add_option("--ckpt", eval.ckpt, "Recognizer checkpoint")->required();
    eval_cmd->add_option("--decoder", eval.decoder, "Expected decoder kind (consistency check)");
    eval_cmd->add_option("--data", eval.data, "Labeled dataset directory")->required();
    eval_cmd->add_option("--report", eval.report, "Metrics report path")->required();
    eval_cmd->add_option("--dump-errors", eval.dump_errors, "Per-sample CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage problems follow the config-error exit convention.
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    deval.seed_set = deval_cmd->count("--seed") > 0;
    finetune.seed_set = finetune_cmd->count("--seed") > 0;

    if (render_cmd->parsed()) return seqclr::cmd_render(render);
    if (pretrain_cmd->parsed()) return seqclr::cmd_pretrain(pretrain);
    if (deval_cmd->parsed()) return seqclr::cmd_decoder_eval(deval);
    if (finetune_cmd->parsed()) return seqclr::cmd_finetune(finetune);
    if (eval_cmd->parsed()) return seqclr::cmd_eval(eval);
    return 2;
}
