#include "seqclr/cli_commands.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqclr/errors.hpp"
#include "seqclr/manifest.hpp"
#include "seqclr/metrics.hpp"
#include "seqclr/synth_render.hpp"
#include "seqclr/trainer.hpp"

namespace seqclr {

namespace fs = std::filesystem;

namespace {

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw ConfigError(std::string(what) + " not found: " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// FNV-1a over the index sequence; audit tag for drawn subsets.
std::string indices_digest(const std::vector<int>& indices) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(indices.size());
    for (int i : indices) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(i)));
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

bool checkpoint_requested(const std::string& arg) {
    return !arg.empty() && arg != "none";
}

void check_transcriptions(const Manifest& m, const Charset& charset) {
    std::vector<std::string> problems = validate_transcriptions(m, charset);
    if (problems.empty()) return;
    std::string msg = "dataset contains out-of-charset transcriptions:";
    for (std::size_t i = 0; i < problems.size() && i < 5; ++i) msg += "\n  " + problems[i];
    if (problems.size() > 5)
        msg += "\n  ... and " + std::to_string(problems.size() - 5) + " more";
    throw ConfigError(msg);
}

nlohmann::json history_json(const std::vector<std::pair<int, MetricsReport>>& history) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [iteration, report] : history)
        out.push_back({{"iteration", iteration}, {"metrics", report.to_json()}});
    return out;
}

// Shared setup for the two supervised commands.
struct SupervisedPlan {
    ExperimentConfig cfg;
    std::optional<Checkpoint> encoder_ckpt;
    Manifest train_manifest;
    Manifest heldout_manifest;
};

SupervisedPlan plan_supervised(const std::string& config_path, const std::string& ckpt_path,
                               const std::string& decoder, const std::string& data,
                               const std::string& val_data, Phase phase, int iterations,
                               bool seed_set, std::uint64_t seed) {
    SupervisedPlan plan;
    if (checkpoint_requested(ckpt_path)) {
        require_file(ckpt_path, "encoder checkpoint");
        plan.encoder_ckpt = load_checkpoint(ckpt_path);
    }
    if (!config_path.empty()) {
        require_file(config_path, "config file");
        plan.cfg = ExperimentConfig::load_file(config_path);
    } else if (plan.encoder_ckpt) {
        plan.cfg.encoder = encoder_config_from_json(plan.encoder_ckpt->encoder_config);
    }
    plan.cfg.protocol.phase = phase;
    plan.cfg.protocol.freeze_encoder = (phase == Phase::decoder_eval);
    if (!plan.cfg.pipeline_explicit) plan.cfg.pipeline = PipelineSpec::light();
    if (!decoder.empty()) plan.cfg.decoder = decoder_kind_from_name(decoder);
    if (iterations > 0) plan.cfg.protocol.iterations = iterations;
    if (seed_set) plan.cfg.seed = seed;
    plan.cfg.validate();

    require_file(data, "dataset directory");
    Manifest full = load_manifest(data);
    if (!val_data.empty()) {
        require_file(val_data, "held-out dataset directory");
        plan.train_manifest = full;
        plan.heldout_manifest = load_manifest(val_data);
    } else {
        std::tie(plan.train_manifest, plan.heldout_manifest) =
            split_manifest(full, plan.cfg.protocol.val_fraction, plan.cfg.seed);
    }
    return plan;
}

nlohmann::json supervised_run_json(const ExperimentConfig& cfg, const SupervisedResult& res) {
    return {{"config", cfg.to_json()},
            {"losses", res.losses},
            {"metrics", res.report.to_json()},
            {"history", history_json(res.history)},
            {"best_iteration", res.best_iteration},
            {"encoder_digest_before", res.encoder_digest_before},
            {"encoder_digest_after", res.encoder_digest_after}};
}

}  // namespace

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_render(const RenderArgs& args) {
    return run_guarded([&] {
        if (args.out.empty()) throw ConfigError("--out is required");
        Charset charset = args.charset_file.empty()
                              ? Charset::alphanumeric()
                              : Charset([&] {
                                    require_file(args.charset_file, "charset file");
                                    std::string symbols = read_text_file(args.charset_file);
                                    while (!symbols.empty() &&
                                           (symbols.back() == '\n' || symbols.back() == '\r'))
                                        symbols.pop_back();
                                    return symbols;
                                }());
        render_synthetic(args.out, args.num, charset, {args.min_len, args.max_len}, args.seed);
        std::cout << "rendered " << args.num << " images into " << args.out << "\n";
    });
}

int cmd_pretrain(const PretrainArgs& args) {
    return run_guarded([&] {
        if (args.config.empty()) throw ConfigError("--config is required");
        if (args.data.empty()) throw ConfigError("--data is required");
        if (args.out.empty()) throw ConfigError("--out is required");
        require_file(args.config, "config file");
        require_file(args.data, "dataset directory");

        ExperimentConfig cfg = ExperimentConfig::load_file(args.config);
        cfg.protocol.phase = Phase::pretrain;
        cfg.validate();

        std::optional<Checkpoint> resume;
        if (checkpoint_requested(args.resume)) {
            require_file(args.resume, "resume checkpoint");
            resume = load_checkpoint(args.resume);
        }

        Manifest manifest = load_manifest(args.data);
        Dataset dataset(manifest, cfg.make_charset(), cfg.encoder.in_channels);

        PretrainResult res =
            run_pretrain(dataset, cfg, args.out, resume ? &*resume : nullptr);

        nlohmann::json run = {{"config", cfg.to_json()},
                              {"losses", res.losses},
                              {"mean_losses", res.mean_losses},
                              {"chance_level", res.chance_level},
                              {"batch_size", res.batch_size},
                              {"label_reads", res.label_reads}};
        write_json(args.run_json.empty() ? args.out + ".run.json" : args.run_json, run);
        std::cout << "checkpoint written to " << args.out << " (final mean loss "
                  << (res.mean_losses.empty() ? 0.0 : res.mean_losses.back())
                  << ", chance level " << res.chance_level << ")\n";
    });
}

int cmd_decoder_eval(const DecoderEvalArgs& args) {
    return run_guarded([&] {
        if (args.data.empty()) throw ConfigError("--data is required");
        if (args.report.empty()) throw ConfigError("--report is required");

        SupervisedPlan plan =
            plan_supervised(args.config, args.encoder, args.decoder, args.data, args.val_data,
                            Phase::decoder_eval, args.iterations, args.seed_set, args.seed);
        Charset charset = plan.cfg.make_charset();
        check_transcriptions(plan.train_manifest, charset);
        Dataset train(plan.train_manifest, charset, plan.cfg.encoder.in_channels);
        Dataset heldout(plan.heldout_manifest, charset, plan.cfg.encoder.in_channels);

        SupervisedResult res = run_decoder_eval(
            train, heldout, plan.cfg, plan.encoder_ckpt ? &*plan.encoder_ckpt : nullptr,
            args.out);
        std::cout << "encoder digest before/after: " << res.encoder_digest_before << " / "
                  << res.encoder_digest_after << " (frozen)\n";

        nlohmann::json report = res.report.to_json();
        report["best_iteration"] = res.best_iteration;
        report["encoder_digest_before"] = res.encoder_digest_before;
        report["encoder_digest_after"] = res.encoder_digest_after;
        report["pretrained_encoder"] = plan.encoder_ckpt.has_value();
        write_json(args.report, report);
        write_json(args.run_json.empty() ? args.report + ".run.json" : args.run_json,
                   supervised_run_json(plan.cfg, res));
        std::cout << "report written to " << args.report << " (acc " << res.report.acc
                  << ", ed1 " << res.report.ed1 << ")\n";
    });
}

int cmd_finetune(const FinetuneArgs& args) {
    return run_guarded([&] {
        if (args.data.empty()) throw ConfigError("--data is required");
        if (args.report.empty()) throw ConfigError("--report is required");
        if (!(args.fraction > 0.0 && args.fraction <= 1.0))
            throw ConfigError("--fraction must lie in (0, 1]");

        SupervisedPlan plan =
            plan_supervised(args.config, args.ckpt, args.decoder, args.data, args.val_data,
                            Phase::finetune, args.iterations, args.seed_set, args.seed);
        plan.cfg.protocol.label_fraction = args.fraction;
        plan.cfg.validate();

        std::vector<int> subset =
            subset_indices(plan.train_manifest.size(), args.fraction, plan.cfg.seed);
        Manifest train_manifest =
            subset_labels(plan.train_manifest, args.fraction, plan.cfg.seed);

        Charset charset = plan.cfg.make_charset();
        check_transcriptions(train_manifest, charset);
        Dataset train(train_manifest, charset, plan.cfg.encoder.in_channels);
        Dataset heldout(plan.heldout_manifest, charset, plan.cfg.encoder.in_channels);

        SupervisedResult res = run_finetune(
            train, heldout, plan.cfg, plan.encoder_ckpt ? &*plan.encoder_ckpt : nullptr,
            args.out);

        nlohmann::json report = res.report.to_json();
        report["fraction"] = args.fraction;
        report["seed"] = plan.cfg.seed;
        report["subset_size"] = subset.size();
        report["subset_digest"] = indices_digest(subset);
        report["best_iteration"] = res.best_iteration;
        report["pretrained_encoder"] = plan.encoder_ckpt.has_value();
        write_json(args.report, report);

        if (!args.subset_json.empty())
            write_json(args.subset_json, {{"fraction", args.fraction},
                                          {"seed", plan.cfg.seed},
                                          {"indices", subset}});
        nlohmann::json run = supervised_run_json(plan.cfg, res);
        run["fraction"] = args.fraction;
        run["subset_digest"] = indices_digest(subset);
        write_json(args.run_json.empty() ? args.report + ".run.json" : args.run_json, run);
        std::cout << "report written to " << args.report << " (acc " << res.report.acc
                  << ", ed1 " << res.report.ed1 << ")\n";
    });
}

int cmd_eval(const EvalArgs& args) {
    return run_guarded([&] {
        if (args.ckpt.empty()) throw ConfigError("--ckpt is required");
        if (args.data.empty()) throw ConfigError("--data is required");
        if (args.report.empty()) throw ConfigError("--report is required");
        require_file(args.ckpt, "checkpoint");
        require_file(args.data, "dataset directory");

        Checkpoint ckpt = load_checkpoint(args.ckpt);
        Recognizer rec = recognizer_from_checkpoint(ckpt);
        if (!args.decoder.empty() &&
            decoder_kind_from_name(args.decoder) != rec.decoder)
            throw StateError("checkpoint holds a " +
                             std::string(decoder_kind_name(rec.decoder)) +
                             " decoder, not " + args.decoder);

        Manifest manifest = load_manifest(args.data);
        Dataset data(manifest, rec.charset, rec.encoder->config().in_channels);
        std::vector<std::string> predictions, references;
        MetricsReport report = evaluate_dataset(rec, data, 32, &predictions, &references);
        write_json(args.report, report.to_json());
        if (!args.dump_errors.empty())
            write_errors_csv(args.dump_errors, predictions, references);
        std::cout << "report written to " << args.report << " (acc " << report.acc << ", ed1 "
                  << report.ed1 << ")\n";
    });
}

}  // namespace seqclr
