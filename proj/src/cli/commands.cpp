#include "moeprof/cli/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "moeprof/cli/run_config.hpp"
#include "moeprof/data/corpus.hpp"
#include "moeprof/data/synth.hpp"
#include "moeprof/errors.hpp"
#include "moeprof/features/audio.hpp"
#include "moeprof/features/dsp.hpp"
#include "moeprof/train/checkpoint.hpp"
#include "moeprof/train/evaluate.hpp"
#include "moeprof/train/trainer.hpp"

namespace moeprof::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

std::vector<data::Utterance> load_split(const fs::path& corpus, data::Split split, std::uint64_t seed) {
    const auto splits = data::load_splits(corpus, seed);
    const auto& records = splits.get(split);
    if (records.empty()) throw DataError("split '" + data::to_string(split) + "' of " + corpus.string() + " is empty");
    return data::load_utterances(records);
}

int cmd_train(const Globals& g, const std::string& config_path, const std::vector<std::string>& overrides) {
    auto rc = load_run_config(config_path);
    rc.apply_overrides(overrides);
    if (g.seed) rc.train.seed = *g.seed;
    rc.validate();

    const auto splits = data::load_splits(rc.corpus_root, rc.train.seed);
    if (splits.train.empty()) throw DataError("no training records under " + rc.corpus_root.string());
    const auto train_utts = data::load_utterances(splits.train);
    const auto val_utts = data::load_utterances(splits.val);
    spdlog::info("training on {} utterances, validating on {}", train_utts.size(), val_utts.size());

    fs::create_directories(rc.out_dir);
    write_text(rc.out_dir / "config.txt", rc.to_text());
    std::ofstream log(rc.out_dir / "train_log.csv", std::ios::trunc);
    if (!log) throw DataError("cannot write " + (rc.out_dir / "train_log.csv").string());
    log << train::epoch_log_csv_header() << '\n';
    const auto res = train::train_model(rc.train, train_utts, val_utts, [&](const train::EpochLog& e) {
        log << train::to_csv_line(e) << '\n' << std::flush;
        spdlog::info("{}", train::to_csv_line(e));
    });

    const auto ckpt_path = rc.out_dir / "checkpoint.bemx";
    train::save_checkpoint(ckpt_path, res.best);
    if (!val_utts.empty()) {
        const auto report = train::evaluate(res.best, val_utts, g.workers);
        write_text(rc.out_dir / "val_report.csv", train::report_csv(report));
    }
    std::cout << fmt::format("lr={} epochs={} steps={} best_epoch={}\ncheckpoint: {}\n", rc.train.effective_lr(),
                             res.log.empty() ? 0 : res.log.back().epoch, res.steps, res.best_epoch,
                             ckpt_path.string());
    return kOk;
}

int cmd_evaluate(const Globals& g, const fs::path& ckpt_path, const fs::path& corpus, const std::string& split,
                 const std::string& out) {
    const auto ckpt = train::load_checkpoint(ckpt_path);
    const auto utts = load_split(corpus, data::split_from_string(split), ckpt.config.seed);
    const auto report = train::evaluate(ckpt, utts, g.workers);
    std::cout << train::report_text(report);
    const fs::path csv = out.empty() ? ckpt_path.parent_path() / ("eval_" + split + ".csv") : fs::path(out);
    write_text(csv, train::report_csv(report));
    return kOk;
}

int cmd_analyze(const Globals& g, const fs::path& ckpt_path, const fs::path& corpus, const std::string& split,
                const std::string& out) {
    const auto ckpt = train::load_checkpoint(ckpt_path);
    const auto utts = load_split(corpus, data::split_from_string(split), ckpt.config.seed);
    const auto model = train::restore_model(ckpt);
    const auto table = train::phoneme_importance(model, ckpt.norm, utts, g.workers);
    std::cout << train::importance_text(table);
    const fs::path csv = out.empty() ? ckpt_path.parent_path() / ("phones_" + split + ".csv") : fs::path(out);
    write_text(csv, train::importance_csv(table));
    return kOk;
}

int cmd_features(const fs::path& input, const std::string& kind, const fs::path& out) {
    const auto k = features::feature_kind_from_string(kind);
    if (k == features::FeatureKind::conv) throw ConfigError("features: kind must be fbank or mfcc");
    const auto seq = features::extract_features(features::read_audio(input), k);
    const auto& f = seq.frames;
    std::string s = fmt::format("{},{}\n", f.rows(), f.cols());
    for (std::size_t r = 0; r < f.rows(); ++r) {
        const auto row = f.row_span(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) s += ',';
            s += fmt::format("{:.9g}", row[c]);
        }
        s += '\n';
    }
    write_text(out, s);
    return kOk;
}

int cmd_synth(const Globals& g, const fs::path& out, std::size_t speakers, std::size_t utts, bool force,
              const std::string& age_cue, bool single_class) {
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!force) throw ConfigError("output directory " + out.string() + " is not empty (use --force)");
        fs::remove_all(out);
    }
    data::SynthOptions opts;
    opts.seed = g.seed.value_or(0);
    opts.n_speakers = speakers;
    opts.utts_per_speaker = utts;
    if (age_cue == "all_voiced") opts.age_cue = data::AgeCue::all_voiced;
    else if (age_cue == "vowels_only") opts.age_cue = data::AgeCue::vowels_only;
    else throw ConfigError("unknown age cue '" + age_cue + "' (all_voiced or vowels_only)");
    opts.single_class = single_class;
    const auto spk = data::synth_corpus(out, opts);
    std::cout << fmt::format("wrote {} speakers x {} utterances to {}\n", spk.size(), utts, out.string());
    return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e)) {
        return kConfigExit;
    }
    if (dynamic_cast<const NumericError*>(&e)) return kNumericExit;
    // DataError, FormatError, LengthError and I/O failures.
    return kDataExit;
}

void init_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("moeprof");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("MOE_PROFILER_LOG")) {
        const std::string v = env;
        if (v == "error") level = spdlog::level::err;
        else if (v == "info") level = spdlog::level::info;
        else if (v == "debug") level = spdlog::level::debug;
    }
    spdlog::set_level(level);
}

int run(int argc, const char* const* argv) {
    init_logging();
    CLI::App app{"Speaker age/height/gender estimation with a bi-encoder mixture of experts"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--workers", g.workers, "Evaluation threads")->check(CLI::PositiveNumber);

    std::string config_path;
    std::vector<std::string> overrides;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
    train_cmd->add_option("--config", config_path, "Run config file (key=value lines)")->required();
    train_cmd->add_option("--override", overrides, "key=value applied after the config file");

    std::string ckpt, corpus, split = "test", out;
    auto* eval_cmd = app.add_subcommand("evaluate", "Per-gender RMSE/MAE on a corpus split");
    eval_cmd->add_option("--checkpoint", ckpt)->required();
    eval_cmd->add_option("--corpus", corpus)->required();
    eval_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
    eval_cmd->add_option("--out", out, "CSV path (default: next to the checkpoint)");

    auto* phones_cmd = app.add_subcommand("analyze-phones", "RMSE change when each phone class is masked");
    phones_cmd->add_option("--checkpoint", ckpt)->required();
    phones_cmd->add_option("--corpus", corpus)->required();
    phones_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
    phones_cmd->add_option("--out", out, "CSV path (default: next to the checkpoint)");

    std::string input, kind;
    auto* feat_cmd = app.add_subcommand("features", "Write fbank or MFCC features as CSV");
    feat_cmd->add_option("--input", input)->required();
    feat_cmd->add_option("--kind", kind)->required()->check(CLI::IsMember({"fbank", "mfcc"}));
    feat_cmd->add_option("--out", out)->required();

    std::size_t speakers = 8, utts = 2;
    bool force = false, single_class = false;
    std::string age_cue = "all_voiced";
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic TIMIT-layout corpus");
    synth_cmd->add_option("--out", out)->required();
    synth_cmd->add_option("--speakers", speakers);
    synth_cmd->add_option("--utts", utts);
    synth_cmd->add_option("--age-cue", age_cue, "all_voiced or vowels_only");
    synth_cmd->add_flag("--single-class", single_class, "One vowel segment per file");
    synth_cmd->add_flag("--force", force, "Replace a non-empty output directory");
    // Allow the global options after the subcommand name too.
    for (auto* sub : {train_cmd, eval_cmd, phones_cmd, feat_cmd, synth_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigExit;
    }

    try {
        if (*train_cmd) return cmd_train(g, config_path, overrides);
        if (*eval_cmd) return cmd_evaluate(g, ckpt, corpus, split, out);
        if (*phones_cmd) return cmd_analyze(g, ckpt, corpus, split, out);
        if (*feat_cmd) return cmd_features(input, kind, out);
        if (*synth_cmd) return cmd_synth(g, out, speakers, utts, force, age_cue, single_class);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::cerr << "error: " << e.what() << '\n';
        return code;
    }
    return kOk;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("moeprof");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace moeprof::cli
