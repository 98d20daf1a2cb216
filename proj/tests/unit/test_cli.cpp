#include <doctest.h>

#include <cmath>
#include <iostream>
#include <sstream>

#include "moeprof/cli/commands.hpp"
#include "moeprof/features/audio.hpp"
#include "test_util.hpp"

using moeprof::cli::run;
using moeprof::testing::read_bytes;
using moeprof::testing::TempDir;
using moeprof::testing::write_bytes;
namespace fs = std::filesystem;

namespace {

struct Captured {
    int code;
    std::string out;
    std::string err;
};

Captured run_captured(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    const int code = run(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, out.str(), err.str()};
}

std::size_t count_ext(const fs::path& root, const std::string& ext) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ext) ++n;
    }
    return n;
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

const char* kTinyRun = R"(feature_kind=conv
max_epochs=2
batch_size=4
num_layers=1
num_heads=2
model_dim=8
ff_dim=16
expert_dim=8
head_hidden=8
conv_channels=8
num_frozen_layers=2
)";

void write_run_config(const TempDir& dir, const fs::path& corpus, const std::string& extra = "") {
    write_bytes(dir / "run.txt", std::string(kTinyRun) + "corpus_root=" + corpus.string() + "\nout_dir=" +
                                     (dir / "out").string() + "\n" + extra);
}

// One trained tiny run shared by the evaluate and analyze-phones cases.
struct TrainedRun {
    TempDir dir;
    fs::path corpus = dir / "corpus";
    fs::path ckpt = dir / "out" / "checkpoint.bemx";
    Captured train;

    TrainedRun() {
        REQUIRE(run_captured({"synth", "--out", corpus.string(), "--speakers", "8", "--utts", "2", "--seed", "4"}).code ==
                0);
        write_run_config(dir, corpus);
        train = run_captured({"train", "--config", (dir / "run.txt").string(), "--override", "lr=1e-4"});
    }
};

TrainedRun& trained() {
    static TrainedRun r;
    return r;
}

}  // namespace

TEST_CASE("cli: synth layout, determinism and refusals") {
    TempDir dir;
    const auto a = dir / "a", b = dir / "b";
    CHECK(run_captured({"synth", "--out", a.string(), "--speakers", "4", "--utts", "2", "--seed", "9"}).code == 0);
    CHECK(count_ext(a, ".WAV") == 8);
    CHECK(count_ext(a, ".PHN") == 8);
    CHECK(fs::exists(a / "DOC" / "SPKRINFO.TXT"));
    CHECK(run_captured({"--seed", "9", "synth", "--out", b.string(), "--speakers", "4", "--utts", "2"}).code == 0);
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        CHECK(read_bytes(e.path()) == read_bytes(b / rel));
    }

    CHECK(run_captured({"synth", "--out", (dir / "c").string(), "--speakers", "1"}).code == 1);
    const auto again = run_captured({"synth", "--out", a.string(), "--speakers", "4", "--utts", "2"});
    CHECK(again.code == 1);
    CHECK(again.err.find("not empty") != std::string::npos);
    CHECK(run_captured({"synth", "--out", a.string(), "--speakers", "4", "--utts", "1", "--force"}).code == 0);
    CHECK(count_ext(a, ".WAV") == 4);
    CHECK(run_captured({"synth", "--out", (dir / "d").string(), "--age-cue", "loudness"}).code == 1);
}

TEST_CASE("cli: features") {
    TempDir dir;
    moeprof::features::Waveform w;
    w.samples.resize(16000);
    for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = 0.3f * std::sin(0.07f * static_cast<float>(i));
    moeprof::features::write_wav(dir / "one.wav", w);

    CHECK(run_captured({"features", "--input", (dir / "one.wav").string(), "--kind", "fbank", "--out",
                        (dir / "f.csv").string()})
              .code == 0);
    const auto fb = lines_of(read_bytes(dir / "f.csv"));
    CHECK(fb.front() == "98,240");
    CHECK(fb.size() == 99);
    CHECK(split_csv(fb[1]).size() == 240);

    CHECK(run_captured({"features", "--input", (dir / "one.wav").string(), "--kind", "mfcc", "--out",
                        (dir / "m.csv").string()})
              .code == 0);
    const auto mf = lines_of(read_bytes(dir / "m.csv"));
    CHECK(mf.front() == "98,48");
    CHECK(split_csv(mf[5]).size() == 48);

    CHECK(run_captured({"features", "--input", (dir / "none.wav").string(), "--kind", "mfcc", "--out",
                        (dir / "x.csv").string()})
              .code == 2);
    CHECK(run_captured({"features", "--input", (dir / "one.wav").string(), "--kind", "conv", "--out",
                        (dir / "x.csv").string()})
              .code == 1);
}

TEST_CASE("cli: train config errors") {
    TempDir dir;
    write_run_config(dir, dir / "corpus", "warmup_steps=10\n");
    const auto bad = run_captured({"train", "--config", (dir / "run.txt").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("warmup_steps") != std::string::npos);

    write_run_config(dir, dir / "corpus");
    const auto ov = run_captured({"train", "--config", (dir / "run.txt").string(), "--override", "nonsense=1"});
    CHECK(ov.code == 1);
    CHECK(ov.err.find("nonsense") != std::string::npos);

    CHECK(run_captured({"train", "--config", (dir / "missing.txt").string()}).code == 1);
    // The config parses but the corpus does not exist.
    CHECK(run_captured({"train", "--config", (dir / "run.txt").string()}).code == 2);
    CHECK(run_captured({"bogus-command"}).code == 1);
}

TEST_CASE("cli: train writes its artefacts and honours overrides") {
    auto& r = trained();
    REQUIRE(r.train.code == 0);
    CHECK(r.train.out.find("lr=0.0001") != std::string::npos);
    const auto cfg = read_bytes(r.dir / "out" / "config.txt");
    CHECK(cfg.find("lr=0.0001") != std::string::npos);
    CHECK(fs::exists(r.ckpt));
    const auto log = lines_of(read_bytes(r.dir / "out" / "train_log.csv"));
    CHECK(log.front() == "epoch,split,L_total,L_height,L_age,L_gender,s_height,s_age,s_gender");
    CHECK(log.size() == 5);
}

TEST_CASE("cli: evaluate") {
    auto& r = trained();
    REQUIRE(r.train.code == 0);
    const auto val_csv = r.dir / "val.csv";
    REQUIRE(run_captured({"evaluate", "--checkpoint", r.ckpt.string(), "--corpus", r.corpus.string(), "--split", "val",
                          "--out", val_csv.string()})
                .code == 0);
    const auto ours = lines_of(read_bytes(val_csv));
    const auto ref = lines_of(read_bytes(r.dir / "out" / "val_report.csv"));
    REQUIRE(ours.size() == ref.size());
    for (std::size_t i = 1; i < ours.size(); ++i) {
        const auto a = split_csv(ours[i]), b = split_csv(ref[i]);
        REQUIRE(a.size() == b.size());
        CHECK(a[0] == b[0]);
        for (std::size_t k = 1; k < a.size(); ++k) {
            if (a[k].empty() || a[k] == "nan") {
                CHECK(a[k] == b[k]);
            } else {
                CHECK(std::abs(std::stod(a[k]) - std::stod(b[k])) < 1e-6);
            }
        }
    }

    const auto test = run_captured({"evaluate", "--checkpoint", r.ckpt.string(), "--corpus", r.corpus.string()});
    CHECK(test.code == 0);
    const auto test_csv = lines_of(read_bytes(r.dir / "out" / "eval_test.csv"));
    CHECK(split_csv(test_csv.back())[1] != split_csv(ours.back())[1]);

    CHECK(run_captured({"evaluate", "--checkpoint", (r.dir / "nope.bemx").string(), "--corpus", r.corpus.string()})
              .code == 2);
    auto bytes = read_bytes(r.ckpt);
    bytes[4] = 9;
    write_bytes(r.dir / "future.bemx", bytes);
    CHECK(run_captured({"evaluate", "--checkpoint", (r.dir / "future.bemx").string(), "--corpus", r.corpus.string()})
              .code == 1);
    write_bytes(r.dir / "junk.bemx", "JUNKJUNKJUNK");
    CHECK(run_captured({"evaluate", "--checkpoint", (r.dir / "junk.bemx").string(), "--corpus", r.corpus.string()})
              .code == 2);
    CHECK(run_captured({"evaluate", "--checkpoint", r.ckpt.string(), "--corpus", r.corpus.string(), "--split", "dev"})
              .code == 1);
}

TEST_CASE("cli: analyze-phones on a single-class corpus") {
    auto& r = trained();
    REQUIRE(r.train.code == 0);
    const auto single = r.dir / "single";
    REQUIRE(run_captured({"synth", "--out", single.string(), "--speakers", "8", "--utts", "1", "--single-class"}).code ==
            0);
    const auto csv = r.dir / "phones.csv";
    const auto a = run_captured(
        {"analyze-phones", "--checkpoint", r.ckpt.string(), "--corpus", single.string(), "--out", csv.string()});
    REQUIRE(a.code == 0);
    const auto first = read_bytes(csv);
    const auto rows = lines_of(first);
    REQUIRE(rows.size() == 8);
    const std::vector<std::string> labels = {"Vowels",     "Nasals", "Semivowels", "Affricates",
                                             "Fricatives", "Stops",  "Others"};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto f = split_csv(rows[i + 1]);
        CHECK(f[0] == labels[i]);
        if (labels[i] == "Vowels") continue;
        for (std::size_t k = 1; k < f.size(); ++k) CHECK(std::stod(f[k]) == 0.0);
    }
    REQUIRE(run_captured(
                {"analyze-phones", "--checkpoint", r.ckpt.string(), "--corpus", single.string(), "--out", csv.string()})
                .code == 0);
    CHECK(read_bytes(csv) == first);
}
