#include <doctest.h>

#include <cmath>

#include "moeprof/data/synth.hpp"
#include "moeprof/errors.hpp"
#include "moeprof/train/checkpoint.hpp"
#include "moeprof/train/evaluate.hpp"
#include "moeprof/train/trainer.hpp"
#include "test_util.hpp"

using namespace moeprof;
using namespace moeprof::train;
using moeprof::testing::TempDir;

namespace {

TrainConfig tiny_train_config() {
    TrainConfig c;
    c.feature_kind = features::FeatureKind::conv;
    c.lr = 1e-3;
    c.max_epochs = 3;
    c.batch_size = 4;
    c.seed = 3;
    c.num_layers = 1;
    c.num_heads = 2;
    c.model_dim = 8;
    c.ff_dim = 16;
    c.expert_dim = 8;
    c.head_hidden = 8;
    c.conv_channels = 8;
    c.num_frozen_layers = 2;
    c.dropout = 0.1;
    return c;
}

std::vector<data::Utterance> synth_utterances(const TempDir& dir, std::size_t speakers, std::size_t utts,
                                              data::AgeCue cue = data::AgeCue::all_voiced, bool single_class = false) {
    data::SynthOptions o;
    o.seed = 21;
    o.n_speakers = speakers;
    o.utts_per_speaker = utts;
    o.min_duration_s = 0.5;
    o.max_duration_s = 0.7;
    o.age_cue = cue;
    o.single_class = single_class;
    data::synth_corpus(dir.path(), o);
    return data::load_utterances(data::scan_corpus(dir.path()));
}

Prediction pred(double age, double true_age, double h, double true_h, int gender, double p) {
    return {age, h, p, true_age, true_h, gender};
}

}  // namespace

TEST_CASE("rmse and mae") {
    const std::vector<double> p{2, 4}, t{0, 0};
    CHECK(rmse(p, t) == doctest::Approx(std::sqrt(10.0)));
    CHECK(mae(p, t) == doctest::Approx(3.0));
    CHECK(rmse(p, p) == 0.0);
    CHECK(mae(p, p) == 0.0);
    CHECK(rmse(p, t) >= mae(p, t));
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ContractError);
    CHECK_THROWS_AS(mae(std::vector<double>{1}, std::vector<double>{1, 2}), ContractError);
}

TEST_CASE("report grouping and accuracy") {
    std::vector<Prediction> perfect = {pred(30, 30, 180, 180, 0, 0.1), pred(50, 50, 160, 160, 1, 0.9)};
    const auto r = summarize(perfect);
    CHECK(r.male.age_rmse == 0.0);
    CHECK(r.female.height_mae == 0.0);
    CHECK(r.gender_accuracy == 1.0);

    std::vector<Prediction> mixed = {pred(30, 35, 180, 170, 0, 0.4), pred(40, 30, 170, 171, 0, 0.6),
                                     pred(50, 52, 160, 150, 1, 0.5), pred(60, 45, 165, 166, 1, 0.2)};
    const auto m = summarize(mixed);
    CHECK(m.male.count == 2);
    CHECK(m.female.count == 2);
    CHECK(m.gender_accuracy == 0.5);
    CHECK(m.male.age_rmse >= m.male.age_mae);
    std::vector<double> ap, at;
    for (const auto& x : mixed) {
        ap.push_back(x.age_years);
        at.push_back(x.true_age);
    }
    const double pooled = rmse(ap, at);
    CHECK(pooled >= std::min(m.male.age_rmse, m.female.age_rmse));
    CHECK(pooled <= std::max(m.male.age_rmse, m.female.age_rmse));
}

TEST_CASE("constant-mean baseline equals the label std") {
    std::vector<data::Utterance> utts(5);
    const int ages[] = {21, 34, 40, 58, 76};
    double mean = 0;
    for (int i = 0; i < 5; ++i) {
        utts[i].record.age_years = ages[i];
        utts[i].record.height_cm = 170;
        mean += ages[i] / 5.0;
    }
    double var = 0;
    for (int a : ages) var += (a - mean) * (a - mean) / 5.0;
    const auto norm = compute_norm_stats(utts);
    CHECK(norm.age_mean == doctest::Approx(mean));
    CHECK(norm.height_std == 1.0);
    const auto r = constant_mean_baseline(norm, utts);
    CHECK(std::abs(r.male.age_rmse - std::sqrt(var)) < 1e-6);
    CHECK(r.female.count == 0);
    CHECK(std::isnan(r.female.age_rmse));
}

TEST_CASE("config key/value round trip and errors") {
    auto c = tiny_train_config();
    c.gate_detach = true;
    const auto back = TrainConfig::from_kv(parse_kv_text(to_text(c.to_kv())));
    CHECK(back.to_kv() == c.to_kv());
    CHECK_THROWS_AS(c.set("learning_rate", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("batch_size", "-3"), ConfigError);
    CHECK_THROWS_AS(c.set("mixup_enabled", "maybe"), ConfigError);
    CHECK_THROWS_AS(parse_kv_text("no equals sign"), ConfigError);
    TrainConfig d;
    CHECK(d.effective_lr() == 1e-6);
    d.feature_kind = features::FeatureKind::fbank;
    CHECK(d.effective_lr() == 1e-5);
}

TEST_CASE("checkpoint serialization") {
    model::SpeakerModel<float> m(tiny_train_config().model_config(), 5);
    const losses::NormStats norm{41.5, 12.25, 172.0, 9.5};
    const auto ckpt = make_checkpoint(tiny_train_config(), norm, m.params());
    const auto bytes = serialize_checkpoint(ckpt);
    CHECK(bytes.substr(0, 4) == "BEMX");
    const auto back = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    REQUIRE(back.tensors.size() == ckpt.tensors.size());
    for (std::size_t i = 0; i < back.tensors.size(); ++i) {
        CHECK(back.tensors[i].first == ckpt.tensors[i].first);
        CHECK(back.tensors[i].second == ckpt.tensors[i].second);
    }
    CHECK(back.norm.height_std == 9.5);

    std::string wrong_version = bytes;
    wrong_version[4] = 7;
    CHECK_THROWS_AS(deserialize_checkpoint(wrong_version), ConfigError);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint(wrong_magic), FormatError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bemx"), DataError);

    auto mismatched = back;
    mismatched.config.model_dim = 16;
    CHECK_THROWS_AS(restore_model(mismatched), ConfigError);

    const auto restored = restore_model(back);
    for (const auto& [name, v] : restored.params().entries()) CHECK(v.value() == m.params().get(name).value());
}

TEST_CASE("training is deterministic and lr = 0 leaves weights alone") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 4, 2);
    const std::vector<data::Utterance> train(utts.begin(), utts.begin() + 6);
    const std::vector<data::Utterance> val(utts.begin() + 6, utts.end());
    const auto cfg = tiny_train_config();
    const auto a = train_model(cfg, train, val);
    const auto b = train_model(cfg, train, val);
    REQUIRE(a.log.size() == b.log.size());
    CHECK(a.log.size() == 6);
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(to_csv_line(a.log[i]) == to_csv_line(b.log[i]));
    CHECK(serialize_checkpoint(a.best) == serialize_checkpoint(b.best));

    auto frozen = cfg;
    frozen.lr = 0.0;
    const auto z = train_model(frozen, train, val);
    model::SpeakerModel<float> init(frozen.model_config(), frozen.seed);
    for (const auto& [name, t] : z.best.tensors) CHECK(t == init.params().get(name).value());
}

TEST_CASE("best checkpoint and early stopping") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 4, 2);
    const std::vector<data::Utterance> train(utts.begin(), utts.begin() + 6);
    const std::vector<data::Utterance> val(utts.begin() + 6, utts.end());
    auto cfg = tiny_train_config();
    cfg.max_epochs = 30;
    cfg.patience = 3;
    cfg.lr = 3e-2;
    const auto r = train_model(cfg, train, val);
    double best = 1e300;
    std::size_t best_epoch = 0;
    for (const auto& e : r.log) {
        if (e.split == "val" && e.total < best) {
            best = e.total;
            best_epoch = e.epoch;
        }
    }
    CHECK(r.best_epoch == best_epoch);
    CHECK(r.best_selection_loss == doctest::Approx(best));
    if (r.early_stopped) CHECK(r.log.back().epoch == best_epoch + cfg.patience);
    // The stored weights reproduce the logged best val loss.
    const auto m = restore_model(r.best);
    CHECK(evaluate_losses(m, r.best.norm, val).total == doctest::Approx(best).epsilon(1e-5));
}

TEST_CASE("training preconditions and numeric aborts") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 4, 1);
    std::vector<data::Utterance> males;
    for (const auto& u : utts) {
        if (u.record.gender == 0) males.push_back(u);
    }
    CHECK_THROWS_AS(train_model(tiny_train_config(), males, {}), DataError);

    auto cfg = tiny_train_config();
    cfg.lr = 1e36;
    cfg.max_epochs = 20;
    try {
        train_model(cfg, utts, {});
        FAIL("expected a numeric abort");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
}

TEST_CASE("train loss falls on a 32-utterance corpus") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 16, 2);
    auto cfg = tiny_train_config();
    cfg.max_epochs = 200;
    cfg.patience = 0;
    cfg.batch_size = 16;
    const auto r = train_model(cfg, utts, {});
    REQUIRE(r.log.size() == 200);
    double tail = 0;
    for (std::size_t i = 190; i < 200; ++i) tail += r.log[i].total / 10.0;
    CHECK(tail < r.log.front().total);
}

TEST_CASE("evaluation is independent of the worker count") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 6, 1);
    model::SpeakerModel<float> m(tiny_train_config().model_config(), 2);
    const losses::NormStats norm{45, 15, 170, 10};
    CHECK(report_csv(evaluate(m, norm, utts, 1)) == report_csv(evaluate(m, norm, utts, 3)));
}

TEST_CASE("phone importance table") {
    TempDir dir;
    const auto utts = synth_utterances(dir, 4, 1, data::AgeCue::all_voiced, true);
    model::SpeakerModel<float> m(tiny_train_config().model_config(), 2);
    const losses::NormStats norm{45, 15, 170, 10};
    const auto t = phoneme_importance(m, norm, utts, 1);
    REQUIRE(t.rows.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(t.rows[i].cls == data::kPhoneClassTableOrder[i]);
    for (const auto& r : t.rows) {
        if (r.cls == data::PhoneClass::Vowels) continue;
        CHECK(r.height_male == 0.0);
        CHECK(r.height_female == 0.0);
        CHECK(r.age_male == 0.0);
        CHECK(r.age_female == 0.0);
    }
    CHECK(importance_csv(t) == importance_csv(phoneme_importance(m, norm, utts, 2)));
    CHECK(importance_csv(t).rfind("mask,height_rmse_male", 0) == 0);
}
