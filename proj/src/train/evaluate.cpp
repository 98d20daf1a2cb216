#include "moeprof/train/evaluate.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "moeprof/errors.hpp"
#include "moeprof/numeric/autodiff.hpp"

namespace moeprof::train {

namespace {

void check_pair(std::span<const double> p, std::span<const double> t) {
    if (p.empty()) throw ContractError("metric over an empty set");
    if (p.size() != t.size()) throw ContractError("metric inputs differ in length");
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GenderMetrics metrics_for(const std::vector<Prediction>& preds, int gender) {
    std::vector<double> hp, ht, ap, at;
    for (const auto& p : preds) {
        if (p.true_gender != gender) continue;
        hp.push_back(p.height_cm);
        ht.push_back(p.true_height);
        ap.push_back(p.age_years);
        at.push_back(p.true_age);
    }
    GenderMetrics g;
    g.count = hp.size();
    if (g.count == 0) {
        g.height_rmse = g.height_mae = g.age_rmse = g.age_mae = kNaN;
        return g;
    }
    g.height_rmse = rmse(hp, ht);
    g.height_mae = mae(hp, ht);
    g.age_rmse = rmse(ap, at);
    g.age_mae = mae(ap, at);
    return g;
}

double percent_change(double masked, double base) {
    if (base == 0.0) return masked == 0.0 ? 0.0 : kNaN;
    return 100.0 * (masked - base) / base;
}

}  // namespace

double rmse(std::span<const double> preds, std::span<const double> targets) {
    check_pair(preds, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

double mae(std::span<const double> preds, std::span<const double> targets) {
    check_pair(preds, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += std::abs(preds[i] - targets[i]);
    return acc / static_cast<double>(preds.size());
}

std::vector<Prediction> predict(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                                const std::vector<data::Utterance>& utts, std::size_t workers,
                                std::optional<data::PhoneClass> mask) {
    std::vector<Prediction> out(utts.size());
    const auto kind = m.config().feature_kind;
    auto run_one = [&](std::size_t i) {
        const auto& u = utts[i];
        const auto wave = mask ? data::mask_phone_class(u.waveform, u.phones, *mask) : u.waveform;
        const auto res = m.forward(model::SpeakerModel<float>::make_input(wave, kind));
        Prediction& p = out[i];
        p.age_years = norm.age_from_z(res.age_z.item());
        p.height_cm = norm.height_from_z(res.height_z.item());
        p.gender_p = res.gender_p.item();
        p.true_age = u.record.age_years;
        p.true_height = u.record.height_cm;
        p.true_gender = u.record.gender;
    };

    workers = std::max<std::size_t>(1, std::min(workers, utts.size()));
    if (workers == 1) {
        numeric::NoGradGuard guard;
        for (std::size_t i = 0; i < utts.size(); ++i) run_one(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            numeric::NoGradGuard guard;
            try {
                for (std::size_t i = w; i < utts.size(); i += workers) run_one(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

EvalReport summarize(const std::vector<Prediction>& preds) {
    EvalReport r;
    r.count = preds.size();
    r.male = metrics_for(preds, 0);
    r.female = metrics_for(preds, 1);
    if (preds.empty()) {
        r.gender_accuracy = kNaN;
        return r;
    }
    std::size_t correct = 0;
    for (const auto& p : preds) {
        const int guess = p.gender_p >= 0.5 ? 1 : 0;
        if (guess == p.true_gender) ++correct;
    }
    r.gender_accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
    return r;
}

EvalReport evaluate(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                    const std::vector<data::Utterance>& utts, std::size_t workers) {
    return summarize(predict(m, norm, utts, workers));
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<data::Utterance>& utts, std::size_t workers) {
    const auto m = restore_model(ckpt);
    return evaluate(m, ckpt.norm, utts, workers);
}

EvalReport constant_mean_baseline(const losses::NormStats& norm, const std::vector<data::Utterance>& utts) {
    std::vector<Prediction> preds;
    for (const auto& u : utts) {
        Prediction p;
        p.age_years = norm.age_mean;
        p.height_cm = norm.height_mean;
        p.gender_p = 0.5;
        p.true_age = u.record.age_years;
        p.true_height = u.record.height_cm;
        p.true_gender = u.record.gender;
        preds.push_back(p);
    }
    return summarize(preds);
}

std::string report_csv(const EvalReport& r) {
    std::string s = "gender,count,height_rmse,height_mae,age_rmse,age_mae\n";
    for (const auto& [name, g] : {std::pair{"male", r.male}, std::pair{"female", r.female}}) {
        s += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", name, g.count, g.height_rmse, g.height_mae,
                         g.age_rmse, g.age_mae);
    }
    s += fmt::format("gender_accuracy,{},{:.17g},,,\n", r.count, r.gender_accuracy);
    return s;
}

std::string report_text(const EvalReport& r) {
    std::string s = fmt::format("{:<8} {:>6} {:>12} {:>12} {:>12} {:>12}\n", "", "n", "Height RMSE", "Height MAE",
                                "Age RMSE", "Age MAE");
    for (const auto& [name, g] : {std::pair{"Male", r.male}, std::pair{"Female", r.female}}) {
        s += fmt::format("{:<8} {:>6} {:>12.2f} {:>12.2f} {:>12.2f} {:>12.2f}\n", name, g.count, g.height_rmse,
                         g.height_mae, g.age_rmse, g.age_mae);
    }
    s += fmt::format("Gender accuracy: {:.4f} ({} utterances)\n", r.gender_accuracy, r.count);
    return s;
}

ImportanceTable phoneme_importance(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                                   const std::vector<data::Utterance>& utts, std::size_t workers) {
    std::vector<data::Utterance> usable;
    for (const auto& u : utts) {
        if (u.has_phones) {
            usable.push_back(u);
        } else {
            spdlog::warn("no transcription for {}; excluded from phone masking", u.record.utterance_path.string());
        }
    }
    if (usable.empty()) throw DataError("phone masking needs at least one record with a transcription");

    ImportanceTable t;
    t.num_records = usable.size();
    t.base = evaluate(m, norm, usable, workers);
    for (auto cls : data::kPhoneClassTableOrder) {
        const auto r = summarize(predict(m, norm, usable, workers, cls));
        ImportanceRow row{cls};
        row.height_male = percent_change(r.male.height_rmse, t.base.male.height_rmse);
        row.height_female = percent_change(r.female.height_rmse, t.base.female.height_rmse);
        row.age_male = percent_change(r.male.age_rmse, t.base.male.age_rmse);
        row.age_female = percent_change(r.female.age_rmse, t.base.female.age_rmse);
        t.rows.push_back(row);
    }
    return t;
}

std::string importance_csv(const ImportanceTable& t) {
    std::string s = "mask,height_rmse_male,height_rmse_female,age_rmse_male,age_rmse_female\n";
    for (const auto& r : t.rows) {
        s += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", data::to_string(r.cls), r.height_male,
                         r.height_female, r.age_male, r.age_female);
    }
    return s;
}

std::string importance_text(const ImportanceTable& t) {
    std::string s = fmt::format("{:<12} {:>12} {:>12} {:>12} {:>12}\n", "Mask", "Height M", "Height F", "Age M",
                                "Age F");
    for (const auto& r : t.rows) {
        s += fmt::format("{:<12} {:>11.2f}% {:>11.2f}% {:>11.2f}% {:>11.2f}%\n", data::to_string(r.cls), r.height_male,
                         r.height_female, r.age_male, r.age_female);
    }
    s += fmt::format("({} records)\n", t.num_records);
    return s;
}

}  // namespace moeprof::train
