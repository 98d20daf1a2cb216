#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moeprof/data/corpus.hpp"
#include "moeprof/data/phones.hpp"
#include "moeprof/losses/losses.hpp"
#include "moeprof/model/moe_model.hpp"
#include "moeprof/train/checkpoint.hpp"

namespace moeprof::train {

/// Contract error on empty or unequal inputs.
double rmse(std::span<const double> preds, std::span<const double> targets);
double mae(std::span<const double> preds, std::span<const double> targets);

/// One utterance in natural units.
struct Prediction {
    double age_years = 0.0;
    double height_cm = 0.0;
    double gender_p = 0.0;
    double true_age = 0.0;
    double true_height = 0.0;
    int true_gender = 0;
};

struct GenderMetrics {
    std::size_t count = 0;
    double height_rmse = 0.0;
    double height_mae = 0.0;
    double age_rmse = 0.0;
    double age_mae = 0.0;
};

/// Metrics grouped by the true gender label.
struct EvalReport {
    GenderMetrics male;
    GenderMetrics female;
    double gender_accuracy = 0.0;
    std::size_t count = 0;
};

/// Forward passes without gradient recording, fanned out over `workers`
/// threads. Results are ordered like `utts` regardless of worker count.
std::vector<Prediction> predict(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                                const std::vector<data::Utterance>& utts, std::size_t workers = 1,
                                std::optional<data::PhoneClass> mask = std::nullopt);

/// A gender with no records gets count 0 and NaN metrics.
EvalReport summarize(const std::vector<Prediction>& preds);

EvalReport evaluate(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                    const std::vector<data::Utterance>& utts, std::size_t workers = 1);
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<data::Utterance>& utts, std::size_t workers = 1);

/// Predicts the train-split means for every record.
EvalReport constant_mean_baseline(const losses::NormStats& norm, const std::vector<data::Utterance>& utts);

std::string report_csv(const EvalReport& r);
std::string report_text(const EvalReport& r);

struct ImportanceRow {
    data::PhoneClass cls;
    double height_male = 0.0;
    double height_female = 0.0;
    double age_male = 0.0;
    double age_female = 0.0;
};

struct ImportanceTable {
    EvalReport base;
    std::vector<ImportanceRow> rows;  // table order
    std::size_t num_records = 0;
};

/// 100 * (masked - base) / base RMSE per class and cell. Records without a
/// transcription are skipped with a warning.
ImportanceTable phoneme_importance(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                                   const std::vector<data::Utterance>& utts, std::size_t workers = 1);

std::string importance_csv(const ImportanceTable& t);
std::string importance_text(const ImportanceTable& t);

}  // namespace moeprof::train
