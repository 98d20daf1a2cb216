#pragma once

#include <functional>
#include <string>
#include <vector>

#include "moeprof/data/corpus.hpp"
#include "moeprof/losses/losses.hpp"
#include "moeprof/train/checkpoint.hpp"
#include "moeprof/train/train_config.hpp"

namespace moeprof::train {

/// One row of the per-epoch log; split is "train" or "val".
struct EpochLog {
    std::size_t epoch = 0;
    std::string split;
    double total = 0.0;
    double height = 0.0;
    double age = 0.0;
    double gender = 0.0;
    double s_height = 0.0;
    double s_age = 0.0;
    double s_gender = 0.0;
};

std::string epoch_log_csv_header();
std::string to_csv_line(const EpochLog& e);

/// Mean and population std of age and height. A zero std becomes 1 so
/// z-scoring stays defined.
losses::NormStats compute_norm_stats(const std::vector<data::Utterance>& train);

/// Mean component losses in inference mode, combined with the given
/// log-variances into the total.
EpochLog evaluate_losses(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                         const std::vector<data::Utterance>& utts);

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_selection_loss = 0.0;
    std::size_t steps = 0;
    bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on the uncertainty-weighted loss with per-epoch logging, early
/// stopping on val loss (train loss when val is empty) and best-checkpoint
/// selection. Requires both genders in `train`. Non-finite losses or
/// gradients raise NumericError naming the epoch and batch.
TrainResult train_model(const TrainConfig& cfg, const std::vector<data::Utterance>& train,
                        const std::vector<data::Utterance>& val, const EpochCallback& on_epoch = {});

}  // namespace moeprof::train
