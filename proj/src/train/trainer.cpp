#include "moeprof/train/trainer.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "moeprof/data/batching.hpp"
#include "moeprof/errors.hpp"
#include "moeprof/losses/mixup.hpp"
#include "moeprof/numeric/adam.hpp"

namespace moeprof::train {

namespace {

using numeric::Var;

losses::Targets targets_of(const losses::LabeledSample& s) { return {s.height_cm, s.age_years, s.gender}; }

losses::LabeledSample labeled(const data::Utterance& u, features::Waveform w) {
    return {std::move(w), u.record.height_cm, static_cast<double>(u.record.age_years),
            static_cast<double>(u.record.gender)};
}

std::vector<losses::LabeledSample> prepare_batch(const TrainConfig& cfg, const std::vector<data::Utterance>& utts,
                                                 const data::Batch& batch, std::mt19937_64& rng) {
    std::vector<losses::LabeledSample> samples;
    const bool mix = cfg.mixup_enabled && cfg.feature_kind == features::FeatureKind::conv && batch.indices.size() > 1 &&
                     std::bernoulli_distribution(cfg.mixup_prob)(rng);
    for (std::size_t k = 0; k < batch.indices.size(); ++k) {
        const auto& u = utts[batch.indices[k]];
        samples.push_back(labeled(u, cfg.align_mask && !mix ? u.waveform : batch.waveforms[k]));
    }
    if (!mix) return samples;

    std::vector<std::size_t> perm(samples.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_real_distribution<double> lambda(0.0, 1.0);
    std::vector<losses::LabeledSample> mixed;
    for (std::size_t i = 0; i < samples.size(); ++i) mixed.push_back(losses::mixup(samples[i], samples[perm[i]], lambda(rng)));
    return mixed;
}

std::vector<numeric::Tensor<float>> snapshot(const numeric::ParamSet<float>& ps) {
    std::vector<numeric::Tensor<float>> out;
    for (const auto& [_, v] : ps.entries()) out.push_back(v.value());
    return out;
}

void require_both_genders(const std::vector<data::Utterance>& train) {
    bool male = false, female = false;
    for (const auto& u : train) (u.record.gender ? female : male) = true;
    if (!male || !female) throw DataError("training split must contain both male and female speakers");
}

}  // namespace

std::string epoch_log_csv_header() { return "epoch,split,L_total,L_height,L_age,L_gender,s_height,s_age,s_gender"; }

std::string to_csv_line(const EpochLog& e) {
    return fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", e.epoch, e.split, e.total, e.height,
                       e.age, e.gender, e.s_height, e.s_age, e.s_gender);
}

losses::NormStats compute_norm_stats(const std::vector<data::Utterance>& train) {
    if (train.empty()) throw DataError("cannot compute label statistics on an empty training split");
    const double n = static_cast<double>(train.size());
    losses::NormStats s;
    double am = 0, hm = 0;
    for (const auto& u : train) {
        am += u.record.age_years;
        hm += u.record.height_cm;
    }
    am /= n;
    hm /= n;
    double av = 0, hv = 0;
    for (const auto& u : train) {
        av += (u.record.age_years - am) * (u.record.age_years - am);
        hv += (u.record.height_cm - hm) * (u.record.height_cm - hm);
    }
    s.age_mean = am;
    s.height_mean = hm;
    s.age_std = std::sqrt(av / n);
    s.height_std = std::sqrt(hv / n);
    if (!(s.age_std > 0.0)) {
        spdlog::warn("age has zero variance on the training split; using std 1");
        s.age_std = 1.0;
    }
    if (!(s.height_std > 0.0)) {
        spdlog::warn("height has zero variance on the training split; using std 1");
        s.height_std = 1.0;
    }
    return s;
}

EpochLog evaluate_losses(const model::SpeakerModel<float>& m, const losses::NormStats& norm,
                         const std::vector<data::Utterance>& utts) {
    numeric::NoGradGuard guard;
    EpochLog e;
    e.s_height = m.s_height().item();
    e.s_age = m.s_age().item();
    e.s_gender = m.s_gender().item();
    if (utts.empty()) return e;
    for (const auto& u : utts) {
        const auto out = m.forward(model::SpeakerModel<float>::make_input(u.waveform, m.config().feature_kind));
        const auto l = losses::task_losses(out, targets_of(labeled(u, {})), norm);
        e.height += l.height.item();
        e.age += l.age.item();
        e.gender += l.gender.item();
    }
    const double n = static_cast<double>(utts.size());
    e.height /= n;
    e.age /= n;
    e.gender /= n;
    e.total = losses::uncertainty_loss_value(e.height, e.age, e.gender, e.s_height, e.s_age, e.s_gender);
    return e;
}

TrainResult train_model(const TrainConfig& cfg, const std::vector<data::Utterance>& train,
                        const std::vector<data::Utterance>& val, const EpochCallback& on_epoch) {
    cfg.validate();
    require_both_genders(train);
    const auto norm = compute_norm_stats(train);

    model::SpeakerModel<float> m(cfg.model_config(), cfg.seed);
    numeric::AdamHyper hyper;
    hyper.lr = cfg.effective_lr();
    numeric::Adam<float> adam(m.params(), hyper);
    std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);

    const model::ForwardOptions fwd{true, std::nullopt, cfg.gate_detach};
    TrainResult res;
    std::vector<numeric::Tensor<float>> best = snapshot(m.params());
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    bool out_of_steps = false;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs && !out_of_steps; ++epoch) {
        data::BatchIterator it(train, cfg.batch_size, cfg.seed, epoch);
        EpochLog tr;
        tr.epoch = epoch;
        tr.split = "train";
        std::size_t nb = 0;
        for (std::size_t b = 1; !it.done(); ++b) {
            const auto samples = prepare_batch(cfg, train, it.next(), rng);
            m.params().zero_grad();
            double tv = 0;
            losses::TaskLosses<float> mean;
            try {
                Var<float> lh, la, lg;
                for (std::size_t i = 0; i < samples.size(); ++i) {
                    const auto input = model::SpeakerModel<float>::make_input(samples[i].waveform, cfg.feature_kind);
                    const auto out = m.forward(input, fwd, &rng);
                    const auto l = losses::task_losses(out, targets_of(samples[i]), norm);
                    lh = i == 0 ? l.height : numeric::add(lh, l.height);
                    la = i == 0 ? l.age : numeric::add(la, l.age);
                    lg = i == 0 ? l.gender : numeric::add(lg, l.gender);
                }
                const float inv = 1.0f / static_cast<float>(samples.size());
                mean = {numeric::scale(lh, inv), numeric::scale(la, inv), numeric::scale(lg, inv)};
                const auto total = losses::uncertainty_loss(mean, m.s_height(), m.s_age(), m.s_gender());
                tv = total.item();
                if (!std::isfinite(tv)) throw NumericError("non-finite loss");
                numeric::backward(total);
                adam.step();
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("epoch {} batch {}: {}", epoch, b, e.what()));
            }
            tr.total += tv;
            tr.height += mean.height.item();
            tr.age += mean.age.item();
            tr.gender += mean.gender.item();
            ++nb;
            ++res.steps;
            if (cfg.max_steps && res.steps >= cfg.max_steps) {
                out_of_steps = true;
                break;
            }
        }
        const double n = static_cast<double>(nb);
        tr.total /= n;
        tr.height /= n;
        tr.age /= n;
        tr.gender /= n;
        tr.s_height = m.s_height().item();
        tr.s_age = m.s_age().item();
        tr.s_gender = m.s_gender().item();
        res.log.push_back(tr);
        if (on_epoch) on_epoch(tr);

        double selection = tr.total;
        if (!val.empty()) {
            auto v = evaluate_losses(m, norm, val);
            v.epoch = epoch;
            v.split = "val";
            res.log.push_back(v);
            if (on_epoch) on_epoch(v);
            selection = v.total;
        }
        spdlog::debug("epoch {} train {:.5f} selection {:.5f}", epoch, tr.total, selection);

        if (selection < best_loss) {
            best_loss = selection;
            best = snapshot(m.params());
            res.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            spdlog::info("early stop at epoch {} (best epoch {})", epoch, res.best_epoch);
            res.early_stopped = true;
            break;
        }
    }

    auto& entries = m.params().entries();
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k].second.mutable_value() = best[k];
    res.best = make_checkpoint(cfg, norm, m.params());
    res.best_selection_loss = best_loss;
    return res;
}

}  // namespace moeprof::train
