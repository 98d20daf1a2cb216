#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "moeprof/features/conv_frontend.hpp"
#include "moeprof/features/dsp.hpp"
#include "moeprof/model/config.hpp"
#include "moeprof/model/encoder.hpp"

namespace moeprof::model {

/// Normalized age/height predictions and the gender probability
/// (0 = male, 1 = female). `gate` is the weight actually used to mix the
/// expert views; it equals gender_p unless overridden.
template <typename T>
struct ModelOutput {
    numeric::Var<T> age_z;
    numeric::Var<T> height_z;
    numeric::Var<T> gender_p;
    numeric::Var<T> gate;
};

/// Encoder -> statistical pooling -> dropout -> FC(2d -> E).
template <typename T>
class Expert {
public:
    Expert() = default;

    template <typename Rng>
    Expert(const ModelConfig& cfg, numeric::ParamSet<T>& ps, const std::string& prefix, Rng& rng)
        : encoder_(cfg.expert, cfg.input_dim(), ps, prefix + ".enc", rng),
          fc_(ps, prefix + ".fc", 2 * cfg.expert.model_dim, cfg.expert_dim, rng),
          dropout_p_(cfg.expert.dropout_p) {}

    numeric::Var<T> encode(const numeric::Var<T>& x, const ForwardContext& ctx) const { return encoder_(x, ctx); }

    /// x: [T x input_dim] -> expert view [1 x E].
    numeric::Var<T> operator()(const numeric::Var<T>& x, const ForwardContext& ctx) const {
        const auto pooled = numeric::statistical_pooling(encoder_(x, ctx));
        return fc_(apply_dropout(pooled, dropout_p_, ctx));
    }

private:
    TransformerEncoder<T> encoder_;
    Linear<T> fc_;
    double dropout_p_ = 0.0;
};

/// Separate FC-hidden -> GELU -> FC-1 stacks for age and height.
template <typename T>
class RegressionHeads {
public:
    RegressionHeads() = default;

    template <typename Rng>
    RegressionHeads(const ModelConfig& cfg, numeric::ParamSet<T>& ps, const std::string& prefix, Rng& rng)
        : age1_(ps, prefix + ".age.fc1", cfg.expert_dim, cfg.head_hidden, rng),
          age2_(ps, prefix + ".age.fc2", cfg.head_hidden, 1, rng),
          height1_(ps, prefix + ".height.fc1", cfg.expert_dim, cfg.head_hidden, rng),
          height2_(ps, prefix + ".height.fc2", cfg.head_hidden, 1, rng) {}

    /// (age_z, height_z), each 1 x 1.
    std::pair<numeric::Var<T>, numeric::Var<T>> operator()(const numeric::Var<T>& e) const {
        return {age2_(numeric::gelu(age1_(e))), height2_(numeric::gelu(height1_(e)))};
    }

private:
    Linear<T> age1_, age2_, height1_, height2_;
};

/// g = sigmoid(FC([e_m | e_f])).
template <typename T>
numeric::Var<T> gate_predict(const numeric::Var<T>& e_m, const numeric::Var<T>& e_f, const Linear<T>& gate) {
    if (e_m.shape() != e_f.shape()) throw DimensionError("gate_predict: expert views differ in shape");
    return numeric::sigmoid(gate(numeric::concat_cols(e_m, e_f)));
}

/// e = (1 - g) * e_m + g * e_f.
template <typename T>
numeric::Var<T> combine_experts(const numeric::Var<T>& e_m, const numeric::Var<T>& e_f, const numeric::Var<T>& g) {
    return numeric::convex_mix(e_m, e_f, g);
}

struct ForwardOptions {
    bool training = false;
    /// Replaces the predicted gate in the mixture (bi-encoder only).
    std::optional<double> gate_override;
    /// Mixes with a constant copy of the gate so the regression losses do
    /// not train the gender branch through the mixture.
    bool detach_gate = false;
};

/// Bi-encoder mixture of experts (or the single-encoder baseline) with an
/// optional shared conv frontend for raw-waveform input.
template <typename T>
class SpeakerModel {
public:
    SpeakerModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::mt19937_64 rng(seed);
        if (cfg_.feature_kind == features::FeatureKind::conv) {
            frontend_ = features::ConvFrontend<T>(cfg_.frontend, params_, "frontend", rng);
        }
        if (cfg_.mode == ModelMode::bi_encoder) {
            male_ = Expert<T>(cfg_, params_, "male", rng);
            female_ = Expert<T>(cfg_, params_, "female", rng);
            gate_ = Linear<T>(params_, "gate", 2 * cfg_.expert_dim, 1, rng);
        } else {
            male_ = Expert<T>(cfg_, params_, "expert", rng);
            gate_ = Linear<T>(params_, "gender", cfg_.expert_dim, 1, rng);
        }
        heads_ = RegressionHeads<T>(cfg_, params_, "head", rng);
        s_height_ = params_.add("loss.s_height", numeric::Tensor<T>::scalar(T{0}));
        s_age_ = params_.add("loss.s_age", numeric::Tensor<T>::scalar(T{0}));
        s_gender_ = params_.add("loss.s_gender", numeric::Tensor<T>::scalar(T{0}));
    }

    // Parameters are shared Var handles; copying would alias them.
    SpeakerModel(const SpeakerModel&) = delete;
    SpeakerModel& operator=(const SpeakerModel&) = delete;
    SpeakerModel(SpeakerModel&&) = default;
    SpeakerModel& operator=(SpeakerModel&&) = default;

    const ModelConfig& config() const { return cfg_; }
    numeric::ParamSet<T>& params() { return params_; }
    const numeric::ParamSet<T>& params() const { return params_; }

    /// Number of network scalars, excluding the loss log-variances.
    std::size_t num_network_scalars() const {
        std::size_t n = 0;
        for (const auto& [name, v] : params_.entries()) {
            if (name.rfind("loss.", 0) != 0) n += v.value().numel();
        }
        return n;
    }

    const numeric::Var<T>& s_height() const { return s_height_; }
    const numeric::Var<T>& s_age() const { return s_age_; }
    const numeric::Var<T>& s_gender() const { return s_gender_; }

    /// Frontend output (conv kind) or the features themselves.
    numeric::Var<T> encode_input(const numeric::Var<T>& input) const {
        if (cfg_.feature_kind == features::FeatureKind::conv) return frontend_(input);
        if (input.cols() != cfg_.input_dim()) {
            throw DimensionError("model expects " + std::to_string(cfg_.input_dim()) + "-dim features, got " +
                                 std::to_string(input.cols()));
        }
        return input;
    }

    const Expert<T>& male_expert() const { return male_; }
    const Expert<T>& female_expert() const { return female_; }
    const Linear<T>& gate() const { return gate_; }
    const RegressionHeads<T>& heads() const { return heads_; }

    /// input: waveform [N x 1] for conv kind, features [T x D] otherwise.
    ModelOutput<T> forward(const numeric::Var<T>& input, const ForwardOptions& opts = {},
                           std::mt19937_64* rng = nullptr) const {
        const ForwardContext ctx{opts.training, rng};
        const auto x = encode_input(input);
        ModelOutput<T> out;
        numeric::Var<T> e;
        if (cfg_.mode == ModelMode::bi_encoder) {
            const auto e_m = male_(x, ctx);
            const auto e_f = female_(x, ctx);
            out.gender_p = gate_predict(e_m, e_f, gate_);
            out.gate = opts.gate_override ? numeric::Var<T>(numeric::Tensor<T>::scalar(static_cast<T>(*opts.gate_override)))
                                          : opts.detach_gate ? numeric::Var<T>(out.gender_p.value())
                                                             : out.gender_p;
            e = combine_experts(e_m, e_f, out.gate);
        } else {
            e = male_(x, ctx);
            out.gender_p = numeric::sigmoid(gate_(e));
            out.gate = out.gender_p;
        }
        std::tie(out.age_z, out.height_z) = heads_(e);
        return out;
    }

    /// Builds the model input for one waveform according to the feature kind.
    static numeric::Var<T> make_input(const features::Waveform& w, features::FeatureKind kind) {
        if (kind == features::FeatureKind::conv) {
            numeric::Tensor<T> t(numeric::Shape{w.samples.size(), 1});
            for (std::size_t i = 0; i < w.samples.size(); ++i) t[i] = static_cast<T>(w.samples[i]);
            return numeric::Var<T>(std::move(t));
        }
        const auto f = features::extract_features(w, kind);
        return numeric::Var<T>(f.frames.template cast<T>());
    }

private:
    ModelConfig cfg_;
    numeric::ParamSet<T> params_;
    features::ConvFrontend<T> frontend_;
    Expert<T> male_, female_;
    Linear<T> gate_;
    RegressionHeads<T> heads_;
    numeric::Var<T> s_height_, s_age_, s_gender_;
};

/// Copies parameter values from `src` into `dst` for every name present in
/// both, after rewriting a leading `from_prefix` to `to_prefix`.
template <typename T>
std::size_t copy_params(const numeric::ParamSet<T>& src, numeric::ParamSet<T>& dst, const std::string& from_prefix = "",
                        const std::string& to_prefix = "") {
    std::size_t copied = 0;
    for (const auto& [name, v] : src.entries()) {
        std::string target = name;
        if (!from_prefix.empty()) {
            if (name.rfind(from_prefix, 0) != 0) continue;
            target = to_prefix + name.substr(from_prefix.size());
        }
        if (!dst.contains(target)) continue;
        auto& d = dst.get(target);
        if (d.shape() != v.shape()) throw DimensionError("copy_params: shape mismatch for " + target);
        d.mutable_value() = v.value();
        ++copied;
    }
    return copied;
}

}  // namespace moeprof::model
