#pragma once

#include <string>

#include "moeprof/errors.hpp"
#include "moeprof/features/conv_frontend.hpp"
#include "moeprof/features/dsp.hpp"

namespace moeprof::model {

enum class ModelMode { bi_encoder, single_encoder };

inline std::string to_string(ModelMode m) { return m == ModelMode::bi_encoder ? "bi_encoder" : "single_encoder"; }

inline ModelMode model_mode_from_string(const std::string& s) {
    if (s == "bi_encoder") return ModelMode::bi_encoder;
    if (s == "single_encoder") return ModelMode::single_encoder;
    throw ConfigError("unknown mode '" + s + "' (expected bi_encoder|single_encoder)");
}

/// One transformer expert. Defaults follow the 6-layer / 8-head encoder;
/// model_dim is a desk-scale stand-in for wav2vec 2.0's 768.
struct ExpertConfig {
    std::size_t num_layers = 6;
    std::size_t num_heads = 8;
    std::size_t model_dim = 128;
    std::size_t ff_dim = 256;
    double dropout_p = 0.2;
    bool use_positional_encoding = true;

    void validate() const {
        if (num_layers == 0 || num_heads == 0 || model_dim < 2 || ff_dim == 0) {
            throw ConfigError("expert needs positive layers/heads/ff_dim and model_dim >= 2");
        }
        if (model_dim % num_heads != 0) {
            throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by num_heads " +
                              std::to_string(num_heads));
        }
        if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    }
};

struct ModelConfig {
    features::FeatureKind feature_kind = features::FeatureKind::conv;
    ModelMode mode = ModelMode::bi_encoder;
    ExpertConfig expert;
    std::size_t expert_dim = 128;   // E, size of each expert view
    std::size_t head_hidden = 64;   // FC-64 -> FC-1 per regression task
    features::ConvFrontendConfig frontend = features::ConvFrontendConfig::wav2vec2_shape();

    std::size_t input_dim() const {
        switch (feature_kind) {
            case features::FeatureKind::fbank: return 3 * features::kNumMelBins;
            case features::FeatureKind::mfcc: return 3 * features::kNumCeps;
            case features::FeatureKind::conv: return frontend.output_dim();
        }
        return 0;
    }

    void validate() const {
        expert.validate();
        if (expert_dim == 0 || head_hidden == 0) throw ConfigError("expert_dim and head_hidden must be positive");
        if (feature_kind == features::FeatureKind::conv) frontend.validate();
    }
};

}  // namespace moeprof::model
