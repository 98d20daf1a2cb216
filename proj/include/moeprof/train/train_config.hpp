#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moeprof/features/dsp.hpp"
#include "moeprof/model/config.hpp"

namespace moeprof::train {

/// Everything needed to rebuild a model and rerun training. Serialized as
/// flat key=value text (run config files and checkpoint snapshots).
struct TrainConfig {
    features::FeatureKind feature_kind = features::FeatureKind::conv;
    model::ModelMode mode = model::ModelMode::bi_encoder;
    std::optional<double> lr;  // unset: 1e-6 for conv, 1e-5 otherwise
    std::size_t max_epochs = 300;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    bool mixup_enabled = true;
    double mixup_prob = 0.5;
    std::size_t num_frozen_layers = 5;
    std::size_t patience = 20;
    std::size_t max_steps = 0;  // 0: unlimited

    std::size_t num_layers = 6;
    std::size_t num_heads = 8;
    std::size_t model_dim = 128;
    std::size_t ff_dim = 256;
    double dropout = 0.2;
    std::size_t expert_dim = 128;
    std::size_t head_hidden = 64;
    std::size_t conv_channels = 32;
    bool use_positional_encoding = true;
    /// Stop gradients through the gate where it mixes the expert views.
    bool gate_detach = false;
    /// Feed untiled audio (batch alignment masked out) when not mixing.
    bool align_mask = false;

    double effective_lr() const {
        if (lr) return *lr;
        return feature_kind == features::FeatureKind::conv ? 1e-6 : 1e-5;
    }

    model::ModelConfig model_config() const;

    /// Ordered key/value pairs; `lr` is emitted as the effective value.
    std::vector<std::pair<std::string, std::string>> to_kv() const;

    /// Applies one key. Throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    static TrainConfig from_kv(const std::vector<std::pair<std::string, std::string>>& kv);

    void validate() const;
};

std::string to_text(const std::vector<std::pair<std::string, std::string>>& kv);

/// Parses "key = value" lines; '#' starts a comment. Duplicate keys: last wins.
std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text);

}  // namespace moeprof::train
