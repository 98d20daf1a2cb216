#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "moeprof/losses/losses.hpp"
#include "moeprof/model/moe_model.hpp"
#include "moeprof/numeric/tensor.hpp"
#include "moeprof/train/train_config.hpp"

namespace moeprof::train {

inline constexpr char kCheckpointMagic[4] = {'B', 'E', 'M', 'X'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Trained weights plus everything needed to rebuild and de-normalize.
struct Checkpoint {
    TrainConfig config;
    losses::NormStats norm;
    std::vector<std::pair<std::string, numeric::Tensor<float>>> tensors;
};

/// Layout (little-endian): magic "BEMX", u32 version, u32 length + config
/// text, 4 x f64 norm stats, u32 tensor count, then per tensor: u32 name
/// length + name, u32 rank, rank x u64 dims, f32 data.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Missing file: DataError. Unknown version: ConfigError. Bad magic or
/// truncation: FormatError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");

Checkpoint make_checkpoint(const TrainConfig& cfg, const losses::NormStats& norm,
                           const numeric::ParamSet<float>& params);

/// Rebuilds the model and copies every stored tensor in. Missing, extra or
/// mis-shaped tensors raise ConfigError.
model::SpeakerModel<float> restore_model(const Checkpoint& ckpt);

}  // namespace moeprof::train
