#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moeprof/train/train_config.hpp"

namespace moeprof::cli {

/// A run config file: TrainConfig keys plus corpus_root and out_dir.
struct RunConfig {
    train::TrainConfig train;
    std::filesystem::path corpus_root;
    std::filesystem::path out_dir;

    void set(const std::string& key, const std::string& value);

    /// Applies "key=value" strings in order; ConfigError on malformed input.
    void apply_overrides(const std::vector<std::string>& overrides);

    std::string to_text() const;
    void validate() const;
};

RunConfig parse_run_config_text(const std::string& text);

/// Missing or unreadable file: ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace moeprof::cli
