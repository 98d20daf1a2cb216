#include "moeprof/train/train_config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "moeprof/errors.hpp"

namespace moeprof::train {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_double(double d) { return fmt::format("{}", d); }

}  // namespace

model::ModelConfig TrainConfig::model_config() const {
    model::ModelConfig m;
    m.feature_kind = feature_kind;
    m.mode = mode;
    m.expert.num_layers = num_layers;
    m.expert.num_heads = num_heads;
    m.expert.model_dim = model_dim;
    m.expert.ff_dim = ff_dim;
    m.expert.dropout_p = dropout;
    m.expert.use_positional_encoding = use_positional_encoding;
    m.expert_dim = expert_dim;
    m.head_hidden = head_hidden;
    m.frontend = features::ConvFrontendConfig::wav2vec2_shape(conv_channels, num_frozen_layers);
    return m;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_kv() const {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    auto n = [](std::size_t v) { return std::to_string(v); };
    return {
        {"feature_kind", features::to_string(feature_kind)},
        {"mode", model::to_string(mode)},
        {"lr", fmt_double(effective_lr())},
        {"max_epochs", n(max_epochs)},
        {"batch_size", n(batch_size)},
        {"seed", std::to_string(seed)},
        {"mixup_enabled", b(mixup_enabled)},
        {"mixup_prob", fmt_double(mixup_prob)},
        {"num_frozen_layers", n(num_frozen_layers)},
        {"patience", n(patience)},
        {"max_steps", n(max_steps)},
        {"num_layers", n(num_layers)},
        {"num_heads", n(num_heads)},
        {"model_dim", n(model_dim)},
        {"ff_dim", n(ff_dim)},
        {"dropout", fmt_double(dropout)},
        {"expert_dim", n(expert_dim)},
        {"head_hidden", n(head_hidden)},
        {"conv_channels", n(conv_channels)},
        {"use_positional_encoding", b(use_positional_encoding)},
        {"gate_detach", b(gate_detach)},
        {"align_mask", b(align_mask)},
    };
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "feature_kind") feature_kind = features::feature_kind_from_string(v);
    else if (key == "mode") mode = model::model_mode_from_string(v);
    else if (key == "lr") lr = parse_double(key, v);
    else if (key == "max_epochs") max_epochs = parse_size(key, v);
    else if (key == "batch_size") batch_size = parse_size(key, v);
    else if (key == "seed") seed = parse_size(key, v);
    else if (key == "mixup_enabled") mixup_enabled = parse_bool(key, v);
    else if (key == "mixup_prob") mixup_prob = parse_double(key, v);
    else if (key == "num_frozen_layers") num_frozen_layers = parse_size(key, v);
    else if (key == "patience") patience = parse_size(key, v);
    else if (key == "max_steps") max_steps = parse_size(key, v);
    else if (key == "num_layers") num_layers = parse_size(key, v);
    else if (key == "num_heads") num_heads = parse_size(key, v);
    else if (key == "model_dim") model_dim = parse_size(key, v);
    else if (key == "ff_dim") ff_dim = parse_size(key, v);
    else if (key == "dropout") dropout = parse_double(key, v);
    else if (key == "expert_dim") expert_dim = parse_size(key, v);
    else if (key == "head_hidden") head_hidden = parse_size(key, v);
    else if (key == "conv_channels") conv_channels = parse_size(key, v);
    else if (key == "use_positional_encoding") use_positional_encoding = parse_bool(key, v);
    else if (key == "gate_detach") gate_detach = parse_bool(key, v);
    else if (key == "align_mask") align_mask = parse_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig TrainConfig::from_kv(const std::vector<std::pair<std::string, std::string>>& kv) {
    TrainConfig c;
    for (const auto& [k, v] : kv) c.set(k, v);
    return c;
}

void TrainConfig::validate() const {
    if (!(effective_lr() >= 0.0)) throw ConfigError("lr must be >= 0");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
    if (mixup_prob < 0.0 || mixup_prob > 1.0) throw ConfigError("mixup_prob must lie in [0, 1]");
    model_config().validate();
}

std::string to_text(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key=value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

}  // namespace moeprof::train
