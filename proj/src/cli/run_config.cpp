#include "moeprof/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "moeprof/errors.hpp"

namespace moeprof::cli {

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "corpus_root") corpus_root = value;
    else if (key == "out_dir") out_dir = value;
    else train.set(key, value);
}

void RunConfig::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        const auto kv = train::parse_kv_text(o);
        for (const auto& [k, v] : kv) set(k, v);
    }
}

std::string RunConfig::to_text() const {
    std::string s = "corpus_root=" + corpus_root.string() + "\nout_dir=" + out_dir.string() + "\n";
    return s + train::to_text(train.to_kv());
}

void RunConfig::validate() const {
    if (corpus_root.empty()) throw ConfigError("config needs corpus_root");
    if (out_dir.empty()) throw ConfigError("config needs out_dir");
    train.validate();
}

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig rc;
    for (const auto& [k, v] : train::parse_kv_text(text)) rc.set(k, v);
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

}  // namespace moeprof::cli
