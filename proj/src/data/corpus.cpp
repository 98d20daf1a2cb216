#include "moeprof/data/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "moeprof/errors.hpp"

namespace moeprof::data {

namespace fs = std::filesystem;

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

struct Date {
    int month, day, year;
};

std::optional<Date> parse_date(const std::string& s) {
    static const std::regex re(R"((\d{1,2})/(\d{1,2})/(\d{2}))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) return std::nullopt;
    Date d{std::stoi(m[1]), std::stoi(m[2]), 1900 + std::stoi(m[3])};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
    return d;
}

std::optional<fs::path> find_ci(const fs::path& dir, const std::string& name) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return std::nullopt;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (upper(e.path().filename().string()) == upper(name)) return e.path();
    }
    return std::nullopt;
}

std::vector<fs::path> sorted_children(const fs::path& dir, bool dirs) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (dirs ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + s + "' (expected train|val|test)");
}

std::optional<double> parse_height_cm(const std::string& s) {
    static const std::regex re(R"((\d+)'(\d+)(?:\"|'')?)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) return std::nullopt;
    const int feet = std::stoi(m[1]);
    const int inches = std::stoi(m[2]);
    if (inches >= 12) return std::nullopt;
    return (feet * 12 + inches) * 2.54;
}

std::optional<int> age_between(const std::string& birth_mmddyy, const std::string& rec_mmddyy) {
    const auto b = parse_date(birth_mmddyy);
    const auto r = parse_date(rec_mmddyy);
    if (!b || !r) return std::nullopt;
    int years = r->year - b->year;
    if (std::make_pair(r->month, r->day) < std::make_pair(b->month, b->day)) --years;
    if (years < 0) return std::nullopt;
    return years;
}

std::map<std::string, SpeakerInfo> parse_speaker_info_text(const std::string& text) {
    std::map<std::string, SpeakerInfo> out;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == ';') continue;
        std::istringstream ls(line);
        std::string id, sex, dialect, use, rec, birth, height;
        if (!(ls >> id >> sex >> dialect >> use >> rec >> birth >> height)) {
            spdlog::warn("speaker info line {}: too few columns, skipped", no);
            continue;
        }
        const auto h = parse_height_cm(height);
        const auto age = age_between(birth, rec);
        if (!h || !age) {
            spdlog::warn("speaker info line {} ({}): unparseable height '{}' or dates '{}'/'{}', skipped", no, id,
                         height, birth, rec);
            continue;
        }
        const std::string s = upper(sex);
        if (s != "M" && s != "F") {
            spdlog::warn("speaker info line {} ({}): unknown sex '{}', skipped", no, id, sex);
            continue;
        }
        out[upper(id)] = SpeakerInfo{s == "F" ? 1 : 0, *age, *h};
    }
    return out;
}

std::map<std::string, SpeakerInfo> parse_speaker_info(const fs::path& table_file) {
    std::ifstream in(table_file);
    if (!in) throw DataError("cannot open speaker info table: " + table_file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_speaker_info_text(ss.str());
}

std::optional<fs::path> find_speaker_info(const fs::path& root) {
    if (auto p = find_ci(root, "SPKRINFO.TXT")) return p;
    if (auto doc = find_ci(root, "DOC")) return find_ci(*doc, "SPKRINFO.TXT");
    return std::nullopt;
}

std::vector<SpeakerRecord> scan_corpus(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw DataError("corpus root is not a directory: " + root.string());

    struct Pending {
        SpeakerRecord rec;
        std::string info_key;
    };
    std::vector<Pending> found;
    for (const auto& [part, split] : {std::pair{"TRAIN", Split::train}, std::pair{"TEST", Split::test}}) {
        const auto part_dir = find_ci(root, part);
        if (!part_dir) continue;
        if (!fs::is_directory(*part_dir)) throw DataError("malformed corpus: " + part_dir->string() + " is not a directory");
        for (const auto& dialect : sorted_children(*part_dir, true)) {
            for (const auto& spk : sorted_children(dialect, true)) {
                const std::string name = spk.filename().string();
                const char sex = name.empty() ? '\0' : static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
                if (name.size() < 2 || (sex != 'M' && sex != 'F')) {
                    throw DataError("malformed corpus: speaker directory '" + spk.string() +
                                    "' does not start with M or F");
                }
                for (const auto& file : sorted_children(spk, false)) {
                    if (upper(file.extension().string()) != ".WAV") continue;
                    const std::string stem = file.stem().string();
                    std::optional<fs::path> phn;
                    for (const auto& sib : sorted_children(spk, false)) {
                        if (upper(sib.stem().string()) == upper(stem) && upper(sib.extension().string()) == ".PHN") {
                            phn = sib;
                            break;
                        }
                    }
                    if (!phn) continue;
                    SpeakerRecord r;
                    r.speaker_id = name;
                    r.utterance_path = file;
                    r.phn_path = *phn;
                    r.gender = sex == 'F' ? 1 : 0;
                    r.split = split;
                    found.push_back({r, upper(name.substr(1))});
                }
            }
        }
    }
    if (found.empty()) return {};

    const auto table = find_speaker_info(root);
    if (!table) throw DataError("corpus " + root.string() + " has audio but no SPKRINFO.TXT (root or DOC/)");
    const auto info = parse_speaker_info(*table);

    std::vector<SpeakerRecord> out;
    out.reserve(found.size());
    for (auto& p : found) {
        auto it = info.find(p.info_key);
        if (it == info.end()) {
            spdlog::warn("no speaker info for {} ({}); record skipped", p.rec.speaker_id, p.rec.utterance_path.string());
            continue;
        }
        const auto& si = it->second;
        if (si.height_cm < kMinHeightCm || si.height_cm > kMaxHeightCm || si.age_years < kMinAge ||
            si.age_years > kMaxAge) {
            spdlog::warn("speaker {} labels outside sanity band (age {}, height {:.1f}); record skipped",
                         p.rec.speaker_id, si.age_years, si.height_cm);
            continue;
        }
        if (si.gender != p.rec.gender) {
            spdlog::warn("speaker {}: directory sex disagrees with speaker table; using directory prefix",
                         p.rec.speaker_id);
        }
        p.rec.age_years = si.age_years;
        p.rec.height_cm = si.height_cm;
        out.push_back(std::move(p.rec));
    }
    return out;
}

std::pair<std::vector<SpeakerRecord>, std::vector<SpeakerRecord>> split_train_val(std::vector<SpeakerRecord> records,
                                                                                  std::uint64_t seed) {
    const std::size_t n_val = records.size() * 15 / 100;
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> is_val(records.size(), false);
    for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
    std::vector<SpeakerRecord> train, val;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (is_val[i]) {
            records[i].split = Split::val;
            val.push_back(std::move(records[i]));
        } else {
            records[i].split = Split::train;
            train.push_back(std::move(records[i]));
        }
    }
    return {std::move(train), std::move(val)};
}

CorpusSplits load_splits(const fs::path& root, std::uint64_t seed) {
    auto all = scan_corpus(root);
    std::vector<SpeakerRecord> train_part;
    CorpusSplits s;
    for (auto& r : all) {
        if (r.split == Split::test) {
            s.test.push_back(std::move(r));
        } else {
            train_part.push_back(std::move(r));
        }
    }
    std::tie(s.train, s.val) = split_train_val(std::move(train_part), seed);
    return s;
}

std::vector<Utterance> load_utterances(const std::vector<SpeakerRecord>& records) {
    std::vector<Utterance> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        Utterance u;
        u.record = r;
        u.waveform = features::read_audio(r.utterance_path);
        if (!r.phn_path.empty() && fs::exists(r.phn_path)) {
            u.phones = parse_phn(r.phn_path);
            u.has_phones = true;
        }
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace moeprof::data
