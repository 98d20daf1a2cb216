#include "moeprof/data/phones.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "moeprof/errors.hpp"

namespace moeprof::data {

namespace {

const std::unordered_map<std::string, PhoneClass>& phone_table() {
    static const std::unordered_map<std::string, PhoneClass> table = [] {
        std::unordered_map<std::string, PhoneClass> t;
        auto put = [&](PhoneClass c, std::initializer_list<const char*> syms) {
            for (const char* s : syms) t.emplace(s, c);
        };
        put(PhoneClass::Stops, {"b", "d", "g", "p", "t", "k", "dx", "q"});
        put(PhoneClass::Affricates, {"jh", "ch"});
        put(PhoneClass::Fricatives, {"s", "sh", "z", "zh", "f", "th", "v", "dh"});
        put(PhoneClass::Nasals, {"m", "n", "ng", "em", "en", "eng", "nx"});
        put(PhoneClass::Semivowels, {"l", "r", "w", "y", "hh", "hv", "el"});
        put(PhoneClass::Vowels, {"iy", "ih", "eh", "ey", "ae", "aa", "aw", "ay", "ah", "ao", "oy", "ow", "uh", "uw",
                                 "ux", "er", "ax", "ix", "axr", "ax-h"});
        put(PhoneClass::Others, {"pau", "epi", "h#", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl"});
        return t;
    }();
    return table;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string to_string(PhoneClass c) {
    switch (c) {
        case PhoneClass::Stops: return "Stops";
        case PhoneClass::Affricates: return "Affricates";
        case PhoneClass::Fricatives: return "Fricatives";
        case PhoneClass::Nasals: return "Nasals";
        case PhoneClass::Semivowels: return "Semivowels";
        case PhoneClass::Vowels: return "Vowels";
        case PhoneClass::Others: return "Others";
    }
    return "?";
}

PhoneClass phone_class_from_string(const std::string& s) {
    for (PhoneClass c : kPhoneClassTableOrder) {
        if (lower(to_string(c)) == lower(s)) return c;
    }
    throw ConfigError("unknown phone class '" + s + "'");
}

bool is_known_phone(const std::string& symbol) { return phone_table().count(lower(symbol)) != 0; }

PhoneClass phone_class_of(const std::string& symbol) {
    const auto& t = phone_table();
    auto it = t.find(lower(symbol));
    if (it != t.end()) return it->second;
    spdlog::warn("unknown phone symbol '{}' classified as Others", symbol);
    return PhoneClass::Others;
}

PhoneticTranscription parse_phn_text(const std::string& text, const std::string& origin) {
    struct Line {
        PhoneSegment seg;
        std::size_t line_no;
    };
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        long long start = -1, end = -1;
        std::string sym;
        if (!(ls >> start >> end >> sym) || start < 0) {
            throw FormatError(origin + ":" + std::to_string(no) + ": expected 'start end symbol'");
        }
        if (end <= start) {
            throw FormatError(origin + ":" + std::to_string(no) + ": segment end " + std::to_string(end) +
                              " is not after start " + std::to_string(start));
        }
        lines.push_back({{static_cast<std::size_t>(start), static_cast<std::size_t>(end), sym}, no});
    }
    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.seg.start < b.seg.start; });
    PhoneticTranscription out;
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0 && lines[i].seg.start < lines[i - 1].seg.end) {
            throw FormatError(origin + ":" + std::to_string(lines[i].line_no) + ": segment overlaps the one on line " +
                              std::to_string(lines[i - 1].line_no));
        }
        out.push_back(lines[i].seg);
    }
    return out;
}

PhoneticTranscription parse_phn(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open transcription: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_phn_text(ss.str(), path.string());
}

void write_phn(const std::filesystem::path& path, const PhoneticTranscription& t) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& s : t) out << s.start << ' ' << s.end << ' ' << s.symbol << '\n';
}

features::Waveform mask_phone_class(const features::Waveform& w, const PhoneticTranscription& t, PhoneClass c) {
    features::Waveform out = w;
    const std::size_t n = w.samples.size();
    for (const auto& seg : t) {
        if (phone_class_of(seg.symbol) != c) continue;
        std::size_t start = seg.start, end = seg.end;
        if (end > n) {
            spdlog::warn("phone segment [{}, {}) '{}' exceeds waveform length {}; clipped", seg.start, seg.end,
                         seg.symbol, n);
            end = n;
        }
        for (std::size_t i = start; i < end; ++i) out.samples[i] = 0.0f;
    }
    return out;
}

}  // namespace moeprof::data
