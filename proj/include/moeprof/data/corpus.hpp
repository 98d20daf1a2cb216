#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "moeprof/data/phones.hpp"
#include "moeprof/features/audio.hpp"

namespace moeprof::data {

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// One utterance with its speaker's labels. gender: 0 male, 1 female.
struct SpeakerRecord {
    std::string speaker_id;  // directory name, e.g. "MABC0"
    std::filesystem::path utterance_path;
    std::filesystem::path phn_path;
    int gender = 0;
    int age_years = 0;
    double height_cm = 0.0;
    Split split = Split::train;
};

struct SpeakerInfo {
    int gender = 0;
    int age_years = 0;
    double height_cm = 0.0;
};

inline constexpr double kMinHeightCm = 100.0, kMaxHeightCm = 250.0;
inline constexpr int kMinAge = 10, kMaxAge = 110;

/// "5'10\"" -> 177.8. nullopt if unparseable.
std::optional<double> parse_height_cm(const std::string& s);

/// Whole years elapsed between MM/DD/YY dates (19YY). nullopt if unparseable.
std::optional<int> age_between(const std::string& birth_mmddyy, const std::string& rec_mmddyy);

/// TIMIT SPKRINFO-style table: ID Sex DR Use RecDate BirthDate Ht ...
/// Keys are the 4-character IDs in upper case. Unparseable rows are skipped
/// with a warning.
std::map<std::string, SpeakerInfo> parse_speaker_info(const std::filesystem::path& table_file);
std::map<std::string, SpeakerInfo> parse_speaker_info_text(const std::string& text);

/// Locates SPKRINFO.TXT in root or root/DOC (case-insensitive).
std::optional<std::filesystem::path> find_speaker_info(const std::filesystem::path& root);

/// One record per audio file with a sibling .PHN under TRAIN/ and TEST/
/// (dialect/speaker/utterance). Sorted by path. TRAIN records get
/// Split::train, TEST records Split::test.
std::vector<SpeakerRecord> scan_corpus(const std::filesystem::path& root);

/// Moves floor(15% of n) records to Split::val using a seeded shuffle.
std::pair<std::vector<SpeakerRecord>, std::vector<SpeakerRecord>> split_train_val(std::vector<SpeakerRecord> records,
                                                                                  std::uint64_t seed);

/// scan_corpus + split_train_val on the TRAIN part; TEST untouched.
struct CorpusSplits {
    std::vector<SpeakerRecord> train, val, test;

    const std::vector<SpeakerRecord>& get(Split s) const {
        switch (s) {
            case Split::train: return train;
            case Split::val: return val;
            case Split::test: return test;
        }
        return train;
    }
};
CorpusSplits load_splits(const std::filesystem::path& root, std::uint64_t seed);

/// Audio + transcription held in memory.
struct Utterance {
    SpeakerRecord record;
    features::Waveform waveform;
    PhoneticTranscription phones;
    bool has_phones = false;
};

/// Reads audio (and transcription when present) for every record.
std::vector<Utterance> load_utterances(const std::vector<SpeakerRecord>& records);

}  // namespace moeprof::data
