#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace moeprof::data {

/// Where the age-dependent spectral tilt is planted.
enum class AgeCue {
    all_voiced,   // vowels and nasals
    vowels_only,  // nasals use a fixed tilt; only vowel segments carry age
};

struct SynthOptions {
    std::uint64_t seed = 0;
    std::size_t n_speakers = 8;
    std::size_t utts_per_speaker = 2;
    double min_duration_s = 0.8;
    double max_duration_s = 1.2;
    AgeCue age_cue = AgeCue::all_voiced;
    /// Label every segment as the vowel "aa" (one phone class per file).
    bool single_class = false;
};

/// Speaker metadata as sampled by the generator.
struct SynthSpeaker {
    std::string id;   // 4-character table ID
    std::string dir;  // sex prefix + id
    int gender = 0;
    int age_years = 0;
    int height_inches = 0;
    double f0_hz = 0.0;
    bool test = false;
};

// Male f0 is drawn from [100, 140] Hz and female from [180, 240] Hz, so any
// threshold in (140, 180) separates them.
inline constexpr double kMaleF0Max = 140.0;
inline constexpr double kFemaleF0Min = 180.0;

/// Deterministic speaker table for the given options (no I/O).
std::vector<SynthSpeaker> synth_speakers(const SynthOptions& opts);

/// Writes a TIMIT-layout tree under root: {TRAIN,TEST}/DR<n>/<speaker>/SX<k>.WAV
/// (16-bit PCM) + .PHN, and DOC/SPKRINFO.TXT. Each utterance is a harmonic
/// tone whose f0 encodes gender, whose spectral tilt grows with age and
/// whose amplitude-modulation depth grows with height. Byte-identical per
/// seed. Throws ContractError for fewer than two speakers.
std::vector<SynthSpeaker> synth_corpus(const std::filesystem::path& root, const SynthOptions& opts);

}  // namespace moeprof::data
