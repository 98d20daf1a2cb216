#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "moeprof/features/audio.hpp"

namespace moeprof::data {

enum class PhoneClass { Stops, Affricates, Fricatives, Nasals, Semivowels, Vowels, Others };

/// Row order of the masking table.
inline constexpr std::array<PhoneClass, 7> kPhoneClassTableOrder = {
    PhoneClass::Vowels,     PhoneClass::Nasals, PhoneClass::Semivowels, PhoneClass::Affricates,
    PhoneClass::Fricatives, PhoneClass::Stops,  PhoneClass::Others};

std::string to_string(PhoneClass c);
PhoneClass phone_class_from_string(const std::string& s);

/// Class of a TIMIT phone symbol (case-insensitive). Stop closures and
/// silences are Others. Unknown symbols are Others and logged.
PhoneClass phone_class_of(const std::string& symbol);

/// True if `symbol` is in the documented table.
bool is_known_phone(const std::string& symbol);

struct PhoneSegment {
    std::size_t start = 0;  // sample index, inclusive
    std::size_t end = 0;    // exclusive
    std::string symbol;
};

/// Sorted, non-overlapping segments with start < end.
using PhoneticTranscription = std::vector<PhoneSegment>;

/// Parses "start end symbol" lines. Lines are sorted by start; empty or
/// overlapping segments raise FormatError naming the line number.
PhoneticTranscription parse_phn(const std::filesystem::path& path);
PhoneticTranscription parse_phn_text(const std::string& text, const std::string& origin = "<text>");

void write_phn(const std::filesystem::path& path, const PhoneticTranscription& t);

/// Zeroes every sample inside segments of class `c`; all other samples are
/// copied bit for bit. Segments beyond the waveform are clipped (warning).
features::Waveform mask_phone_class(const features::Waveform& w, const PhoneticTranscription& t, PhoneClass c);

}  // namespace moeprof::data
