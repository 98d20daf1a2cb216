#pragma once

#include <utility>

#include "moeprof/features/audio.hpp"

namespace moeprof::losses {

struct LabeledSample {
    features::Waveform waveform;
    double height_cm = 0.0;
    double age_years = 0.0;
    double gender = 0.0;  // 0 male, 1 female; fractional after mixup
};

/// Tiles `w` end-to-end and truncates to exactly `length` samples.
features::Waveform tile_to_length(const features::Waveform& w, std::size_t length);

/// Repeats the shorter waveform until both have the longer length; the
/// longer one is returned unchanged.
std::pair<features::Waveform, features::Waveform> length_align(const features::Waveform& a,
                                                               const features::Waveform& b);

/// lambda * a + (1 - lambda) * b for audio and every label, after length
/// alignment. Each mixed value is kept inside the closed interval spanned
/// by its two sources.
LabeledSample mixup(const LabeledSample& a, const LabeledSample& b, double lambda);

}  // namespace moeprof::losses
