#pragma once

#include <filesystem>
#include <vector>

namespace moeprof::features {

inline constexpr int kExpectedSampleRate = 16000;

/// Mono audio in [-1, 1].
struct Waveform {
    std::vector<float> samples;
    int sample_rate = kExpectedSampleRate;

    std::size_t size() const noexcept { return samples.size(); }
};

/// Reads a 16-bit PCM RIFF/WAVE or NIST SPHERE file into a mono waveform.
/// int16 samples are scaled by 1/32768. Throws FormatError for unsupported
/// or truncated files and ChannelError for multi-channel audio.
Waveform read_audio(const std::filesystem::path& path);

/// Writes a canonical 44-byte-header 16-bit mono PCM WAV.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Writes a NIST SPHERE (NIST_1A, little-endian pcm) file; used to build
/// fixtures with TIMIT's native header.
void write_sphere(const std::filesystem::path& path, const Waveform& w);

}  // namespace moeprof::features
