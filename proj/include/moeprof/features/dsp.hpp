#pragma once

#include <span>
#include <string>
#include <vector>

#include "moeprof/features/audio.hpp"
#include "moeprof/numeric/tensor.hpp"

namespace moeprof::features {

enum class FeatureKind { fbank, mfcc, conv };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

/// T x D acoustic features for one utterance.
struct FeatureSequence {
    numeric::Tensor<float> frames;
    double frame_shift_s = 0.010;
    FeatureKind kind = FeatureKind::fbank;

    std::size_t num_frames() const { return frames.rows(); }
    std::size_t dim() const { return frames.cols(); }
};

// Front-end constants. None of these come from the model description; they
// are the common Kaldi/HTK-style defaults.
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kNumMelBins = 80;
inline constexpr std::size_t kNumCeps = 16;
inline constexpr double kPreemphasis = 0.97;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kCmvnEps = 1e-10;
inline constexpr std::size_t kDeltaWindow = 2;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Hamming-windowed frames, T = 1 + floor((N - L) / S) rows of L samples.
/// Throws LengthError if the signal is shorter than one frame.
numeric::Tensor<float> frame_signal(const Waveform& w, double frame_len_s = 0.025, double frame_shift_s = 0.010);

/// y[0] = x[0], y[n] = x[n] - coeff * x[n-1].
std::vector<float> preemphasize(std::span<const float> x, double coeff = kPreemphasis);

/// 80 x 257 triangular HTK-mel filter weights over 0..8000 Hz.
const std::vector<std::vector<double>>& mel_filterbank();

/// Natural-log mel energies of one already-windowed frame (zero padded to 512).
std::vector<double> log_mel_frame(std::span<const float> windowed_frame);

/// Orthonormal DCT-II of a log-mel vector, first `num_ceps` coefficients.
std::vector<double> dct_ii(std::span<const double> x, std::size_t num_ceps);

/// Regression deltas over time (window +-2, edge frames replicated).
/// order 2 is delta applied twice.
numeric::Tensor<float> delta(const numeric::Tensor<float>& features, int order = 1);

/// Log mel energies + deltas + delta-deltas, D = 240. No CMVN.
FeatureSequence fbank(const Waveform& w);

/// 16 cepstra + deltas + delta-deltas, D = 48. No CMVN.
FeatureSequence mfcc(const Waveform& w);

/// Per-utterance, per-dimension mean/variance normalization. T >= 2.
FeatureSequence cmvn(const FeatureSequence& f);

/// fbank or mfcc followed by CMVN; the input the encoders see.
FeatureSequence extract_features(const Waveform& w, FeatureKind kind);

}  // namespace moeprof::features
