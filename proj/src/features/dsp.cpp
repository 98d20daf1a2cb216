#include "moeprof/features/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "moeprof/errors.hpp"

namespace moeprof::features {

using numeric::Shape;
using numeric::Tensor;

std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::fbank: return "fbank";
        case FeatureKind::mfcc: return "mfcc";
        case FeatureKind::conv: return "conv";
    }
    return "?";
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "fbank") return FeatureKind::fbank;
    if (s == "mfcc") return FeatureKind::mfcc;
    if (s == "conv") return FeatureKind::conv;
    throw ConfigError("unknown feature kind '" + s + "' (expected fbank|mfcc|conv)");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

void require_16k(const Waveform& w) {
    if (w.sample_rate != kExpectedSampleRate) {
        throw FormatError("features require 16000 Hz audio, got " + std::to_string(w.sample_rate) + " Hz");
    }
}

class PowerSpectrum {
public:
    PowerSpectrum() {
        std::vector<double> in(kFftSize);
        std::vector<fftw_complex> out(kFftSize / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in.data(), out.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~PowerSpectrum() { fftw_destroy_plan(plan_); }
    PowerSpectrum(const PowerSpectrum&) = delete;
    PowerSpectrum& operator=(const PowerSpectrum&) = delete;

    // New-array execute is thread-safe once the plan exists.
    std::vector<double> operator()(std::span<const float> frame) const {
        std::vector<double> in(kFftSize, 0.0);
        for (std::size_t i = 0; i < frame.size() && i < kFftSize; ++i) in[i] = frame[i];
        std::vector<fftw_complex> out(kFftSize / 2 + 1);
        fftw_execute_dft_r2c(plan_, in.data(), out.data());
        std::vector<double> power(kFftSize / 2 + 1);
        for (std::size_t k = 0; k < power.size(); ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        return power;
    }

private:
    fftw_plan plan_;
};

const PowerSpectrum& power_spectrum() {
    static const PowerSpectrum ps;
    return ps;
}

Tensor<float> log_mel_matrix(const Waveform& w) {
    require_16k(w);
    Waveform emph{preemphasize(w.samples), w.sample_rate};
    const Tensor<float> frames = frame_signal(emph);
    Tensor<float> out = Tensor<float>::matrix(frames.rows(), kNumMelBins);
    for (std::size_t t = 0; t < frames.rows(); ++t) {
        const auto lm = log_mel_frame(frames.row_span(t));
        for (std::size_t j = 0; j < kNumMelBins; ++j) out(t, j) = static_cast<float>(lm[j]);
    }
    return out;
}

Tensor<float> with_deltas(const Tensor<float>& base) {
    const Tensor<float> d1 = delta(base, 1);
    const Tensor<float> d2 = delta(d1, 1);
    const std::size_t t = base.rows(), d = base.cols();
    Tensor<float> out = Tensor<float>::matrix(t, 3 * d);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out(i, j) = base(i, j);
            out(i, d + j) = d1(i, j);
            out(i, 2 * d + j) = d2(i, j);
        }
    }
    return out;
}

}  // namespace

std::vector<float> preemphasize(std::span<const float> x, double coeff) {
    std::vector<float> y(x.size());
    if (x.empty()) return y;
    y[0] = x[0];
    for (std::size_t n = 1; n < x.size(); ++n) {
        y[n] = static_cast<float>(static_cast<double>(x[n]) - coeff * static_cast<double>(x[n - 1]));
    }
    return y;
}

Tensor<float> frame_signal(const Waveform& w, double frame_len_s, double frame_shift_s) {
    if (w.sample_rate <= 0) throw FormatError("sample rate must be positive");
    const auto len = static_cast<std::size_t>(std::lround(frame_len_s * w.sample_rate));
    const auto shift = static_cast<std::size_t>(std::lround(frame_shift_s * w.sample_rate));
    if (len == 0 || shift == 0) throw ContractError("frame length and shift must be positive");
    if (w.samples.size() < len) {
        throw LengthError("signal of " + std::to_string(w.samples.size()) + " samples is shorter than one frame; at least " +
                          std::to_string(len) + " samples required");
    }
    const std::size_t t = 1 + (w.samples.size() - len) / shift;
    std::vector<double> window(len);
    for (std::size_t n = 0; n < len; ++n) {
        window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(len - 1));
    }
    Tensor<float> out = Tensor<float>::matrix(t, len);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t n = 0; n < len; ++n) {
            out(i, n) = static_cast<float>(static_cast<double>(w.samples[i * shift + n]) * window[n]);
        }
    }
    return out;
}

const std::vector<std::vector<double>>& mel_filterbank() {
    static const std::vector<std::vector<double>> bank = [] {
        const std::size_t nbins = kFftSize / 2 + 1;
        const double nyquist = kExpectedSampleRate / 2.0;
        const double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(nyquist);
        const double step = (mel_hi - mel_lo) / static_cast<double>(kNumMelBins + 1);
        std::vector<std::vector<double>> b(kNumMelBins, std::vector<double>(nbins, 0.0));
        for (std::size_t m = 0; m < kNumMelBins; ++m) {
            const double left = mel_lo + step * static_cast<double>(m);
            const double center = left + step;
            const double right = center + step;
            for (std::size_t k = 0; k < nbins; ++k) {
                const double mel = hz_to_mel(static_cast<double>(k) * kExpectedSampleRate / static_cast<double>(kFftSize));
                if (mel > left && mel < right) {
                    b[m][k] = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
                }
            }
        }
        return b;
    }();
    return bank;
}

std::vector<double> log_mel_frame(std::span<const float> windowed_frame) {
    const auto power = power_spectrum()(windowed_frame);
    const auto& bank = mel_filterbank();
    std::vector<double> out(kNumMelBins);
    for (std::size_t m = 0; m < kNumMelBins; ++m) {
        double e = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
        out[m] = std::log(std::max(e, kLogFloor));
    }
    return out;
}

std::vector<double> dct_ii(std::span<const double> x, std::size_t num_ceps) {
    const std::size_t n = x.size();
    std::vector<double> c(num_ceps, 0.0);
    for (std::size_t k = 0; k < num_ceps; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                   (2.0 * static_cast<double>(n)));
        }
        const double norm = k == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
        c[k] = norm * acc;
    }
    return c;
}

Tensor<float> delta(const Tensor<float>& features, int order) {
    if (order < 1) throw ContractError("delta order must be >= 1");
    if (order > 1) return delta(delta(features, 1), order - 1);
    const std::size_t t = features.rows(), d = features.cols();
    const auto last = static_cast<std::ptrdiff_t>(t) - 1;
    double denom = 0.0;
    for (std::size_t n = 1; n <= kDeltaWindow; ++n) denom += static_cast<double>(n * n);
    denom *= 2.0;
    auto at = [&](std::ptrdiff_t i, std::size_t j) {
        return static_cast<double>(features(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last)), j));
    };
    Tensor<float> out = Tensor<float>::matrix(t, d);
    for (std::size_t i = 0; i < t; ++i) {
        const auto ii = static_cast<std::ptrdiff_t>(i);
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t n = 1; n <= kDeltaWindow; ++n) {
                const auto nn = static_cast<std::ptrdiff_t>(n);
                acc += static_cast<double>(n) * (at(ii + nn, j) - at(ii - nn, j));
            }
            out(i, j) = static_cast<float>(acc / denom);
        }
    }
    return out;
}

FeatureSequence fbank(const Waveform& w) {
    return FeatureSequence{with_deltas(log_mel_matrix(w)), 0.010, FeatureKind::fbank};
}

FeatureSequence mfcc(const Waveform& w) {
    const Tensor<float> lm = log_mel_matrix(w);
    Tensor<float> ceps = Tensor<float>::matrix(lm.rows(), kNumCeps);
    std::vector<double> row(kNumMelBins);
    for (std::size_t t = 0; t < lm.rows(); ++t) {
        for (std::size_t j = 0; j < kNumMelBins; ++j) row[j] = lm(t, j);
        const auto c = dct_ii(row, kNumCeps);
        for (std::size_t k = 0; k < kNumCeps; ++k) ceps(t, k) = static_cast<float>(c[k]);
    }
    return FeatureSequence{with_deltas(ceps), 0.010, FeatureKind::mfcc};
}

FeatureSequence cmvn(const FeatureSequence& f) {
    const std::size_t t = f.frames.rows(), d = f.frames.cols();
    if (t < 2) throw LengthError("cmvn requires at least 2 frames, got " + std::to_string(t));
    FeatureSequence out = f;
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < t; ++i) mu += f.frames(i, j);
        mu /= static_cast<double>(t);
        double var = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            const double c = f.frames(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(t);
        const double inv = 1.0 / std::sqrt(var + kCmvnEps);
        for (std::size_t i = 0; i < t; ++i) {
            out.frames(i, j) = static_cast<float>((f.frames(i, j) - mu) * inv);
        }
    }
    return out;
}

FeatureSequence extract_features(const Waveform& w, FeatureKind kind) {
    switch (kind) {
        case FeatureKind::fbank: return cmvn(fbank(w));
        case FeatureKind::mfcc: return cmvn(mfcc(w));
        case FeatureKind::conv: break;
    }
    throw ConfigError("conv features are produced by the model's trainable frontend");
}

}  // namespace moeprof::features
