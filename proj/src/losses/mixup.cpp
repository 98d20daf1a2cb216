#include "moeprof/losses/mixup.hpp"

#include <algorithm>

#include "moeprof/errors.hpp"

namespace moeprof::losses {

namespace {

double mix(double a, double b, double lambda) {
    const double v = lambda * a + (1.0 - lambda) * b;
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace

features::Waveform tile_to_length(const features::Waveform& w, std::size_t length) {
    if (w.samples.empty()) throw ContractError("cannot tile an empty waveform");
    features::Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.resize(length);
    const std::size_t n = w.samples.size();
    for (std::size_t i = 0; i < length; ++i) out.samples[i] = w.samples[i % n];
    return out;
}

std::pair<features::Waveform, features::Waveform> length_align(const features::Waveform& a,
                                                               const features::Waveform& b) {
    if (a.samples.empty() || b.samples.empty()) throw ContractError("length_align: waveforms must be non-empty");
    if (a.size() == b.size()) return {a, b};
    if (a.size() < b.size()) return {tile_to_length(a, b.size()), b};
    return {a, tile_to_length(b, a.size())};
}

LabeledSample mixup(const LabeledSample& a, const LabeledSample& b, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("mixup: lambda must lie in [0, 1]");
    if (a.waveform.sample_rate != b.waveform.sample_rate) throw ContractError("mixup: sample rates differ");
    const auto [xa, xb] = length_align(a.waveform, b.waveform);
    LabeledSample out;
    out.waveform.sample_rate = xa.sample_rate;
    out.waveform.samples.resize(xa.size());
    for (std::size_t i = 0; i < xa.size(); ++i) {
        out.waveform.samples[i] = static_cast<float>(mix(xa.samples[i], xb.samples[i], lambda));
    }
    out.height_cm = mix(a.height_cm, b.height_cm, lambda);
    out.age_years = mix(a.age_years, b.age_years, lambda);
    out.gender = mix(a.gender, b.gender, lambda);
    return out;
}

}  // namespace moeprof::losses
