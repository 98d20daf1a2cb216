#pragma once

#include <random>
#include <string>
#include <vector>

#include "moeprof/errors.hpp"
#include "moeprof/features/audio.hpp"
#include "moeprof/numeric/ops.hpp"
#include "moeprof/numeric/params.hpp"

namespace moeprof::features {

struct ConvLayerSpec {
    std::size_t channels = 32;
    std::size_t kernel = 3;
    std::size_t stride = 2;
};

/// Stack of strided 1-D convolutions shaped like the wav2vec 2.0 feature
/// encoder; the first `num_frozen_layers` layers receive no gradient.
struct ConvFrontendConfig {
    std::vector<ConvLayerSpec> layers;
    std::size_t num_frozen_layers = 5;

    /// Kernels 10,3,3,3,3,2,2 and strides 5,2,2,2,2,2,2 (20 ms hop,
    /// 25 ms receptive field at 16 kHz).
    static ConvFrontendConfig wav2vec2_shape(std::size_t channels = 32, std::size_t frozen = 5) {
        ConvFrontendConfig c;
        c.layers = {{channels, 10, 5}, {channels, 3, 2}, {channels, 3, 2}, {channels, 3, 2},
                    {channels, 3, 2},  {channels, 2, 2}, {channels, 2, 2}};
        c.num_frozen_layers = frozen;
        return c;
    }

    void validate() const {
        if (layers.empty()) throw ConfigError("conv frontend needs at least one layer");
        if (num_frozen_layers > layers.size()) {
            throw ConfigError("num_frozen_layers (" + std::to_string(num_frozen_layers) + ") exceeds layer count (" +
                              std::to_string(layers.size()) + ")");
        }
        for (const auto& l : layers) {
            if (l.channels < 2 || l.kernel == 0 || l.stride == 0) {
                throw ConfigError("conv layer needs channels >= 2 and positive kernel/stride");
            }
        }
    }

    std::size_t output_dim() const { return layers.back().channels; }

    std::size_t receptive_field() const {
        std::size_t rf = 1;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) rf = (rf - 1) * it->stride + it->kernel;
        return rf;
    }

    std::size_t total_stride() const {
        std::size_t s = 1;
        for (const auto& l : layers) s *= l.stride;
        return s;
    }

    /// floor((N - receptive_field) / total_stride) + 1; 0 if N is too short.
    std::size_t output_frames(std::size_t num_samples) const {
        const std::size_t rf = receptive_field();
        if (num_samples < rf) return 0;
        return (num_samples - rf) / total_stride() + 1;
    }
};

template <typename T>
class ConvFrontend {
public:
    ConvFrontend() = default;

    template <typename Rng>
    ConvFrontend(ConvFrontendConfig cfg, numeric::ParamSet<T>& params, const std::string& prefix, Rng& rng)
        : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::size_t cin = 1;
        for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
            const auto& spec = cfg_.layers[i];
            const bool trainable = i >= cfg_.num_frozen_layers;
            const std::string p = prefix + ".conv" + std::to_string(i);
            Layer l;
            l.weight = params.add(p + ".weight", numeric::he_normal<T>(spec.kernel * cin, spec.channels, rng), trainable);
            l.bias = params.add(p + ".bias", numeric::Tensor<T>(numeric::Shape{1, spec.channels}, T{0}), trainable);
            l.gain = params.add(p + ".ln_gain", numeric::Tensor<T>(numeric::Shape{1, spec.channels}, T{1}), trainable);
            l.shift = params.add(p + ".ln_bias", numeric::Tensor<T>(numeric::Shape{1, spec.channels}, T{0}), trainable);
            layers_.push_back(l);
            cin = spec.channels;
        }
    }

    const ConvFrontendConfig& config() const { return cfg_; }

    /// Waveform [N x 1] -> frames [output_frames(N) x channels].
    numeric::Var<T> operator()(const numeric::Var<T>& wave) const {
        if (wave.cols() != 1) throw DimensionError("conv frontend expects an N x 1 waveform");
        const std::size_t rf = cfg_.receptive_field();
        if (wave.rows() < rf) {
            throw LengthError("waveform of " + std::to_string(wave.rows()) +
                              " samples is shorter than the conv frontend receptive field of " + std::to_string(rf) +
                              " samples");
        }
        numeric::Var<T> x = wave;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& spec = cfg_.layers[i];
            x = numeric::conv1d(x, layers_[i].weight, layers_[i].bias, spec.kernel, spec.stride);
            x = numeric::gelu(numeric::layer_norm(x, layers_[i].gain, layers_[i].shift));
        }
        return x;
    }

    numeric::Var<T> operator()(const Waveform& w) const {
        numeric::Tensor<T> t(numeric::Shape{w.samples.size(), 1});
        for (std::size_t i = 0; i < w.samples.size(); ++i) t[i] = static_cast<T>(w.samples[i]);
        return (*this)(numeric::Var<T>(std::move(t)));
    }

private:
    struct Layer {
        numeric::Var<T> weight, bias, gain, shift;
    };
    ConvFrontendConfig cfg_;
    std::vector<Layer> layers_;
};

}  // namespace moeprof::features
