#pragma once

#include <cmath>
#include <random>
#include <string>

#include "moeprof/numeric/ops.hpp"
#include "moeprof/numeric/params.hpp"

namespace moeprof::model {

/// Per-call state for stochastic layers.
struct ForwardContext {
    bool training = false;
    std::mt19937_64* rng = nullptr;
};

template <typename T>
struct Linear {
    numeric::Var<T> weight;  // [in x out]
    numeric::Var<T> bias;    // [1 x out]

    Linear() = default;

    template <typename Rng>
    Linear(numeric::ParamSet<T>& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
        : weight(ps.add(name + ".weight", numeric::glorot_uniform<T>(in, out, rng))),
          bias(ps.add(name + ".bias", numeric::Tensor<T>(numeric::Shape{1, out}, T{0}))) {}

    numeric::Var<T> operator()(const numeric::Var<T>& x) const {
        return numeric::add_bias(numeric::matmul(x, weight), bias);
    }
};

template <typename T>
struct LayerNorm {
    numeric::Var<T> gain, bias;

    LayerNorm() = default;
    LayerNorm(numeric::ParamSet<T>& ps, const std::string& name, std::size_t dim)
        : gain(ps.add(name + ".gain", numeric::Tensor<T>(numeric::Shape{1, dim}, T{1}))),
          bias(ps.add(name + ".bias", numeric::Tensor<T>(numeric::Shape{1, dim}, T{0}))) {}

    numeric::Var<T> operator()(const numeric::Var<T>& x) const { return numeric::layer_norm(x, gain, bias); }
};

/// Sinusoidal table: PE[pos][2i] = sin(pos / 10000^(2i/d)), PE[pos][2i+1] = cos(...).
template <typename T>
numeric::Tensor<T> sinusoidal_positions(std::size_t frames, std::size_t dim) {
    numeric::Tensor<T> pe = numeric::Tensor<T>::matrix(frames, dim);
    for (std::size_t pos = 0; pos < frames; ++pos) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
            const double a = static_cast<double>(pos) * rate;
            pe(pos, i) = static_cast<T>(i % 2 == 0 ? std::sin(a) : std::cos(a));
        }
    }
    return pe;
}

template <typename T>
numeric::Var<T> apply_dropout(const numeric::Var<T>& x, double p, const ForwardContext& ctx) {
    if (!ctx.training || p <= 0.0) return x;
    if (!ctx.rng) throw ContractError("dropout in training mode needs an RNG");
    return numeric::dropout(x, static_cast<T>(p), true, *ctx.rng);
}

}  // namespace moeprof::model
