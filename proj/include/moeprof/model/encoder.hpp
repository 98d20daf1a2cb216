#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "moeprof/model/config.hpp"
#include "moeprof/model/layers.hpp"

namespace moeprof::model {

/// Pre-norm transformer encoder:
///   x = in_proj(features) [+ positions]
///   x = x + drop(MHA(LN(x)));  x = x + drop(FFN(LN(x)))   (per layer)
///   out = LN(x)
/// Attention heads keep separate q/k/v/o projections, so the head outputs
/// are summed through their own output slices instead of concatenated.
template <typename T>
class TransformerEncoder {
public:
    TransformerEncoder() = default;

    template <typename Rng>
    TransformerEncoder(const ExpertConfig& cfg, std::size_t input_dim, numeric::ParamSet<T>& ps,
                       const std::string& prefix, Rng& rng)
        : cfg_(cfg) {
        cfg_.validate();
        const std::size_t d = cfg_.model_dim, dh = d / cfg_.num_heads;
        in_proj_ = Linear<T>(ps, prefix + ".in_proj", input_dim, d, rng);
        for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
            const std::string lp = prefix + ".layer" + std::to_string(l);
            Block b;
            b.ln_attn = LayerNorm<T>(ps, lp + ".ln_attn", d);
            for (std::size_t h = 0; h < cfg_.num_heads; ++h) {
                const std::string hp = lp + ".attn.head" + std::to_string(h);
                Head head;
                head.q = Linear<T>(ps, hp + ".q", d, dh, rng);
                head.k = Linear<T>(ps, hp + ".k", d, dh, rng);
                head.v = Linear<T>(ps, hp + ".v", d, dh, rng);
                head.out = ps.add(hp + ".out", numeric::glorot_uniform<T>(dh, d, rng));
                b.heads.push_back(head);
            }
            b.attn_bias = ps.add(lp + ".attn.out_bias", numeric::Tensor<T>(numeric::Shape{1, d}, T{0}));
            b.ln_ff = LayerNorm<T>(ps, lp + ".ln_ff", d);
            b.ff1 = Linear<T>(ps, lp + ".ff1", d, cfg_.ff_dim, rng);
            b.ff2 = Linear<T>(ps, lp + ".ff2", cfg_.ff_dim, d, rng);
            blocks_.push_back(std::move(b));
        }
        ln_final_ = LayerNorm<T>(ps, prefix + ".ln_final", d);
    }

    /// [T x input_dim] -> [T x model_dim].
    numeric::Var<T> operator()(const numeric::Var<T>& features, const ForwardContext& ctx) const {
        using namespace numeric;
        if (features.rows() == 0) throw LengthError("transformer encoder needs at least one frame");
        Var<T> x = in_proj_(features);
        if (cfg_.use_positional_encoding) {
            x = add(x, Var<T>(sinusoidal_positions<T>(x.rows(), cfg_.model_dim)));
        }
        const T inv_sqrt_dh = T{1} / std::sqrt(static_cast<T>(cfg_.model_dim / cfg_.num_heads));
        for (const auto& b : blocks_) {
            const Var<T> h = b.ln_attn(x);
            Var<T> attn;
            for (const auto& head : b.heads) {
                const Var<T> scores = scale(matmul(head.q(h), transpose(head.k(h))), inv_sqrt_dh);
                const Var<T> ctx_h = matmul(softmax_rows(scores), head.v(h));
                const Var<T> proj = matmul(ctx_h, head.out);
                attn = attn.defined() ? add(attn, proj) : proj;
            }
            attn = add_bias(attn, b.attn_bias);
            x = add(x, apply_dropout(attn, cfg_.dropout_p, ctx));
            const Var<T> ff = b.ff2(gelu(b.ff1(b.ln_ff(x))));
            x = add(x, apply_dropout(ff, cfg_.dropout_p, ctx));
        }
        return ln_final_(x);
    }

    const ExpertConfig& config() const { return cfg_; }

private:
    struct Head {
        Linear<T> q, k, v;
        numeric::Var<T> out;  // [dh x d]
    };
    struct Block {
        LayerNorm<T> ln_attn;
        std::vector<Head> heads;
        numeric::Var<T> attn_bias;
        LayerNorm<T> ln_ff;
        Linear<T> ff1, ff2;
    };

    ExpertConfig cfg_;
    Linear<T> in_proj_;
    std::vector<Block> blocks_;
    LayerNorm<T> ln_final_;
};

}  // namespace moeprof::model
