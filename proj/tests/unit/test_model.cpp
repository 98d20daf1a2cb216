#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "moeprof/losses/losses.hpp"
#include "moeprof/model/encoder.hpp"
#include "moeprof/model/moe_model.hpp"

using namespace moeprof;
using namespace moeprof::model;
using numeric::Tensor;
using numeric::Var;

namespace {

ModelConfig tiny_config(features::FeatureKind kind, ModelMode mode) {
    ModelConfig c;
    c.feature_kind = kind;
    c.mode = mode;
    c.expert.num_layers = 1;
    c.expert.num_heads = 2;
    c.expert.model_dim = 8;
    c.expert.ff_dim = 12;
    c.expert.dropout_p = 0.0;
    c.expert_dim = 6;
    c.head_hidden = 5;
    c.frontend = features::ConvFrontendConfig::wav2vec2_shape(4, 2);
    return c;
}

Tensor<double> random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Tensor<double> t = Tensor<double>::matrix(r, c);
    for (auto& v : t.storage()) v = d(rng);
    return t;
}

// Parameter count written out from the layer list.
std::size_t expected_scalars(const ModelConfig& c) {
    const std::size_t d = c.expert.model_dim, f = c.expert.ff_dim, h = c.expert.num_heads, dh = d / h;
    const std::size_t in = c.input_dim();
    std::size_t layer = 2 * d + h * (3 * (d * dh + dh) + dh * d) + d + 2 * d + (d * f + f) + (f * d + d);
    std::size_t enc = (in * d + d) + c.expert.num_layers * layer + 2 * d;
    std::size_t expert = enc + (2 * d * c.expert_dim + c.expert_dim);
    std::size_t heads = 2 * ((c.expert_dim * c.head_hidden + c.head_hidden) + (c.head_hidden + 1));
    std::size_t frontend = 0;
    if (c.feature_kind == features::FeatureKind::conv) {
        std::size_t cin = 1;
        for (const auto& l : c.frontend.layers) {
            frontend += l.kernel * cin * l.channels + 3 * l.channels;
            cin = l.channels;
        }
    }
    if (c.mode == ModelMode::bi_encoder) return frontend + 2 * expert + (2 * c.expert_dim + 1) + heads;
    return frontend + expert + (c.expert_dim + 1) + heads;
}

}  // namespace

TEST_CASE("output shapes and ranges") {
    for (auto kind : {features::FeatureKind::fbank, features::FeatureKind::mfcc}) {
        SpeakerModel<double> m(tiny_config(kind, ModelMode::bi_encoder), 1);
        std::mt19937_64 rng(2);
        const auto out = m.forward(Var<double>(random_tensor(7, m.config().input_dim(), rng)));
        CHECK(out.age_z.shape() == numeric::Shape{1, 1});
        CHECK(out.height_z.shape() == numeric::Shape{1, 1});
        CHECK(out.gender_p.item() > 0.0);
        CHECK(out.gender_p.item() < 1.0);
        CHECK_THROWS_AS(m.forward(Var<double>(random_tensor(7, m.config().input_dim() + 1, rng))), DimensionError);
    }
    SpeakerModel<float> conv(tiny_config(features::FeatureKind::conv, ModelMode::bi_encoder), 1);
    features::Waveform w;
    w.samples.assign(4000, 0.0f);
    for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = 0.1f * std::sin(0.05f * static_cast<float>(i));
    const auto out = conv.forward(SpeakerModel<float>::make_input(w, features::FeatureKind::conv));
    CHECK(std::isfinite(out.age_z.item()));
    w.samples.resize(300);
    CHECK_THROWS_AS(conv.forward(SpeakerModel<float>::make_input(w, features::FeatureKind::conv)), LengthError);
}

TEST_CASE("parameter count matches the layer list") {
    for (auto kind : {features::FeatureKind::fbank, features::FeatureKind::conv}) {
        for (auto mode : {ModelMode::bi_encoder, ModelMode::single_encoder}) {
            const auto cfg = tiny_config(kind, mode);
            SpeakerModel<float> m(cfg, 0);
            CHECK(m.num_network_scalars() == expected_scalars(cfg));
            CHECK(m.params().num_scalars() == expected_scalars(cfg) + 3);
        }
    }
}

TEST_CASE("encoder without positions is permutation equivariant") {
    ExpertConfig ec;
    ec.num_layers = 2;
    ec.num_heads = 2;
    ec.model_dim = 8;
    ec.ff_dim = 16;
    ec.dropout_p = 0.0;
    ec.use_positional_encoding = false;
    numeric::ParamSet<double> ps;
    std::mt19937_64 rng(3);
    TransformerEncoder<double> enc(ec, 5, ps, "enc", rng);
    const auto x = random_tensor(6, 5, rng);
    const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
    Tensor<double> xp = Tensor<double>::matrix(6, 5);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 5; ++j) xp(i, j) = x(perm[i], j);
    }
    const ForwardContext ctx{false, nullptr};
    const auto y = enc(Var<double>(x), ctx).value();
    const auto yp = enc(Var<double>(xp), ctx).value();
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 8; ++j) CHECK(yp(i, j) == doctest::Approx(y(perm[i], j)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(enc(Var<double>(Tensor<double>(numeric::Shape{0, 5})), ctx), std::exception);
}

TEST_CASE("bi-encoder with shared experts and g = 0.5 equals the single encoder") {
    for (auto kind : {features::FeatureKind::fbank, features::FeatureKind::conv}) {
        SpeakerModel<double> single(tiny_config(kind, ModelMode::single_encoder), 11);
        SpeakerModel<double> bi(tiny_config(kind, ModelMode::bi_encoder), 22);
        copy_params(single.params(), bi.params(), "expert.", "male.");
        copy_params(single.params(), bi.params(), "expert.", "female.");
        copy_params(single.params(), bi.params(), "head.", "head.");
        copy_params(single.params(), bi.params(), "frontend.", "frontend.");

        std::mt19937_64 rng(5);
        Var<double> input;
        if (kind == features::FeatureKind::conv) {
            input = Var<double>(random_tensor(1200, 1, rng));
        } else {
            input = Var<double>(random_tensor(9, single.config().input_dim(), rng));
        }
        ForwardOptions opts;
        opts.gate_override = 0.5;
        const auto a = single.forward(input);
        const auto b = bi.forward(input, opts);
        CHECK(std::abs(a.age_z.item() - b.age_z.item()) < 1e-6);
        CHECK(std::abs(a.height_z.item() - b.height_z.item()) < 1e-6);
    }
}

TEST_CASE("gate endpoints select one expert") {
    SpeakerModel<double> bi(tiny_config(features::FeatureKind::fbank, ModelMode::bi_encoder), 3);
    std::mt19937_64 rng(6);
    const Var<double> x(random_tensor(5, bi.config().input_dim(), rng));
    const ForwardContext ctx{false, nullptr};
    const auto enc_in = bi.encode_input(x);
    const auto e_m = bi.male_expert()(enc_in, ctx);
    const auto e_f = bi.female_expert()(enc_in, ctx);
    const auto at0 = combine_experts(e_m, e_f, Var<double>(Tensor<double>::scalar(0.0))).value();
    const auto at1 = combine_experts(e_m, e_f, Var<double>(Tensor<double>::scalar(1.0))).value();
    CHECK(at0 == e_m.value());
    CHECK(at1 == e_f.value());
}

TEST_CASE("detached gate stops regression gradients into the gate") {
    SpeakerModel<double> bi(tiny_config(features::FeatureKind::fbank, ModelMode::bi_encoder), 4);
    std::mt19937_64 rng(8);
    const Var<double> x(random_tensor(5, bi.config().input_dim(), rng));
    ForwardOptions opts;
    opts.detach_gate = true;
    const auto out = bi.forward(x, opts);
    numeric::backward(numeric::add(out.age_z, out.height_z));
    const auto g = bi.params().get("gate.weight").grad();
    for (double v : g.data()) CHECK(v == 0.0);
    bi.params().zero_grad();
    const auto live = bi.forward(x);
    numeric::backward(numeric::add(live.age_z, live.height_z));
    const auto g2 = bi.params().get("gate.weight").grad();
    double sum = 0;
    for (double v : g2.data()) sum += std::abs(v);
    CHECK(sum > 0.0);
}

TEST_CASE("end-to-end gradient check of the tiny bi-encoder") {
    auto cfg = tiny_config(features::FeatureKind::fbank, ModelMode::bi_encoder);
    SpeakerModel<double> m(cfg, 9);
    std::mt19937_64 rng(10);
    const Var<double> x(random_tensor(4, cfg.input_dim(), rng));
    losses::NormStats norm{40.0, 10.0, 170.0, 8.0};
    const losses::Targets target{180.0, 30.0, 1.0};
    // Move the log-variances off zero so every term is exercised.
    m.params().get("loss.s_height").mutable_value()[0] = 0.3;
    m.params().get("loss.s_age").mutable_value()[0] = -0.2;
    m.params().get("loss.s_gender").mutable_value()[0] = 0.1;
    auto f = [&] {
        const auto out = m.forward(x);
        return losses::uncertainty_loss(losses::task_losses(out, target, norm), m.s_height(), m.s_age(), m.s_gender());
    };
    std::vector<Var<double>> inputs;
    for (auto& [name, v] : m.params().entries()) inputs.push_back(v);
    const auto res = moeprof::testing::gradcheck(f, inputs, 1e-6, 3);
    CHECK(res.checked > 500);
    CHECK(res.max_rel_err < 1e-3);
}
